from __future__ import annotations

from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from sharesim.appraisal import Agent
from sharesim.numerics import SMOOTH_KINDS
from sharesim.perception import Layer, NetworkStack

GOLDEN = Path(__file__).parent / "golden"


def scenario_path(name: str) -> Path:
    return Path(str(resources.files("sharesim") / "scenarios" / name))


def random_stack(rng: np.random.Generator, dims: list[int], kinds=SMOOTH_KINDS) -> NetworkStack:
    layers = []
    for n_in, n_out in zip(dims, dims[1:]):
        w = rng.normal(scale=1.0, size=(n_out, n_in))
        b = rng.normal(scale=0.5, size=n_out)
        acts = [str(rng.choice(kinds)) for _ in range(n_out)]
        layers.append(Layer(w, b, acts))
    return NetworkStack(tuple(layers))


def random_agent(rng: np.random.Generator, max_dim: int = 6, max_depth: int = 3) -> Agent:
    """Agent with smooth activations; every stack 1..max_depth layers of width 2..max_dim."""

    def dims(first: int) -> list[int]:
        depth = int(rng.integers(1, max_depth + 1))
        return [first] + [int(rng.integers(2, max_dim + 1)) for _ in range(depth)]

    c_dims = dims(int(rng.integers(2, max_dim + 1)))
    j_dims = dims(c_dims[-1])
    d_dims = dims(j_dims[-1])
    return Agent(
        random_stack(rng, c_dims),
        random_stack(rng, j_dims),
        random_stack(rng, d_dims),
        s_ref=rng.normal(scale=0.3, size=c_dims[-1]),
        self_index=0,
        ability_index=1,
        ability_ref=float(rng.normal()),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20201104)


# one line per acceptance criterion, filled in by test_acceptance
ACCEPTANCE_RESULTS: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
