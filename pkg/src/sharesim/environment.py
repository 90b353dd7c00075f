"""Environments, the agent-environment loop, dyadic mood dynamics and rewards."""

from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .action import decide
from .appraisal import Agent, CoreValueVector, build_snapshot, judge
from .emotion import DEFAULT_TABLE, EmotionTable, classify_emotions, surprise
from .errors import DimensionMismatch, InvalidParams, NonFiniteResult
from .numerics import as_matrix, as_vector
from .perception import classify


def apple_matrix(dt: float = 1.0) -> np.ndarray:
    """Drag-free ballistic update acting on (acceleration, velocity, position)."""
    return np.array([
        [1.0, 0.0, 0.0],
        [dt, 1.0, 0.0],
        [0.5 * dt * dt, dt, 1.0],
    ])


class Environment:
    """Maps an action vector to the next external stimulus.

    ``evaluate`` never changes the environment; ``step`` evaluates and then
    commits any internal state.
    """

    kind = "abstract"
    action_dim: int | None = None
    stimulus_dim: int | None = None

    def evaluate(self, a) -> np.ndarray:
        raise NotImplementedError

    def step(self, a) -> np.ndarray:
        return self.evaluate(a)

    def jacobian(self, a) -> np.ndarray:
        raise NotImplementedError(f"{self.kind} environments have no closed-form Jacobian")

    def _check_action(self, a) -> np.ndarray:
        a = as_vector(a, "action")
        if self.action_dim is not None and a.size != self.action_dim:
            raise DimensionMismatch(f"{self.kind} environment expects {self.action_dim} action channels, got {a.size}")
        return a


class IdentityEnvironment(Environment):
    kind = "identity"

    def __init__(self, dim: int):
        if dim < 1:
            raise InvalidParams("identity environment needs dim >= 1")
        self.action_dim = self.stimulus_dim = int(dim)

    def evaluate(self, a) -> np.ndarray:
        return self._check_action(a).copy()

    def jacobian(self, a) -> np.ndarray:
        self._check_action(a)
        return np.eye(self.action_dim)


class LinearEnvironment(Environment):
    kind = "linear"

    def __init__(self, matrix):
        m = as_matrix(matrix, "environment matrix")
        m.setflags(write=False)
        self.matrix = m
        self.stimulus_dim, self.action_dim = m.shape

    def evaluate(self, a) -> np.ndarray:
        a = self._check_action(a)
        # overflow surfaces as a non-finite stimulus, which the loop reports
        with np.errstate(over="ignore", invalid="ignore"):
            return self.matrix @ a

    def jacobian(self, a) -> np.ndarray:
        self._check_action(a)
        return self.matrix.copy()


def step_linear(env: LinearEnvironment, a) -> np.ndarray:
    return env.step(a)


@dataclass(frozen=True)
class InfluenceFunction:
    """How one partner's mood pushes the other's: linear, or piecewise linear through breakpoints.

    Piecewise functions are held constant beyond their outer breakpoints.
    """

    kind: str = "linear"
    slope: float = 0.0
    breakpoints: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        if self.kind == "linear":
            if not np.isfinite(self.slope):
                raise InvalidParams("influence slope must be finite")
        elif self.kind == "piecewise":
            pts = tuple((float(x), float(y)) for x, y in self.breakpoints)
            if not pts:
                raise InvalidParams("piecewise influence needs at least one breakpoint")
            xs = [x for x, _ in pts]
            if any(b <= a for a, b in zip(xs, xs[1:])):
                raise InvalidParams("influence breakpoints must be strictly increasing")
            if not np.all(np.isfinite(pts)):
                raise InvalidParams("influence breakpoints must be finite")
            object.__setattr__(self, "breakpoints", pts)
        else:
            raise InvalidParams(f"unknown influence kind {self.kind!r}")

    @classmethod
    def linear(cls, slope: float) -> "InfluenceFunction":
        return cls("linear", float(slope))

    @classmethod
    def piecewise(cls, points: Sequence[tuple[float, float]]) -> "InfluenceFunction":
        return cls("piecewise", 0.0, tuple(points))

    def __call__(self, x: float) -> float:
        if self.kind == "linear":
            return self.slope * x
        xs, ys = zip(*self.breakpoints)
        return float(np.interp(x, xs, ys))


@dataclass(frozen=True)
class DyadParams:
    r0: float = 0.0
    r1: float = 0.0
    i10: InfluenceFunction = field(default_factory=InfluenceFunction)
    i01: InfluenceFunction = field(default_factory=InfluenceFunction)
    b_j0: float = 0.0
    b_j1: float = 0.0


class DyadEnvironment(Environment):
    """Two coupled moods (s0, s1).

    Without an action both moods follow their update equations. Given a
    one-channel action from agent 0, that action becomes the next s0 and only
    the partner's equation is applied.
    """

    kind = "dyad"
    stimulus_dim = 2

    def __init__(self, params: DyadParams, state=(0.0, 0.0)):
        self.params = params
        self.state = as_vector(state, "dyad state")
        if self.state.size != 2:
            raise DimensionMismatch("dyad state has exactly two components")
        self.action_dim = 1

    def _partner(self, s0: float, s1: float) -> float:
        p = self.params
        return p.r1 * s1 + p.i01(s0) + p.b_j1

    def _self(self, s0: float, s1: float) -> float:
        p = self.params
        return p.r0 * s0 + p.i10(s1) + p.b_j0

    def evaluate(self, a=None) -> np.ndarray:
        s0, s1 = self.state
        if a is not None:
            a = self._check_action(a)
        with np.errstate(over="ignore", invalid="ignore"):
            first = self._self(s0, s1) if a is None else a[0]
            new = np.array([first, self._partner(s0, s1)])
        if not np.all(np.isfinite(new)):
            raise NonFiniteResult("dyad update produced a non-finite mood")
        return new

    def step(self, a=None) -> np.ndarray:
        new = self.evaluate(a)
        self.state = new
        return new.copy()

    def jacobian(self, a) -> np.ndarray:
        self._check_action(a)
        # the partner's next mood depends on the current state only
        return np.array([[1.0], [0.0]])


def step_dyad(env: DyadEnvironment) -> tuple[float, float]:
    """Advance both moods simultaneously from the old state."""
    s0, s1 = env.step(None)
    return float(s0), float(s1)


def expected_core_values(agent: Agent, perceived_env: Environment, a) -> CoreValueVector:
    s_tilde = perceived_env.evaluate(a)
    if s_tilde.size != agent.classification.input_dim:
        raise DimensionMismatch(
            f"perceived environment produces {s_tilde.size} stimuli, classification expects "
            f"{agent.classification.input_dim}"
        )
    return judge(agent, classify(agent.classification, s_tilde)[-1])


@dataclass(frozen=True)
class TrajectoryRecord:
    """One pass of the loop.

    ``surprise`` and ``reward`` are None at t=0 (no previous action); surprise
    is also None when no perceived environment is supplied.
    """

    t: int
    s_tilde: tuple[float, ...]
    s_internal: tuple[float, ...]
    v: tuple[float, ...]
    a_tilde: tuple[float, ...]
    emotions: tuple[str, ...]
    surprise: float | None
    reward: tuple[float, ...] | None


def _finite(name: str, x: np.ndarray, t: int):
    if not np.all(np.isfinite(x)):
        raise NonFiniteResult(f"{name} became non-finite at t={t}")


def run_loop(agent: Agent, real_env: Environment, perceived_env: Environment | None, s_tilde0, steps: int,
             table: EmotionTable = DEFAULT_TABLE, tracked: Sequence[int] = (0, 1),
             rho_pairs: Sequence[tuple[int, int]] = (), core_value: int = 0) -> list[TrajectoryRecord]:
    """Alternate perceive-judge-decide with the environment for ``steps`` transitions.

    Returns ``steps + 1`` records. The environments passed in are copied, so a
    stateful environment can be reused for another run. On a non-finite value
    the loop stops and the raised :class:`NonFiniteResult` carries the records
    produced so far.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    real_env = copy.deepcopy(real_env)
    perceived_env = copy.deepcopy(perceived_env)
    tracked = list(tracked)
    s1 = tracked[0] if tracked else agent.self_index
    s2 = tracked[1] if len(tracked) > 1 else None
    pairs = list(rho_pairs)
    if s2 is not None and (s1, s2) not in pairs:
        pairs.append((s1, s2))

    s_tilde = as_vector(s_tilde0, "initial stimulus")
    records: list[TrajectoryRecord] = []
    prev_v = None
    expected = None
    try:
        for t in range(steps + 1):
            responses = classify(agent.classification, s_tilde)
            s = responses[-1].values
            s_prev = responses[-2].values if len(responses) > 1 else s_tilde
            v = judge(agent, s).values
            _finite("core values", v, t)
            snap = build_snapshot(agent, s, tracked, pairs, s_prev=s_prev)
            emotions = tuple(m.label for m in classify_emotions(snap, table, core_value, s1, s2))
            a = decide(agent, v).values
            _finite("action", a, t)
            records.append(TrajectoryRecord(
                t=t,
                s_tilde=tuple(s_tilde.tolist()),
                s_internal=tuple(s.tolist()),
                v=tuple(v.tolist()),
                a_tilde=tuple(a.tolist()),
                emotions=emotions,
                surprise=None if expected is None else surprise(expected, v),
                reward=None if prev_v is None else tuple((v - prev_v).tolist()),
            ))
            if t == steps:
                break
            if perceived_env is not None:
                expected = expected_core_values(agent, perceived_env, a)
                perceived_env.step(a)
            s_tilde = real_env.step(a)
            if s_tilde.size != agent.classification.input_dim:
                raise DimensionMismatch(
                    f"environment produced {s_tilde.size} stimuli, classification expects "
                    f"{agent.classification.input_dim}"
                )
            _finite("stimulus", s_tilde, t + 1)
            prev_v = v
    except NonFiniteResult as exc:
        raise NonFiniteResult(str(exc), records) from exc
    return records
