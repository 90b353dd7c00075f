"""Judgement and the derivative-defined appraisal quantities.

Every quantity is a Jacobian entry of the judgement stack (or of the
classification stack composed with an environment), optionally scaled by a
degree of perception.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, InvalidParams, ZeroGradient
from .numerics import analytic_layer_jacobian, as_vector, fd_jacobian
from .perception import NetworkStack, _values, degree_of_perception, perceived_correlation


@dataclass(frozen=True, eq=False)
class Agent:
    """Classification, judgement and decision stacks plus the agent's reference points.

    ``s_ref`` lives at the judgement input. ``self_index`` and ``ability_index``
    name the internal stimuli read as "self" and "own ability"; ``ability_ref``
    is the reference level the ability stimulus is compared against.
    """

    classification: NetworkStack
    judgement: NetworkStack
    decision: NetworkStack
    s_ref: np.ndarray | None = None
    self_index: int = 0
    ability_index: int = 1
    ability_ref: float = 0.0
    action_labels: tuple[str, ...] | None = None
    value_labels: tuple[str, ...] | None = None

    def __post_init__(self):
        c, j, d = self.classification, self.judgement, self.decision
        if j.input_dim != c.output_dim:
            raise DimensionMismatch(
                f"judgement expects {j.input_dim} inputs, classification produces {c.output_dim}"
            )
        if d.input_dim != j.output_dim:
            raise DimensionMismatch(f"decision expects {d.input_dim} inputs, judgement produces {j.output_dim}")
        ref = np.zeros(j.input_dim) if self.s_ref is None else as_vector(_values(self.s_ref), "s_ref")
        if ref.size != j.input_dim:
            raise DimensionMismatch(f"s_ref has length {ref.size}, judgement expects {j.input_dim}")
        ref.setflags(write=False)
        object.__setattr__(self, "s_ref", ref)
        for name in ("self_index", "ability_index"):
            idx = getattr(self, name)
            if not 0 <= idx < j.input_dim:
                raise IndexOutOfRange(f"{name}={idx} outside the judgement input (dim {j.input_dim})")
        if self.self_index == self.ability_index:
            raise InvalidParams("self_index and ability_index must differ")
        labels = tuple(f"a{k}" for k in range(d.output_dim)) if self.action_labels is None else tuple(self.action_labels)
        if len(labels) != d.output_dim:
            raise DimensionMismatch(f"{len(labels)} action labels for {d.output_dim} action channels")
        object.__setattr__(self, "action_labels", labels)
        vlabels = tuple(f"v{k}" for k in range(j.output_dim)) if self.value_labels is None else tuple(self.value_labels)
        if len(vlabels) != j.output_dim:
            raise DimensionMismatch(f"{len(vlabels)} core value labels for {j.output_dim} core values")
        object.__setattr__(self, "value_labels", vlabels)

    @property
    def n_stimuli(self) -> int:
        return self.judgement.input_dim

    @property
    def n_values(self) -> int:
        return self.judgement.output_dim


@dataclass(frozen=True, eq=False)
class CoreValueVector:
    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        v = as_vector(self.values, "core values")
        labels = tuple(self.labels) or tuple(f"v{k}" for k in range(v.size))
        if len(labels) != v.size:
            raise DimensionMismatch(f"{len(labels)} labels for {v.size} core values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return self.values.size


def _internal(agent: Agent, s) -> np.ndarray:
    x = _values(s)
    if x.size != agent.n_stimuli:
        raise DimensionMismatch(f"judgement expects a stimulus of length {agent.n_stimuli}, got {x.size}")
    return x


def _check_value_index(agent: Agent, c: int):
    if not 0 <= c < agent.n_values:
        raise IndexOutOfRange(f"core value index {c} outside 0..{agent.n_values - 1}")


def judge(agent: Agent, s) -> CoreValueVector:
    return CoreValueVector(agent.judgement(_internal(agent, s)), agent.value_labels)


def valence_matrix(agent: Agent, s, method: str = "analytic") -> np.ndarray:
    """Judgement Jacobian at ``s``; entry (c, i) is the valence of stimulus i for core value c."""
    x = _internal(agent, s)
    if method == "analytic":
        return analytic_layer_jacobian(agent.judgement, x)
    if method == "fd":
        return fd_jacobian(agent.judgement, x)
    raise ValueError(f"unknown differentiation method {method!r}")


def valence(agent: Agent, s, i: int, c: int, method: str = "analytic") -> float:
    x = _internal(agent, s)
    if not 0 <= i < x.size:
        raise IndexOutOfRange(f"stimulus index {i} outside 0..{x.size - 1}")
    _check_value_index(agent, c)
    return float(valence_matrix(agent, x, method)[c, i])


def perceived_valence(agent: Agent, s, i: int) -> np.ndarray:
    x = _internal(agent, s)
    delta = degree_of_perception(x, agent.s_ref, i)
    eta = valence_matrix(agent, x)[:, i]
    return eta * delta


def self_worth(agent: Agent, s) -> np.ndarray:
    return perceived_valence(agent, s, agent.self_index)


def relative_self_efficacy(agent: Agent, s) -> np.ndarray:
    x = _internal(agent, s)
    k = agent.ability_index
    return valence_matrix(agent, x)[:, k] * (x[k] - agent.ability_ref)


def _action_column(a, n: int) -> np.ndarray:
    a = as_vector(a, "action")
    if not 0 <= n < a.size:
        raise IndexOutOfRange(f"action index {n} outside 0..{a.size - 1}")
    return a


def efficacy(env, a_tilde, n: int, delta_a: float, method: str = "fd") -> np.ndarray:
    """Change in every external stimulus caused by moving action channel ``n`` by ``delta_a``.

    ``method="fd"`` differentiates through ``env.evaluate``; ``"analytic"``
    uses the environment's exact Jacobian where it has one.
    """
    a = _action_column(a_tilde, n)
    if method == "fd":
        col = fd_jacobian(env.evaluate, a)[:, n]
    elif method == "analytic":
        col = env.jacobian(a)[:, n]
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    return col * delta_a


def self_efficacy(agent: Agent, perceived_env, a0, n: int, delta_a: float, method: str = "fd") -> np.ndarray:
    """Change in the agent's internal stimuli it expects from moving its own action ``n``."""
    a = _action_column(a0, n)
    if method == "fd":
        def perceived(x):
            s_tilde = perceived_env.evaluate(x)
            if len(s_tilde) != agent.classification.input_dim:
                raise DimensionMismatch("perceived environment output does not match classification input")
            return agent.classification(s_tilde)

        col = fd_jacobian(perceived, a)[:, n]
    elif method == "analytic":
        s_tilde = perceived_env.evaluate(a)
        if len(s_tilde) != agent.classification.input_dim:
            raise DimensionMismatch("perceived environment output does not match classification input")
        col = (analytic_layer_jacobian(agent.classification, s_tilde) @ perceived_env.jacobian(a))[:, n]
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    return col * delta_a


def dissonance(agent: Agent, s, c1: int, c2: int) -> float:
    """Cosine between the judgement gradients of two core values; negative means dissonant."""
    if c1 == c2:
        raise ValueError("dissonance needs two distinct core values")
    _check_value_index(agent, c1)
    _check_value_index(agent, c2)
    jac = valence_matrix(agent, s)
    return gradient_cosine(jac[c1], jac[c2])


def gradient_cosine(g1, g2) -> float:
    g1 = np.asarray(g1, dtype=np.float64)
    g2 = np.asarray(g2, dtype=np.float64)
    n1, n2 = np.linalg.norm(g1), np.linalg.norm(g2)
    if n1 == 0 or n2 == 0:
        raise ZeroGradient("a core value has a zero gradient")
    return float(np.clip(np.dot(g1 / n1, g2 / n2), -1.0, 1.0))


@dataclass(frozen=True)
class StimulusAppraisal:
    eta: tuple[float, ...]
    delta_s: float
    gamma: tuple[float, ...]

    @classmethod
    def from_parts(cls, eta: Sequence[float], delta_s: float) -> "StimulusAppraisal":
        eta = tuple(float(e) for e in eta)
        return cls(eta, float(delta_s), tuple(e * float(delta_s) for e in eta))


@dataclass(frozen=True)
class AppraisalSnapshot:
    """Inputs to emotion classification at one instant.

    ``stimuli`` maps a stimulus index to its valence, degree of perception and
    perceived valence; ``rho`` maps (i, j) pairs to perceived correlations.
    """

    alpha: tuple[float, ...]
    beta: tuple[float, ...]
    stimuli: dict[int, StimulusAppraisal] = field(default_factory=dict)
    rho: dict[tuple[int, int], float] = field(default_factory=dict)

    @classmethod
    def from_signs(cls, alpha=0.0, beta=0.0, eta1=0.0, delta_s1=0.0, rho12=0.0, eta2=0.0, delta_s2=0.0,
                   s1: int = 0, s2: int = 1) -> "AppraisalSnapshot":
        """Single-core-value snapshot over two stimuli, handy for hand-built cases."""
        return cls(
            (float(alpha),),
            (float(beta),),
            {s1: StimulusAppraisal.from_parts((eta1,), delta_s1), s2: StimulusAppraisal.from_parts((eta2,), delta_s2)},
            {(s1, s2): float(rho12)},
        )


def build_snapshot(agent: Agent, s, tracked: Iterable[int] = (), rho_pairs: Iterable[tuple[int, int]] = (),
                   s_prev=None) -> AppraisalSnapshot:
    """Assemble alpha, beta, per-stimulus eta/delta_s/gamma and the requested rho values.

    ``s_prev`` is the input of the last classification layer (the external
    stimulus for one-layer classifiers); it is only needed for ``rho_pairs``.
    """
    x = _internal(agent, s)
    jac = valence_matrix(agent, x)
    k = agent.ability_index
    alpha = jac[:, agent.self_index] * degree_of_perception(x, agent.s_ref, agent.self_index)
    beta = jac[:, k] * (x[k] - agent.ability_ref)
    stimuli = {}
    for i in tracked:
        delta = degree_of_perception(x, agent.s_ref, i)
        stimuli[i] = StimulusAppraisal.from_parts(jac[:, i], delta)
    rho = {}
    rho_pairs = list(rho_pairs)
    if rho_pairs:
        if s_prev is None:
            raise ValueError("rho_pairs need the input of the last classification layer (s_prev)")
        n = len(agent.classification.layers)
        for i, j in rho_pairs:
            rho[(i, j)] = perceived_correlation(agent.classification, n, s_prev, i, j)
    return AppraisalSnapshot(tuple(alpha.tolist()), tuple(beta.tolist()), stimuli, rho)
