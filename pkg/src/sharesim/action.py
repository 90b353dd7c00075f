"""Decision stack, the prosocial action model, and indecision detection."""

from __future__ import annotations

import math
from dataclasses import dataclass, fields
from fractions import Fraction
from typing import Sequence

import numpy as np

from .appraisal import Agent
from .errors import DimensionMismatch, InvalidParams
from .numerics import as_vector


@dataclass(frozen=True, eq=False)
class ActionVector:
    values: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        a = as_vector(self.values, "action")
        labels = tuple(self.labels) or tuple(f"a{k}" for k in range(a.size))
        if len(labels) != a.size:
            raise DimensionMismatch(f"{len(labels)} labels for {a.size} action channels")
        a.setflags(write=False)
        object.__setattr__(self, "values", a)
        object.__setattr__(self, "labels", labels)


def decide(agent: Agent, v) -> ActionVector:
    x = np.asarray(getattr(v, "values", v), dtype=np.float64)
    if x.ndim != 1 or x.size != agent.decision.input_dim:
        raise DimensionMismatch(f"decision expects {agent.decision.input_dim} core values, got {x.size}")
    return ActionVector(agent.decision(x), agent.action_labels)


@dataclass(frozen=True)
class ProsocialParams:
    """Inputs to the net-benefit model of a single prosocial action.

    ``m_prime`` scales the whole benefit, ``d_prime`` is the recipient-agnostic
    bias toward acting, ``k`` the agent's regard for the recipient, ``c_inact``
    the cost of not acting and ``c_act`` the threshold cost of acting.
    """

    m_prime: float = 1.0
    d_prime: float = 0.0
    b_self: float = 0.0
    k: float = 0.0
    b_rec: float = 0.0
    c_inact: float = 0.0
    c_act: float = 0.0

    def __post_init__(self):
        for f in fields(self):
            x = getattr(self, f.name)
            if not math.isfinite(x):
                raise InvalidParams(f"{f.name} must be finite")
            object.__setattr__(self, f.name, float(x))


def prosocial_layer(p: ProsocialParams) -> tuple[list[Fraction], list[Fraction], Fraction]:
    """The decision row, core values and bias whose dot product gives the net benefit.

    Returned as exact fractions so the layer form and the closed form agree
    exactly before the single final rounding.
    """
    m, d = Fraction(p.m_prime), Fraction(p.d_prime)
    weights = [m * d, m]
    values = [Fraction(p.b_self), Fraction(p.k) * Fraction(p.b_rec)]
    bias = m * (d + Fraction(p.c_inact))
    return weights, values, bias


def layer_benefit(weights: Sequence[Fraction], values: Sequence[Fraction], bias: Fraction) -> float:
    return float(sum((w * v for w, v in zip(weights, values)), Fraction(0)) + bias)


def prosocial_benefit(p: ProsocialParams) -> float:
    m, d = Fraction(p.m_prime), Fraction(p.d_prime)
    total = m * (d * (1 + Fraction(p.b_self)) + Fraction(p.k) * Fraction(p.b_rec) + Fraction(p.c_inact))
    return float(total)


def prosocial_act(p: ProsocialParams) -> int:
    # strict: a tie is inaction
    return 1 if prosocial_benefit(p) > p.c_act else 0


def detect_indecision(benefit_trace: Sequence[float], c_act: float) -> bool:
    """True when the benefit crosses the action threshold back and forth (two or more flips)."""
    if len(benefit_trace) < 2:
        raise ValueError("need at least two benefit samples")
    above = [b > c_act for b in benefit_trace]
    flips = sum(1 for prev, cur in zip(above, above[1:]) if prev != cur)
    return flips >= 2
