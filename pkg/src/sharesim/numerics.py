"""Dense arithmetic helpers, activation functions and Jacobian evaluation.

Vectors and matrices are plain float64 numpy arrays. Everything here is a
pure function of its inputs.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AtThresholdWarning, DimensionMismatch, NonFiniteResult

ACTIVATION_KINDS = ("identity", "relu", "sigmoid", "tanh", "binary_threshold")
SMOOTH_KINDS = ("identity", "sigmoid", "tanh")

FD_REL_STEP = 1e-6
FD_MIN_STEP = 1e-6


def as_vector(values, name: str = "vector") -> np.ndarray:
    v = np.array(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionMismatch(f"{name} must be one-dimensional, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteResult(f"{name} has non-finite entries")
    return v


def as_matrix(values, name: str = "matrix") -> np.ndarray:
    m = np.array(values, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0 or m.shape[1] == 0:
        raise DimensionMismatch(f"{name} must be a non-empty 2-d array, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NonFiniteResult(f"{name} has non-finite entries")
    return m


@dataclass(frozen=True)
class Activation:
    kind: str = "identity"
    threshold: float = 0.0

    def __post_init__(self):
        if self.kind not in ACTIVATION_KINDS:
            raise ValueError(f"unknown activation {self.kind!r}")
        if not math.isfinite(self.threshold):
            raise ValueError("activation threshold must be finite")

    @classmethod
    def parse(cls, spec) -> "Activation":
        """Accept an Activation, a kind name, or ``{"kind": ..., "threshold": ...}``."""
        if isinstance(spec, Activation):
            return spec
        if isinstance(spec, str):
            return cls(spec)
        return cls(spec["kind"], float(spec.get("threshold", 0.0)))


def apply_activation(a: Activation, z: float) -> float:
    kind = a.kind
    if kind == "identity":
        return float(z)
    if kind == "relu":
        return max(0.0, float(z))
    if kind == "sigmoid":
        # split on sign so exp never overflows
        if z >= 0:
            return 1.0 / (1.0 + math.exp(-z))
        e = math.exp(z)
        return e / (1.0 + e)
    if kind == "tanh":
        return math.tanh(z)
    return 1.0 if z > a.threshold else 0.0


def activation_derivative(a: Activation, z: float) -> tuple[float, bool]:
    """Return ``(d sigma/dz, at_threshold)``.

    ``at_threshold`` is true only for a binary unit evaluated exactly at its
    threshold, where the derivative is reported as 0.
    """
    kind = a.kind
    if kind == "identity":
        return 1.0, False
    if kind == "relu":
        return (1.0 if z > 0 else 0.0), False
    if kind == "sigmoid":
        s = apply_activation(a, z)
        return s * (1.0 - s), False
    if kind == "tanh":
        t = math.tanh(z)
        return 1.0 - t * t, False
    return 0.0, z == a.threshold


def fd_step(x: float) -> float:
    return max(FD_MIN_STEP, FD_REL_STEP * abs(x))


def fd_jacobian(f: Callable[[np.ndarray], Sequence[float]], x) -> np.ndarray:
    """Central-difference Jacobian of ``f`` at ``x``; entry (j, i) is d f_j / d x_i."""
    x = as_vector(x, "x")
    cols = []
    out_dim = None
    for i in range(x.size):
        h = fd_step(x[i])
        xp = x.copy()
        xm = x.copy()
        xp[i] = x[i] + h
        xm[i] = x[i] - h
        # difference of the representable probe points, not 2h
        denom = xp[i] - xm[i]
        fp = np.asarray(f(xp), dtype=np.float64).ravel()
        fm = np.asarray(f(xm), dtype=np.float64).ravel()
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise NonFiniteResult(f"function is non-finite near x[{i}]")
        if out_dim is None:
            out_dim = fp.size
        if fp.size != out_dim or fm.size != out_dim:
            raise DimensionMismatch("function output dimension changed between probes")
        cols.append((fp - fm) / denom)
    if not cols:
        return np.zeros((0, 0))
    return np.column_stack(cols)


def _layer_jacobian(layer, x: np.ndarray) -> tuple[np.ndarray, np.ndarray, bool]:
    """Jacobian of one layer at ``x`` plus the layer output and an at-threshold flag."""
    w = layer.weights
    if x.size != w.shape[1]:
        raise DimensionMismatch(f"layer expects input of length {w.shape[1]}, got {x.size}")
    z = w @ x + layer.bias
    out = np.empty_like(z)
    d = np.empty_like(z)
    flagged = False
    for k, act in enumerate(layer.activations):
        out[k] = apply_activation(act, z[k])
        d[k], hit = activation_derivative(act, z[k])
        flagged = flagged or hit
    return d[:, None] * w, out, flagged


def analytic_layer_jacobian(stack, x) -> np.ndarray:
    """Chain-rule Jacobian of a whole stack: the product of diag(sigma'(z)) W per layer.

    Emits :class:`AtThresholdWarning` when a binary unit sits on its threshold.
    """
    x = as_vector(x, "x")
    jac = None
    flagged = False
    for layer in stack.layers:
        lj, x, hit = _layer_jacobian(layer, x)
        flagged = flagged or hit
        jac = lj if jac is None else lj @ jac
    if flagged:
        warnings.warn("binary unit evaluated exactly at its threshold", AtThresholdWarning, stacklevel=2)
    if jac is None:
        return np.eye(x.size)
    return jac
