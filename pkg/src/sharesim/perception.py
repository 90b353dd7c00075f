"""Stimulus representation and classification stacks.

A stack is an ordered list of dense layers; every intermediate response is
kept because it is itself a stimulus for the next layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, IndexOutOfRange, SpaceMismatch, ZeroVector
from .numerics import Activation, analytic_layer_jacobian, apply_activation, as_matrix, as_vector


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class StimulusVector:
    """A stimulus and the space it lives in: layer 0 is the external space."""

    values: np.ndarray
    layer: int = 0

    def __post_init__(self):
        if self.layer < 0:
            raise ValueError("layer index must be >= 0")
        object.__setattr__(self, "values", _frozen(as_vector(self.values, "stimulus")))

    @property
    def external(self) -> bool:
        return self.layer == 0

    def __len__(self):
        return self.values.size


def _values(s) -> np.ndarray:
    if isinstance(s, StimulusVector):
        return s.values
    return as_vector(s, "stimulus")


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray
    bias: np.ndarray
    activations: tuple[Activation, ...]

    def __post_init__(self):
        w = as_matrix(self.weights, "weights")
        b = as_vector(self.bias, "bias")
        acts = self.activations
        if isinstance(acts, (str, Activation, dict)):
            acts = [acts] * w.shape[0]
        acts = tuple(Activation.parse(a) for a in acts)
        if b.size != w.shape[0]:
            raise DimensionMismatch(f"bias has length {b.size}, weights have {w.shape[0]} rows")
        if len(acts) != w.shape[0]:
            raise DimensionMismatch(f"{len(acts)} activations for {w.shape[0]} units")
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "bias", _frozen(b))
        object.__setattr__(self, "activations", acts)

    @classmethod
    def linear(cls, weights, bias=None) -> "Layer":
        w = as_matrix(weights)
        return cls(w, np.zeros(w.shape[0]) if bias is None else bias, "identity")

    @property
    def input_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights.shape[0]

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.size != self.input_dim:
            raise DimensionMismatch(f"layer expects input of length {self.input_dim}, got {x.size}")
        z = self.weights @ x + self.bias
        return np.array([apply_activation(a, zk) for a, zk in zip(self.activations, z)])


@dataclass(frozen=True, eq=False)
class NetworkStack:
    layers: tuple[Layer, ...]

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise DimensionMismatch("a stack needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].input_dim != layers[k - 1].output_dim:
                raise DimensionMismatch(
                    f"layer {k + 1} expects {layers[k].input_dim} inputs, "
                    f"layer {k} produces {layers[k - 1].output_dim}"
                )
        object.__setattr__(self, "layers", layers)

    @classmethod
    def identity(cls, n: int) -> "NetworkStack":
        return cls((Layer.linear(np.eye(n)),))

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].output_dim

    def responses(self, x) -> list[np.ndarray]:
        out = []
        for layer in self.layers:
            x = layer(x)
            out.append(x)
        return out

    def __call__(self, x) -> np.ndarray:
        return self.responses(x)[-1]


def classify(stack: NetworkStack, s_tilde) -> list[StimulusVector]:
    """Push an external stimulus through ``stack``; returns s^(1) ... s^(n)."""
    if isinstance(s_tilde, StimulusVector) and not s_tilde.external:
        raise SpaceMismatch("classification starts from an external stimulus")
    x = _values(s_tilde)
    if x.size != stack.input_dim:
        raise DimensionMismatch(f"stack expects a stimulus of length {stack.input_dim}, got {x.size}")
    return [StimulusVector(r, k + 1) for k, r in enumerate(stack.responses(x))]


def degree_of_perception(s, s_ref, i: int) -> float:
    if isinstance(s, StimulusVector) and isinstance(s_ref, StimulusVector) and s.layer != s_ref.layer:
        raise SpaceMismatch(f"stimulus in layer {s.layer}, reference in layer {s_ref.layer}")
    sv, rv = _values(s), _values(s_ref)
    if sv.size != rv.size:
        raise SpaceMismatch(f"stimulus has length {sv.size}, reference has {rv.size}")
    if not 0 <= i < sv.size:
        raise IndexOutOfRange(f"stimulus index {i} outside 0..{sv.size - 1}")
    return float(sv[i] - rv[i])


def perceived_correlation(stack: NetworkStack, n: int, s_prev, i: int, j: int) -> float:
    """Sensitivity of unit ``j`` of layer ``n`` (1-based) to unit ``i`` of layer n-1 at ``s_prev``.

    This is the feedforward reading: entry (j, i) of layer n's Jacobian.
    """
    if not 1 <= n <= len(stack.layers):
        raise IndexOutOfRange(f"layer {n} outside 1..{len(stack.layers)}")
    layer = stack.layers[n - 1]
    x = _values(s_prev)
    if not 0 <= i < layer.input_dim:
        raise IndexOutOfRange(f"source index {i} outside layer {n - 1}")
    if not 0 <= j < layer.output_dim:
        raise IndexOutOfRange(f"target index {j} outside layer {n}")
    jac = analytic_layer_jacobian(NetworkStack((layer,)), x)
    return float(jac[j, i])


@dataclass(frozen=True)
class ConstellationStar:
    label: str
    prototype: tuple[float, ...]
    horizon: float


@dataclass(frozen=True)
class Constellation:
    """Known stimuli, each with its own association horizon (cosine threshold)."""

    stars: tuple[ConstellationStar, ...] = ()

    @classmethod
    def from_items(cls, items: Sequence[tuple[str, Sequence[float], float]]) -> "Constellation":
        stars = []
        for label, proto, horizon in items:
            p = as_vector(proto, f"prototype {label!r}")
            if not np.any(p):
                raise ZeroVector(f"prototype {label!r} is the zero vector")
            if not -1.0 <= horizon <= 1.0:
                raise ValueError(f"horizon for {label!r} must lie in [-1, 1]")
            stars.append(ConstellationStar(label, tuple(p.tolist()), float(horizon)))
        return cls(tuple(stars))


def quantize(c: Constellation, s_tilde) -> list[tuple[str, float]]:
    """Known stimuli whose association horizon contains ``s_tilde``, most similar first."""
    x = _values(s_tilde)
    norm = np.linalg.norm(x)
    if norm == 0:
        raise ZeroVector("cannot quantize the zero stimulus")
    hits = []
    for star in c.stars:
        p = np.asarray(star.prototype)
        if p.size != x.size:
            raise DimensionMismatch(f"prototype {star.label!r} has length {p.size}, stimulus {x.size}")
        sim = float(np.dot(p, x) / (np.linalg.norm(p) * norm))
        sim = min(1.0, max(-1.0, sim))
        if sim >= star.horizon:
            hits.append((star.label, sim))
    hits.sort(key=lambda h: (-h[1], h[0]))
    return hits


@dataclass(frozen=True, eq=False)
class FocusProfile:
    gains: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        g = as_vector(self.gains, "gains")
        if np.any(g < 0):
            raise ValueError("focus gains must be >= 0")
        object.__setattr__(self, "gains", _frozen(g))


def apply_focus(layer: Layer, f: FocusProfile) -> Layer:
    """Scale each unit's weight row and bias by its gain."""
    g = f.gains
    if g.size != layer.output_dim:
        raise DimensionMismatch(f"{g.size} gains for a layer of {layer.output_dim} units")
    if np.all(g == 1.0):
        return layer
    return Layer(layer.weights * g[:, None], layer.bias * g, layer.activations)


__all__ = [
    "Constellation",
    "ConstellationStar",
    "FocusProfile",
    "Layer",
    "NetworkStack",
    "StimulusVector",
    "apply_focus",
    "classify",
    "degree_of_perception",
    "perceived_correlation",
    "quantize",
]
