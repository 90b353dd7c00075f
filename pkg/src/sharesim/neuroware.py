"""Neuroware archetype generators and weight/bias heatmaps.

Profiles are seeded generators with checked structure rather than fixed
numbers: each kind starts from the normal (near-diagonal) wiring and then
applies its characteristic distortion.
"""

from __future__ import annotations

from dataclasses import dataclass
from xml.sax.saxutils import escape

import numpy as np

from .errors import DimensionMismatch, InvalidParams
from .numerics import as_matrix, as_vector
from .perception import Layer, NetworkStack

KINDS = ("normal", "schizophrenia", "depression", "psychopathy", "ocd")

# depression damps J and D weights by this factor
DEPRESSED_GAIN = 0.3
# psychopathy keeps this fraction of the classification background
CALLOUS_BACKGROUND = 0.25
# OCD off-diagonal intensity relative to the diagonal
OBSESSIVE_GAIN = 1.5


@dataclass(frozen=True)
class ProfileParams:
    n: int = 4
    diag: float = 1.0
    bg: float = 0.05
    bias_level: float = 0.3
    seed: int = 0

    def check(self):
        if self.n < 2:
            raise InvalidParams("profiles need n >= 2")
        if not (self.diag > self.bg >= 0):
            raise InvalidParams("need diag > bg >= 0")
        if self.diag <= (self.n - 1) * self.bg:
            raise InvalidParams(
                f"diag={self.diag} cannot dominate {self.n - 1} background entries of up to {self.bg}"
            )
        if not np.isfinite(self.bias_level):
            raise InvalidParams("bias_level must be finite")


@dataclass(frozen=True, eq=False)
class NeurowareProfile:
    name: str
    classification: NetworkStack
    judgement: NetworkStack
    decision: NetworkStack

    def blocks(self) -> dict[str, Layer]:
        return {
            "C": self.classification.layers[0],
            "J": self.judgement.layers[0],
            "D": self.decision.layers[0],
        }


def _normal_block(rng: np.random.Generator, p: ProfileParams) -> tuple[np.ndarray, np.ndarray]:
    w = rng.uniform(-p.bg, p.bg, size=(p.n, p.n))
    np.fill_diagonal(w, p.diag)
    b = rng.uniform(-p.bg, p.bg, size=p.n)
    return w, b


def _pick_rows(rng: np.random.Generator, n: int) -> np.ndarray:
    count = max(1, n // 3)
    return np.sort(rng.choice(n, size=count, replace=False))


def _other_column(rng: np.random.Generator, n: int, row: int) -> int:
    col = int(rng.integers(n - 1))
    return col if col < row else col + 1


def _swap_to_off_diagonal(rng, w: np.ndarray, p: ProfileParams) -> np.ndarray:
    """Move the dominant weight of a few rows off the diagonal."""
    w = w.copy()
    for r in _pick_rows(rng, p.n):
        c = _other_column(rng, p.n, r)
        w[r, c] = p.diag
        w[r, r] = 0.0
    return w


def generate_profile(kind: str, p: ProfileParams) -> NeurowareProfile:
    if kind not in KINDS:
        raise InvalidParams(f"unknown profile kind {kind!r}; expected one of {', '.join(KINDS)}")
    p.check()
    rng = np.random.default_rng(p.seed)
    base = [_normal_block(rng, p) for _ in range(3)]
    # distortions draw from a second stream so the normal part is shared across kinds
    rng = np.random.default_rng([p.seed, KINDS.index(kind)])
    (wc, bc), (wj, bj), (wd, bd) = base

    if kind == "schizophrenia":
        wc = _swap_to_off_diagonal(rng, wc, p)
        wj = _swap_to_off_diagonal(rng, wj, p)
        wd = _swap_to_off_diagonal(rng, wd, p)
        # many expected actions simply go missing
        missing = rng.random(p.n) < 0.5
        wd[np.arange(p.n)[missing], np.arange(p.n)[missing]] = 0.0
    elif kind == "depression":
        if p.bias_level == 0:
            raise InvalidParams("depression needs a nonzero bias_level")
        wc = wc.copy()
        wc[np.diag_indices(p.n)] *= rng.uniform(0.85, 1.0, size=p.n)
        wj = wj * DEPRESSED_GAIN
        wd = wd * DEPRESSED_GAIN
        bj = -abs(p.bias_level) - rng.uniform(0.0, p.bg, size=p.n)
        bd = -abs(p.bias_level) - rng.uniform(0.0, p.bg, size=p.n)
    elif kind == "psychopathy":
        off = ~np.eye(p.n, dtype=bool)
        wc = wc.copy()
        wc[off] *= CALLOUS_BACKGROUND
        bc = bc * CALLOUS_BACKGROUND
        focus = int(rng.integers(p.n))
        wj = wj * 0.5
        wj[np.diag_indices(p.n)] = 0.25 * p.diag
        wj[focus, :] = p.diag
        wd = wd.copy()
        for r in _pick_rows(rng, p.n):
            wd[r, r] = 0.0
        r = int(rng.integers(p.n))
        wd[r, _other_column(rng, p.n, r)] = p.diag
    elif kind == "ocd":
        for w in (wj, wd):
            for r in _pick_rows(rng, p.n):
                w[r, _other_column(rng, p.n, r)] = OBSESSIVE_GAIN * p.diag

    def stack(w, b):
        return NetworkStack((Layer(w, b, "identity"),))

    return NeurowareProfile(kind, stack(wc, bc), stack(wj, bj), stack(wd, bd))


def strictly_diagonally_dominant(w: np.ndarray) -> bool:
    a = np.abs(w)
    diag = np.diag(a)
    return bool(np.all(diag > a.sum(axis=1) - diag))


def rows_with_off_diagonal_max(w: np.ndarray) -> list[int]:
    a = np.abs(w)
    return [r for r in range(a.shape[0]) if int(np.argmax(a[r])) != r and a[r].max() > a[r, r]]


def dominant_rows(w: np.ndarray, ratio: float = 2.0) -> list[int]:
    """Rows whose L1 norm is at least ``ratio`` times every other row's."""
    norms = np.abs(w).sum(axis=1)
    out = []
    for r in range(len(norms)):
        others = np.delete(norms, r)
        if others.size == 0 or norms[r] >= ratio * others.max():
            out.append(r)
    return out


CELL = 20
MAX_RADIUS = 9.0


def _num(x: float) -> str:
    s = f"{x:.4f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


def render_heatmap(weights, bias, title: str | None = None) -> str:
    """SVG grid of a layer with the bias as the last column.

    Positive values are blue circles, negative red; area and opacity scale
    with |value| / max|value| over the block. Zero entries draw nothing.
    """
    w = as_matrix(weights, "weights")
    b = as_vector(bias, "bias")
    if b.size != w.shape[0]:
        raise DimensionMismatch(f"bias has length {b.size}, weights have {w.shape[0]} rows")
    block = np.column_stack([w, b])
    rows, cols = block.shape
    peak = float(np.abs(block).max())
    width, height = cols * CELL, rows * CELL

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
    ]
    if title:
        out.append(f"<title>{escape(title)}</title>")
    out.append(f'<rect x="0" y="0" width="{width}" height="{height}" fill="white" stroke="none"/>')
    out.append('<g class="grid" fill="none" stroke="#cccccc" stroke-width="0.5">')
    for r in range(rows):
        for c in range(cols):
            out.append(f'<rect x="{c * CELL}" y="{r * CELL}" width="{CELL}" height="{CELL}"/>')
    out.append("</g>")
    sep = (cols - 1) * CELL
    out.append(f'<line class="bias-separator" x1="{sep}" y1="0" x2="{sep}" y2="{height}" '
               'stroke="#666666" stroke-width="1"/>')
    out.append('<g class="glyphs">')
    for r in range(rows):
        for c in range(cols):
            x = float(block[r, c])
            if x == 0.0 or peak == 0.0:
                continue
            frac = abs(x) / peak
            color = "blue" if x > 0 else "red"
            out.append(
                f'<circle cx="{c * CELL + CELL // 2}" cy="{r * CELL + CELL // 2}" '
                f'r="{_num(MAX_RADIUS * np.sqrt(frac))}" fill="{color}" fill-opacity="{_num(frac)}"/>'
            )
    out.append("</g>")
    out.append("</svg>")
    return "\n".join(out) + "\n"
