"""Sign-pattern emotion classification, surprise, and sentiment-map drawing specs."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, InvalidParams, MissingField, UnknownLabel

CELLS = ("alpha", "beta", "eta1", "delta_s1", "rho12", "eta2", "delta_s2")

PLUS, MINUS, ZERO, ANY = "+", "-", "0", "any"
_CELL_ALIASES = {
    "+": PLUS, "plus": PLUS, "pos": PLUS,
    "-": MINUS, "minus": MINUS, "neg": MINUS,
    "0": ZERO, "zero": ZERO,
    "any": ANY, "*": ANY, "": ANY,
}

DEFAULT_SIGN_EPSILON = 1e-9

VALENCE_COLORS = {PLUS: "blue", ZERO: "black", MINUS: "red"}
PERCEPTION_STYLES = {PLUS: "solid", MINUS: "dashed"}
_COLOR_AXES = ("alpha", "eta1", "eta2")
_STYLE_AXES = ("delta_s1", "delta_s2")


def sign_of(x: float, eps: float = DEFAULT_SIGN_EPSILON) -> str:
    if eps <= 0:
        raise InvalidParams("sign epsilon must be positive")
    if abs(x) <= eps:
        return ZERO
    return PLUS if x > 0 else MINUS


@dataclass(frozen=True)
class SignPattern:
    cells: tuple[str, ...]

    def __post_init__(self):
        if len(self.cells) != len(CELLS):
            raise InvalidParams(f"a sign pattern has {len(CELLS)} cells, got {len(self.cells)}")
        try:
            cells = tuple(_CELL_ALIASES[str(c).strip().lower()] for c in self.cells)
        except KeyError as exc:
            raise InvalidParams(f"unknown sign cell {exc.args[0]!r}") from None
        if all(c == ANY for c in cells):
            raise InvalidParams("a sign pattern must constrain at least one cell")
        object.__setattr__(self, "cells", cells)

    @classmethod
    def of(cls, **constraints: str) -> "SignPattern":
        unknown = set(constraints) - set(CELLS)
        if unknown:
            raise InvalidParams(f"unknown cells {sorted(unknown)}")
        return cls(tuple(constraints.get(name, ANY) for name in CELLS))

    @property
    def specificity(self) -> int:
        return sum(c != ANY for c in self.cells)

    def constraints(self) -> dict[str, str]:
        return {name: c for name, c in zip(CELLS, self.cells) if c != ANY}

    def __str__(self):
        return "[" + ",".join(self.cells) + "]"


_LINE = re.compile(r"^\s*([^:\[\]]+?)\s*:\s*\[([^\]]*)\]\s*$")


@dataclass(frozen=True)
class EmotionTable:
    entries: tuple[tuple[str, SignPattern], ...]
    sign_epsilon: float = DEFAULT_SIGN_EPSILON

    def __post_init__(self):
        labels = [label for label, _ in self.entries]
        if len(set(labels)) != len(labels):
            raise InvalidParams("emotion labels must be unique")
        if not self.sign_epsilon > 0:
            raise InvalidParams("sign epsilon must be positive")
        object.__setattr__(self, "entries", tuple(self.entries))

    def __getitem__(self, label: str) -> SignPattern:
        for name, pattern in self.entries:
            if name == label:
                return pattern
        raise UnknownLabel(label)

    @property
    def labels(self) -> list[str]:
        return [label for label, _ in self.entries]

    def to_lines(self) -> list[str]:
        return [f"{label}: {pattern}" for label, pattern in self.entries]

    @classmethod
    def from_lines(cls, lines: Sequence[str], sign_epsilon: float = DEFAULT_SIGN_EPSILON) -> "EmotionTable":
        """Parse rows of the form ``"Fear: [any,0,-,+,any,any,any]"``."""
        entries = []
        for line in lines:
            m = _LINE.match(line)
            if not m:
                raise InvalidParams(f"cannot read emotion row {line!r}")
            cells = tuple(c.strip() for c in m.group(2).split(","))
            entries.append((m.group(1), SignPattern(cells)))
        return cls(tuple(entries), sign_epsilon)

    def with_epsilon(self, eps: float) -> "EmotionTable":
        return EmotionTable(self.entries, eps)


DEFAULT_TABLE = EmotionTable((
    ("Fear", SignPattern.of(beta=ZERO, eta1=MINUS, delta_s1=PLUS)),
    ("Sadness", SignPattern.of(beta=ZERO, eta1=PLUS, delta_s1=MINUS)),
    ("Disgust", SignPattern.of(eta1=MINUS, delta_s1=PLUS)),
    ("Happiness", SignPattern.of(alpha=PLUS, beta=PLUS, eta1=PLUS, delta_s1=PLUS)),
    ("Anger", SignPattern.of(eta1=MINUS, delta_s1=PLUS, rho12=MINUS, eta2=PLUS, delta_s2=MINUS)),
    ("Guilt", SignPattern.of(alpha=MINUS)),
))


@dataclass(frozen=True)
class EmotionMatch:
    label: str
    specificity: int


def snapshot_cells(snap, c: int, s1: int, s2: int | None) -> dict[str, float | None]:
    """Read the seven table cells out of a snapshot; absent values come back as None."""

    def pick(seq, k):
        return float(seq[k]) if seq is not None and 0 <= k < len(seq) else None

    st1 = snap.stimuli.get(s1)
    st2 = snap.stimuli.get(s2) if s2 is not None else None
    return {
        "alpha": pick(snap.alpha, c),
        "beta": pick(snap.beta, c),
        "eta1": pick(st1.eta, c) if st1 else None,
        "delta_s1": st1.delta_s if st1 else None,
        "rho12": snap.rho.get((s1, s2)) if s2 is not None else None,
        "eta2": pick(st2.eta, c) if st2 else None,
        "delta_s2": st2.delta_s if st2 else None,
    }


def classify_emotions(snap, table: EmotionTable = DEFAULT_TABLE, c: int = 0, s1: int = 0,
                      s2: int | None = 1) -> list[EmotionMatch]:
    """Every table row whose constrained cells match the snapshot's signs.

    Most specific first, ties by label.
    """
    values = snapshot_cells(snap, c, s1, s2)
    matches = []
    for label, pattern in table.entries:
        ok = True
        for name, want in pattern.constraints().items():
            x = values[name]
            if x is None:
                raise MissingField(f"{label} constrains {name}, which the snapshot does not carry")
            if sign_of(x, table.sign_epsilon) != want:
                ok = False
                break
        if ok:
            matches.append(EmotionMatch(label, pattern.specificity))
    matches.sort(key=lambda m: (-m.specificity, m.label))
    return matches


def surprise(v_expected, v_actual) -> float:
    """Euclidean distance between expected and realized core values."""
    e = np.asarray(getattr(v_expected, "values", v_expected), dtype=np.float64)
    a = np.asarray(getattr(v_actual, "values", v_actual), dtype=np.float64)
    if e.shape != a.shape:
        raise DimensionMismatch(f"expected {e.size} core values, got {a.size}")
    d = np.abs(a - e)
    peak = float(d.max(initial=0.0))
    if peak == 0.0 or not np.isfinite(peak):
        return peak
    # scale first so tiny or huge deviations neither underflow nor overflow
    return peak * float(np.linalg.norm(d / peak))


@dataclass(frozen=True)
class SentimentRegion:
    axis: str
    sign: str
    stroke: str | None
    line_style: str | None


def sentiment_map_spec(table: EmotionTable, label: str) -> list[SentimentRegion]:
    """Drawing spec for an emotion's sentiment map.

    Valence-type axes get a stroke colour by sign, degree-of-perception axes a
    line style; other constrained cells are not drawn.
    """
    pattern = table[label]
    regions = []
    for name, sign in pattern.constraints().items():
        if name in _COLOR_AXES:
            regions.append(SentimentRegion(name, sign, VALENCE_COLORS[sign], None))
        elif name in _STYLE_AXES and sign in PERCEPTION_STYLES:
            regions.append(SentimentRegion(name, sign, None, PERCEPTION_STYLES[sign]))
    return regions
