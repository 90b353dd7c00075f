"""Scenario files (strict JSON) and trajectory CSV output.

Parsing only checks shape-independent structure: known keys, JSON types.
Everything dimensional is left to :func:`validate`, which reports every
problem at once instead of stopping at the first.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from typing import Any, Iterable, Sequence

import numpy as np

from .action import ProsocialParams
from .appraisal import Agent
from .emotion import DEFAULT_SIGN_EPSILON, DEFAULT_TABLE, EmotionTable
from .environment import (
    DyadEnvironment,
    DyadParams,
    Environment,
    IdentityEnvironment,
    InfluenceFunction,
    LinearEnvironment,
    TrajectoryRecord,
    run_loop,
)
from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    InvalidParams,
    ScenarioError,
    ScenarioSyntaxError,
    TypeMismatch,
    UnknownKey,
)
from .numerics import ACTIVATION_KINDS, Activation
from .perception import Layer, NetworkStack

SCENARIO_VERSION = 1
Matrix = tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class LayerSpec:
    weights: Matrix
    bias: tuple[float, ...]
    activations: tuple[Activation, ...]


@dataclass(frozen=True)
class AgentSpec:
    classification: tuple[LayerSpec, ...]
    judgement: tuple[LayerSpec, ...]
    decision: tuple[LayerSpec, ...]
    s_ref: tuple[float, ...] | None = None
    self_index: int = 0
    ability_index: int = 1
    ability_ref: float = 0.0
    action_labels: tuple[str, ...] | None = None
    value_labels: tuple[str, ...] | None = None


@dataclass(frozen=True)
class InfluenceSpec:
    kind: str = "linear"
    slope: float = 0.0
    breakpoints: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class EnvironmentSpec:
    kind: str
    matrix: Matrix | None = None
    dim: int | None = None
    r0: float = 0.0
    r1: float = 0.0
    i10: InfluenceSpec = InfluenceSpec()
    i01: InfluenceSpec = InfluenceSpec()
    biases: tuple[float, ...] = (0.0, 0.0)
    initial: tuple[float, ...] = (0.0, 0.0)


@dataclass(frozen=True)
class RunSpec:
    steps: int = 1
    agent: str | None = None
    initial_stimulus: tuple[float, ...] | None = None
    tracked_stimuli: tuple[int, ...] = (0, 1)
    rho_pairs: tuple[tuple[int, int], ...] = ()
    sign_epsilon: float | None = None
    core_value: int = 0

    def epsilon(self, fallback: float | None = None) -> float:
        """Effective sign epsilon: file value, then ``fallback``, then the default."""
        if self.sign_epsilon is not None:
            return self.sign_epsilon
        if fallback is not None:
            return fallback
        return DEFAULT_SIGN_EPSILON


@dataclass(frozen=True)
class ScenarioDoc:
    version: int
    agents: tuple[tuple[str, AgentSpec], ...]
    environment: EnvironmentSpec
    run: RunSpec = RunSpec()
    perceived_environment: EnvironmentSpec | None = None
    emotion_table: tuple[str, ...] | None = None
    experiments: tuple[tuple[str, ProsocialParams], ...] = ()

    def agent_spec(self, name: str | None = None) -> tuple[str, AgentSpec]:
        name = name or self.run.agent or self.agents[0][0]
        for key, spec in self.agents:
            if key == name:
                return key, spec
        raise ScenarioError(f"no agent named {name!r}", "run.agent")


# ---------------------------------------------------------------- parsing


def _reject_constant(name):
    raise ValueError(f"{name} is not allowed")


def _type_name(x) -> str:
    return type(x).__name__ if x is not None else "null"


def _obj(x, path: str, allowed: Iterable[str], required: Iterable[str] = ()) -> dict:
    if not isinstance(x, dict):
        raise TypeMismatch(f"expected an object, got {_type_name(x)}", path)
    allowed = set(allowed)
    for key in x:
        if key not in allowed:
            raise UnknownKey(f"unknown key {key!r}", f"{path}.{key}" if path else key)
    for key in required:
        if key not in x:
            raise TypeMismatch("required key missing", f"{path}.{key}" if path else key)
    return x


def _join(path: str, key) -> str:
    if isinstance(key, int):
        return f"{path}[{key}]"
    return f"{path}.{key}" if path else str(key)


def _num(x, path: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TypeMismatch(f"expected a number, got {_type_name(x)}", path)
    x = float(x)
    if not np.isfinite(x):
        # JSON literals like 1e999 decode to infinity
        raise TypeMismatch("number out of range", path)
    return x


def _int(x, path: str) -> int:
    if isinstance(x, bool) or not isinstance(x, int):
        if isinstance(x, float) and x.is_integer():
            return int(x)
        raise TypeMismatch(f"expected an integer, got {_type_name(x)}", path)
    return x


def _str(x, path: str) -> str:
    if not isinstance(x, str):
        raise TypeMismatch(f"expected a string, got {_type_name(x)}", path)
    return x


def _list(x, path: str) -> list:
    if not isinstance(x, list):
        raise TypeMismatch(f"expected an array, got {_type_name(x)}", path)
    return x


def _vec(x, path: str) -> tuple[float, ...]:
    return tuple(_num(v, _join(path, k)) for k, v in enumerate(_list(x, path)))


def _mat(x, path: str) -> Matrix:
    return tuple(_vec(row, _join(path, k)) for k, row in enumerate(_list(x, path)))


def _activation(x, path: str) -> Activation:
    if isinstance(x, str):
        if x not in ACTIVATION_KINDS:
            raise TypeMismatch(f"unknown activation {x!r}", path)
        return Activation(x)
    d = _obj(x, path, ("kind", "threshold"), ("kind",))
    kind = _str(d["kind"], _join(path, "kind"))
    if kind not in ACTIVATION_KINDS:
        raise TypeMismatch(f"unknown activation {kind!r}", _join(path, "kind"))
    return Activation(kind, _num(d.get("threshold", 0.0), _join(path, "threshold")))


def _layer(x, path: str) -> LayerSpec:
    d = _obj(x, path, ("weights", "bias", "activation"), ("weights", "bias"))
    weights = _mat(d["weights"], _join(path, "weights"))
    bias = _vec(d["bias"], _join(path, "bias"))
    act = d.get("activation", "identity")
    if isinstance(act, list):
        acts = tuple(_activation(a, _join(_join(path, "activation"), k)) for k, a in enumerate(act))
    else:
        acts = (_activation(act, _join(path, "activation")),) * len(weights)
    return LayerSpec(weights, bias, acts)


def _stack(x, path: str) -> tuple[LayerSpec, ...]:
    return tuple(_layer(layer, _join(path, k)) for k, layer in enumerate(_list(x, path)))


_AGENT_KEYS = ("classification", "judgement", "decision", "s_ref", "self_index", "ability_index",
               "ability_ref", "action_labels", "value_labels")


def _agent(x, path: str) -> AgentSpec:
    d = _obj(x, path, _AGENT_KEYS, ("classification", "judgement", "decision"))
    labels = {}
    for key in ("action_labels", "value_labels"):
        if key in d:
            labels[key] = tuple(_str(v, _join(_join(path, key), k)) for k, v in enumerate(_list(d[key], _join(path, key))))
    return AgentSpec(
        classification=_stack(d["classification"], _join(path, "classification")),
        judgement=_stack(d["judgement"], _join(path, "judgement")),
        decision=_stack(d["decision"], _join(path, "decision")),
        s_ref=_vec(d["s_ref"], _join(path, "s_ref")) if "s_ref" in d else None,
        self_index=_int(d.get("self_index", 0), _join(path, "self_index")),
        ability_index=_int(d.get("ability_index", 1), _join(path, "ability_index")),
        ability_ref=_num(d.get("ability_ref", 0.0), _join(path, "ability_ref")),
        **labels,
    )


def _influence(x, path: str) -> InfluenceSpec:
    d = _obj(x, path, ("kind", "slope", "breakpoints"), ("kind",))
    kind = _str(d["kind"], _join(path, "kind"))
    if kind == "linear":
        if "breakpoints" in d:
            raise UnknownKey("linear influence takes no breakpoints", _join(path, "breakpoints"))
        return InfluenceSpec("linear", _num(d.get("slope", 0.0), _join(path, "slope")))
    if kind == "piecewise":
        if "slope" in d:
            raise UnknownKey("piecewise influence takes no slope", _join(path, "slope"))
        pts = _mat(d.get("breakpoints", []), _join(path, "breakpoints"))
        for k, p in enumerate(pts):
            if len(p) != 2:
                raise TypeMismatch("breakpoints are [x, y] pairs", _join(_join(path, "breakpoints"), k))
        return InfluenceSpec("piecewise", 0.0, tuple((p[0], p[1]) for p in pts))
    raise TypeMismatch(f"unknown influence kind {kind!r}", _join(path, "kind"))


_ENV_KEYS = {
    "identity": ("kind", "dim"),
    "linear": ("kind", "matrix"),
    "dyad": ("kind", "r0", "r1", "influences", "biases", "initial"),
}


def _environment(x, path: str) -> EnvironmentSpec:
    kind = _str(_obj(x, path, ("kind", "dim", "matrix", "r0", "r1", "influences", "biases", "initial"),
                     ("kind",))["kind"], _join(path, "kind"))
    if kind not in _ENV_KEYS:
        raise TypeMismatch(f"unknown environment kind {kind!r}", _join(path, "kind"))
    d = _obj(x, path, _ENV_KEYS[kind], _ENV_KEYS[kind][:2] if kind != "dyad" else ("kind",))
    if kind == "identity":
        return EnvironmentSpec("identity", dim=_int(d["dim"], _join(path, "dim")))
    if kind == "linear":
        return EnvironmentSpec("linear", matrix=_mat(d["matrix"], _join(path, "matrix")))
    infl = _obj(d.get("influences", {}), _join(path, "influences"), ("i10", "i01"))
    ipath = _join(path, "influences")
    return EnvironmentSpec(
        "dyad",
        r0=_num(d.get("r0", 0.0), _join(path, "r0")),
        r1=_num(d.get("r1", 0.0), _join(path, "r1")),
        i10=_influence(infl["i10"], _join(ipath, "i10")) if "i10" in infl else InfluenceSpec(),
        i01=_influence(infl["i01"], _join(ipath, "i01")) if "i01" in infl else InfluenceSpec(),
        biases=_vec(d.get("biases", [0.0, 0.0]), _join(path, "biases")),
        initial=_vec(d.get("initial", [0.0, 0.0]), _join(path, "initial")),
    )


_RUN_KEYS = ("steps", "agent", "initial_stimulus", "tracked_stimuli", "rho_pairs", "sign_epsilon", "core_value")


def _run(x, path: str) -> RunSpec:
    d = _obj(x, path, _RUN_KEYS)
    pairs = []
    for k, p in enumerate(_list(d.get("rho_pairs", []), _join(path, "rho_pairs"))):
        ppath = _join(_join(path, "rho_pairs"), k)
        p = _list(p, ppath)
        if len(p) != 2:
            raise TypeMismatch("rho pairs are [i, j]", ppath)
        pairs.append((_int(p[0], _join(ppath, 0)), _int(p[1], _join(ppath, 1))))
    tracked = d.get("tracked_stimuli", [0, 1])
    return RunSpec(
        steps=_int(d.get("steps", 1), _join(path, "steps")),
        agent=_str(d["agent"], _join(path, "agent")) if "agent" in d else None,
        initial_stimulus=_vec(d["initial_stimulus"], _join(path, "initial_stimulus"))
        if "initial_stimulus" in d else None,
        tracked_stimuli=tuple(_int(v, _join(_join(path, "tracked_stimuli"), k))
                              for k, v in enumerate(_list(tracked, _join(path, "tracked_stimuli")))),
        rho_pairs=tuple(pairs),
        sign_epsilon=_num(d["sign_epsilon"], _join(path, "sign_epsilon")) if "sign_epsilon" in d else None,
        core_value=_int(d.get("core_value", 0), _join(path, "core_value")),
    )


_PROSOCIAL_KEYS = ("m_prime", "d_prime", "b_self", "k", "b_rec", "c_inact", "c_act")


def _experiments(x, path: str) -> tuple[tuple[str, ProsocialParams], ...]:
    d = _obj(x, path, ("prosocial",))
    sets = d.get("prosocial", {})
    if not isinstance(sets, dict):
        raise TypeMismatch(f"expected an object, got {_type_name(sets)}", _join(path, "prosocial"))
    out = []
    for name, params in sets.items():
        ppath = _join(_join(path, "prosocial"), name)
        p = _obj(params, ppath, _PROSOCIAL_KEYS)
        out.append((name, ProsocialParams(**{k: _num(v, _join(ppath, k)) for k, v in p.items()})))
    return tuple(out)


def parse_scenario(text: str) -> ScenarioDoc:
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioSyntaxError(exc.msg, exc.lineno, exc.colno) from None
    except ValueError as exc:
        raise ScenarioSyntaxError(str(exc), 1, 1) from None
    d = _obj(raw, "", ("version", "agents", "environment", "perceived_environment", "emotion_table", "run",
                       "experiments"), ("version", "agents", "environment"))
    version = _int(d["version"], "version")
    if version != SCENARIO_VERSION:
        raise TypeMismatch(f"unsupported version {version}; expected {SCENARIO_VERSION}", "version")
    agents_raw = d["agents"]
    if not isinstance(agents_raw, dict):
        raise TypeMismatch(f"expected an object, got {_type_name(agents_raw)}", "agents")
    if not agents_raw:
        raise TypeMismatch("at least one agent is required", "agents")
    agents = tuple((name, _agent(spec, f"agents.{name}")) for name, spec in agents_raw.items())
    table = None
    if "emotion_table" in d:
        table = tuple(_str(v, f"emotion_table[{k}]") for k, v in enumerate(_list(d["emotion_table"], "emotion_table")))
    return ScenarioDoc(
        version=version,
        agents=agents,
        environment=_environment(d["environment"], "environment"),
        run=_run(d.get("run", {}), "run"),
        perceived_environment=_environment(d["perceived_environment"], "perceived_environment")
        if "perceived_environment" in d else None,
        emotion_table=table,
        experiments=_experiments(d["experiments"], "experiments") if "experiments" in d else (),
    )


def load_scenario(path) -> ScenarioDoc:
    with open(path, encoding="utf-8") as fh:
        return parse_scenario(fh.read())


# ---------------------------------------------------------- serialization


def _activation_json(a: Activation):
    return a.kind if a.threshold == 0.0 else {"kind": a.kind, "threshold": a.threshold}


def _layer_json(layer: LayerSpec) -> dict:
    acts = [_activation_json(a) for a in layer.activations]
    same = len(set(layer.activations)) == 1 and len(layer.activations) == len(layer.weights)
    return {
        "weights": [list(row) for row in layer.weights],
        "bias": list(layer.bias),
        "activation": acts[0] if same else acts,
    }


def agent_to_dict(spec: AgentSpec) -> dict:
    out: dict[str, Any] = {
        "classification": [_layer_json(l) for l in spec.classification],
        "judgement": [_layer_json(l) for l in spec.judgement],
        "decision": [_layer_json(l) for l in spec.decision],
    }
    if spec.s_ref is not None:
        out["s_ref"] = list(spec.s_ref)
    out["self_index"] = spec.self_index
    out["ability_index"] = spec.ability_index
    out["ability_ref"] = spec.ability_ref
    if spec.action_labels is not None:
        out["action_labels"] = list(spec.action_labels)
    if spec.value_labels is not None:
        out["value_labels"] = list(spec.value_labels)
    return out


def _influence_json(i: InfluenceSpec) -> dict:
    if i.kind == "linear":
        return {"kind": "linear", "slope": i.slope}
    return {"kind": "piecewise", "breakpoints": [list(p) for p in i.breakpoints]}


def _environment_json(e: EnvironmentSpec) -> dict:
    if e.kind == "identity":
        return {"kind": "identity", "dim": e.dim}
    if e.kind == "linear":
        return {"kind": "linear", "matrix": [list(r) for r in e.matrix]}
    return {
        "kind": "dyad",
        "r0": e.r0,
        "r1": e.r1,
        "influences": {"i10": _influence_json(e.i10), "i01": _influence_json(e.i01)},
        "biases": list(e.biases),
        "initial": list(e.initial),
    }


def scenario_to_dict(doc: ScenarioDoc) -> dict:
    out: dict[str, Any] = {
        "version": doc.version,
        "agents": {name: agent_to_dict(spec) for name, spec in doc.agents},
        "environment": _environment_json(doc.environment),
    }
    if doc.perceived_environment is not None:
        out["perceived_environment"] = _environment_json(doc.perceived_environment)
    if doc.emotion_table is not None:
        out["emotion_table"] = list(doc.emotion_table)
    run: dict[str, Any] = {"steps": doc.run.steps}
    if doc.run.agent is not None:
        run["agent"] = doc.run.agent
    if doc.run.initial_stimulus is not None:
        run["initial_stimulus"] = list(doc.run.initial_stimulus)
    run["tracked_stimuli"] = list(doc.run.tracked_stimuli)
    run["rho_pairs"] = [list(p) for p in doc.run.rho_pairs]
    if doc.run.sign_epsilon is not None:
        run["sign_epsilon"] = doc.run.sign_epsilon
    run["core_value"] = doc.run.core_value
    out["run"] = run
    if doc.experiments:
        out["experiments"] = {
            "prosocial": {name: {k: getattr(p, k) for k in _PROSOCIAL_KEYS} for name, p in doc.experiments}
        }
    return out


def serialize_scenario(doc: ScenarioDoc) -> str:
    return json.dumps(scenario_to_dict(doc), indent=2, allow_nan=False) + "\n"


# ------------------------------------------------------------- validation


@dataclass
class ValidationReport:
    errors: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors

    def add(self, path: str, message: str):
        self.errors.append((path, message))

    def __str__(self):
        return "\n".join(f"{p}: {m}" for p, m in self.errors) or "ok"


def _check_layer(layer: LayerSpec, path: str, report: ValidationReport) -> tuple[int, int] | None:
    rows = len(layer.weights)
    if rows == 0:
        report.add(_join(path, "weights"), "weights must have at least one row")
        return None
    cols = {len(r) for r in layer.weights}
    if len(cols) != 1:
        report.add(_join(path, "weights"), "weight rows have different lengths")
        return None
    n_in = cols.pop()
    if n_in == 0:
        report.add(_join(path, "weights"), "weights must have at least one column")
        return None
    ok = True
    if len(layer.bias) != rows:
        report.add(_join(path, "bias"), f"bias has length {len(layer.bias)}, weights have {rows} rows")
        ok = False
    if len(layer.activations) != rows:
        report.add(_join(path, "activation"), f"{len(layer.activations)} activations for {rows} units")
        ok = False
    return (n_in, rows) if ok else None


def _check_stack(stack: Sequence[LayerSpec], path: str, report: ValidationReport) -> list[tuple[int, int]] | None:
    if not stack:
        report.add(path, "a stack needs at least one layer")
        return None
    dims = [_check_layer(layer, _join(path, k), report) for k, layer in enumerate(stack)]
    if any(d is None for d in dims):
        return None
    ok = True
    for k in range(1, len(dims)):
        if dims[k][0] != dims[k - 1][1]:
            report.add(_join(path, k), f"layer expects {dims[k][0]} inputs, previous layer produces {dims[k - 1][1]}")
            ok = False
    return dims if ok else None


def _check_agent(spec: AgentSpec, path: str, report: ValidationReport):
    """Returns (classification dims, judgement dims, decision dims) when the stacks are usable."""
    c = _check_stack(spec.classification, _join(path, "classification"), report)
    j = _check_stack(spec.judgement, _join(path, "judgement"), report)
    d = _check_stack(spec.decision, _join(path, "decision"), report)
    if c and j and j[0][0] != c[-1][1]:
        report.add(_join(path, "judgement"), f"judgement expects {j[0][0]} inputs, classification produces {c[-1][1]}")
        j = None
    if j and d and d[0][0] != j[-1][1]:
        report.add(_join(path, "decision"), f"decision expects {d[0][0]} inputs, judgement produces {j[-1][1]}")
        d = None
    if j:
        n_s = j[0][0]
        if spec.s_ref is not None and len(spec.s_ref) != n_s:
            report.add(_join(path, "s_ref"), f"s_ref has length {len(spec.s_ref)}, judgement expects {n_s}")
        for key in ("self_index", "ability_index"):
            idx = getattr(spec, key)
            if not 0 <= idx < n_s:
                report.add(_join(path, key), f"{key}={idx} outside the judgement input (dim {n_s})")
        if spec.value_labels is not None and len(spec.value_labels) != j[-1][1]:
            report.add(_join(path, "value_labels"), f"{len(spec.value_labels)} labels for {j[-1][1]} core values")
    if spec.self_index == spec.ability_index:
        report.add(_join(path, "ability_index"), "Agent invariant: self_index and ability_index must differ")
    if d and spec.action_labels is not None and len(spec.action_labels) != d[-1][1]:
        report.add(_join(path, "action_labels"), f"{len(spec.action_labels)} labels for {d[-1][1]} action channels")
    return c, j, d


def _env_dims(e: EnvironmentSpec, path: str, report: ValidationReport) -> tuple[int, int] | None:
    """(action dim, stimulus dim) of an environment spec."""
    if e.kind == "identity":
        if e.dim is None or e.dim < 1:
            report.add(_join(path, "dim"), "identity environment needs dim >= 1")
            return None
        return e.dim, e.dim
    if e.kind == "linear":
        m = e.matrix or ()
        cols = {len(r) for r in m}
        if not m or len(cols) != 1 or 0 in cols:
            report.add(_join(path, "matrix"), "matrix must be a non-empty rectangular array")
            return None
        return cols.pop(), len(m)
    ok = True
    for key in ("biases", "initial"):
        if len(getattr(e, key)) != 2:
            report.add(_join(path, key), f"{key} must have exactly two entries")
            ok = False
    for key in ("i10", "i01"):
        try:
            _build_influence(getattr(e, key))
        except InvalidParams as exc:
            report.add(_join(_join(path, "influences"), key), str(exc))
            ok = False
    return (1, 2) if ok else None


def validate(doc: ScenarioDoc) -> ValidationReport:
    report = ValidationReport()
    if doc.version != SCENARIO_VERSION:
        report.add("version", f"expected {SCENARIO_VERSION}")
    names = [n for n, _ in doc.agents]
    if len(set(names)) != len(names):
        report.add("agents", "agent names must be unique")
    dims = {}
    for name, spec in doc.agents:
        dims[name] = _check_agent(spec, f"agents.{name}", report)

    run = doc.run
    if run.agent is not None and run.agent not in dims:
        report.add("run.agent", f"no agent named {run.agent!r}")
        return report
    active = run.agent or names[0]
    c, j, d = dims[active]
    apath = f"agents.{active}"

    envs = [("environment", doc.environment)]
    if doc.perceived_environment is not None:
        envs.append(("perceived_environment", doc.perceived_environment))
    for path, env in envs:
        ed = _env_dims(env, path, report)
        if ed is None:
            continue
        if d and ed[0] != d[-1][1]:
            report.add(path, f"environment takes {ed[0]} action channels, {apath}.decision produces {d[-1][1]}")
        if c and ed[1] != c[0][0]:
            report.add(path, f"environment produces {ed[1]} stimuli, {apath}.classification expects {c[0][0]}")

    if run.steps < 0:
        report.add("run.steps", "steps must be >= 0")
    if run.sign_epsilon is not None and not run.sign_epsilon > 0:
        report.add("run.sign_epsilon", "sign epsilon must be positive")
    if c and run.initial_stimulus is not None and len(run.initial_stimulus) != c[0][0]:
        report.add("run.initial_stimulus",
                   f"initial stimulus has length {len(run.initial_stimulus)}, classification expects {c[0][0]}")
    if j:
        n_s, n_v = j[0][0], j[-1][1]
        for k, i in enumerate(run.tracked_stimuli):
            if not 0 <= i < n_s:
                report.add(f"run.tracked_stimuli[{k}]", f"stimulus {i} outside the judgement input (dim {n_s})")
        if not 0 <= run.core_value < n_v:
            report.add("run.core_value", f"core value {run.core_value} outside 0..{n_v - 1}")
    if c:
        last_in, last_out = c[-1]
        pairs = list(run.rho_pairs)
        if len(run.tracked_stimuli) > 1:
            pairs.append(tuple(run.tracked_stimuli[:2]))
        for k, (i, jj) in enumerate(pairs):
            where = f"run.rho_pairs[{k}]" if k < len(run.rho_pairs) else "run.tracked_stimuli"
            if not 0 <= i < last_in:
                report.add(where, f"rho source {i} outside the last classification layer's input (dim {last_in})")
            if not 0 <= jj < last_out:
                report.add(where, f"rho target {jj} outside the last classification layer's output (dim {last_out})")

    table = None
    try:
        table = build_table(doc)
    except InvalidParams as exc:
        report.add("emotion_table", str(exc))
    if table is not None and len(run.tracked_stimuli) < 2:
        needs_two = [label for label, p in table.entries
                     if set(p.constraints()) & {"rho12", "eta2", "delta_s2"}]
        if needs_two:
            report.add("run.tracked_stimuli", f"rows {needs_two} need two tracked stimuli")
        if not run.tracked_stimuli and any(set(p.constraints()) & {"eta1", "delta_s1"} for _, p in table.entries):
            report.add("run.tracked_stimuli", "the emotion table needs at least one tracked stimulus")
    return report


# ------------------------------------------------------- runtime objects


def _build_layer(spec: LayerSpec) -> Layer:
    if len({len(r) for r in spec.weights}) > 1:
        raise DimensionMismatch("weight rows have different lengths")
    weights = np.array(spec.weights, dtype=np.float64) if spec.weights else np.zeros((0, 0))
    return Layer(weights, spec.bias, spec.activations)


def build_stack(layers: Sequence[LayerSpec]) -> NetworkStack:
    return NetworkStack(tuple(_build_layer(l) for l in layers))


def build_agent(spec: AgentSpec) -> Agent:
    return Agent(
        classification=build_stack(spec.classification),
        judgement=build_stack(spec.judgement),
        decision=build_stack(spec.decision),
        s_ref=None if spec.s_ref is None else np.array(spec.s_ref),
        self_index=spec.self_index,
        ability_index=spec.ability_index,
        ability_ref=spec.ability_ref,
        action_labels=spec.action_labels,
        value_labels=spec.value_labels,
    )


def _build_influence(spec: InfluenceSpec) -> InfluenceFunction:
    return InfluenceFunction(spec.kind, spec.slope, spec.breakpoints)


def build_environment(spec: EnvironmentSpec) -> Environment:
    if spec.kind == "identity":
        return IdentityEnvironment(spec.dim)
    if spec.kind == "linear":
        if not spec.matrix or len({len(r) for r in spec.matrix}) != 1:
            raise DimensionMismatch("environment matrix must be a non-empty rectangular array")
        return LinearEnvironment(spec.matrix)
    if len(spec.biases) != 2:
        raise DimensionMismatch("dyad biases must have two entries")
    params = DyadParams(spec.r0, spec.r1, _build_influence(spec.i10), _build_influence(spec.i01),
                        spec.biases[0], spec.biases[1])
    return DyadEnvironment(params, spec.initial)


def build_table(doc: ScenarioDoc, sign_epsilon: float | None = None) -> EmotionTable:
    eps = sign_epsilon if sign_epsilon is not None else doc.run.epsilon()
    if doc.emotion_table is None:
        return DEFAULT_TABLE.with_epsilon(eps)
    return EmotionTable.from_lines(doc.emotion_table, eps)


def initial_stimulus(doc: ScenarioDoc, agent: Agent) -> np.ndarray:
    if doc.run.initial_stimulus is not None:
        return np.array(doc.run.initial_stimulus)
    if doc.environment.kind == "dyad":
        return np.array(doc.environment.initial)
    return np.zeros(agent.classification.input_dim)


def _check_env_fit(env: Environment, agent: Agent, what: str):
    if env.action_dim != agent.decision.output_dim:
        raise DimensionMismatch(f"{what} takes {env.action_dim} action channels, decision produces "
                                f"{agent.decision.output_dim}")
    if env.stimulus_dim != agent.classification.input_dim:
        raise DimensionMismatch(f"{what} produces {env.stimulus_dim} stimuli, classification expects "
                                f"{agent.classification.input_dim}")


def run_scenario(doc: ScenarioDoc, steps: int | None = None, sign_epsilon: float | None = None,
                 agent_name: str | None = None) -> list[TrajectoryRecord]:
    """Build the active agent and environments from ``doc`` and run the loop."""
    _, spec = doc.agent_spec(agent_name)
    agent = build_agent(spec)
    real = build_environment(doc.environment)
    _check_env_fit(real, agent, "environment")
    perceived = None
    if doc.perceived_environment is not None:
        perceived = build_environment(doc.perceived_environment)
        _check_env_fit(perceived, agent, "perceived_environment")
    s0 = initial_stimulus(doc, agent)
    if s0.size != agent.classification.input_dim:
        raise DimensionMismatch(f"initial stimulus has length {s0.size}, classification expects "
                                f"{agent.classification.input_dim}")
    if not 0 <= doc.run.core_value < agent.n_values:
        raise IndexOutOfRange(f"core value {doc.run.core_value} outside 0..{agent.n_values - 1}")
    return run_loop(
        agent, real, perceived, s0,
        doc.run.steps if steps is None else steps,
        table=build_table(doc, sign_epsilon),
        tracked=doc.run.tracked_stimuli,
        rho_pairs=doc.run.rho_pairs,
        core_value=doc.run.core_value,
    )


# ------------------------------------------------------------ trajectories


def _fmt(x: float) -> str:
    if x == 0:
        return "0"
    return format(x, ".9g")


def trajectory_header(dims: tuple[int, int, int, int]) -> list[str]:
    n_st, n_s, n_v, n_a = dims
    return (
        ["t"]
        + [f"s_tilde_{k}" for k in range(n_st)]
        + [f"s_{k}" for k in range(n_s)]
        + [f"v_{k}" for k in range(n_v)]
        + [f"a_{k}" for k in range(n_a)]
        + ["emotions", "surprise"]
        + [f"reward_{k}" for k in range(n_v)]
    )


def format_trajectory(records: Sequence[TrajectoryRecord], dims: tuple[int, int, int, int] | None = None) -> str:
    if dims is None:
        if records:
            r = records[0]
            dims = (len(r.s_tilde), len(r.s_internal), len(r.v), len(r.a_tilde))
        else:
            dims = (0, 0, 0, 0)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if dims == (0, 0, 0, 0) and not records:
        w.writerow(["t", "s_tilde", "s", "v", "a", "emotions", "surprise", "reward"])
        return buf.getvalue()
    w.writerow(trajectory_header(dims))
    for r in records:
        reward = [_fmt(x) for x in r.reward] if r.reward is not None else [""] * dims[2]
        w.writerow(
            [str(r.t)]
            + [_fmt(x) for x in r.s_tilde]
            + [_fmt(x) for x in r.s_internal]
            + [_fmt(x) for x in r.v]
            + [_fmt(x) for x in r.a_tilde]
            + [";".join(r.emotions), "" if r.surprise is None else _fmt(r.surprise)]
            + reward
        )
    return buf.getvalue()


def write_trajectory(records: Sequence[TrajectoryRecord], sink, dims=None) -> int:
    """Write records as CSV to a path or an open file; returns the number of bytes written."""
    data = format_trajectory(records, dims).encode("utf-8")
    if isinstance(sink, (str, os.PathLike)):
        with open(sink, "wb") as fh:
            fh.write(data)
    elif isinstance(sink, io.TextIOBase):
        sink.write(data.decode("utf-8"))
    else:
        sink.write(data)
    return len(data)
