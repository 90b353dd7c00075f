"""Command-line entry point.

Exit codes: 0 success, 1 invalid scenario, 2 numeric failure during a run,
64 usage error. Data goes to stdout, diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .action import prosocial_act, prosocial_benefit
from .appraisal import build_snapshot
from .emotion import classify_emotions
from .environment import step_dyad
from .errors import InvalidParams, NonFiniteResult, ScenarioError, ShareError
from .neuroware import KINDS, ProfileParams, generate_profile, render_heatmap
from .perception import classify
from .scenario_io import (
    AgentSpec,
    LayerSpec,
    agent_to_dict,
    build_agent,
    build_environment,
    build_table,
    format_trajectory,
    load_scenario,
    run_scenario,
    validate,
)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERIC = 2
EXIT_USAGE = 64

SIGN_EPS_ENV = "SHARE_SIGN_EPS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(x: float) -> str:
    return "0" if x == 0 else format(x, ".9g")


def _env_epsilon() -> float | None:
    raw = os.environ.get(SIGN_EPS_ENV)
    if not raw:
        return None
    try:
        eps = float(raw)
    except ValueError:
        raise UsageError(f"{SIGN_EPS_ENV}={raw!r} is not a number") from None
    if not eps > 0:
        raise UsageError(f"{SIGN_EPS_ENV} must be positive")
    return eps


def _load(path: str):
    """Parse and validate; raises ScenarioError with every problem listed."""
    try:
        doc = load_scenario(path)
    except OSError as exc:
        raise ScenarioError(exc.strerror or str(exc), path) from None
    report = validate(doc)
    if not report.ok:
        raise ScenarioError("\n".join(f"{path}: {p}: {m}" for p, m in report.errors))
    return doc


def _epsilon(args, doc) -> float:
    if getattr(args, "sign_eps", None) is not None:
        return args.sign_eps
    return doc.run.epsilon(_env_epsilon())


def _state_at(doc, step: int, eps: float):
    """Agent, table and the loop state (external stimulus, responses) at ``step``."""
    records = run_scenario(doc, steps=step, sign_epsilon=eps)
    agent = build_agent(doc.agent_spec()[1])
    s_tilde = np.array(records[-1].s_tilde)
    return agent, build_table(doc, eps), s_tilde, classify(agent.classification, s_tilde)


def _snapshot(doc, agent, s_tilde, responses):
    run = doc.run
    tracked = list(run.tracked_stimuli)
    pairs = list(run.rho_pairs)
    if len(tracked) > 1 and tuple(tracked[:2]) not in pairs:
        pairs.append(tuple(tracked[:2]))
    s_prev = responses[-2].values if len(responses) > 1 else s_tilde
    return build_snapshot(agent, responses[-1].values, tracked, pairs, s_prev=s_prev)


def cmd_run(args, out) -> int:
    doc = _load(args.scenario)
    records = run_scenario(doc, steps=args.steps, sign_epsilon=_epsilon(args, doc))
    csv_text = format_trajectory(records)
    if args.out is None:
        out.write(csv_text)
        return EXIT_OK
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{Path(args.scenario).stem}.csv").write_bytes(csv_text.encode("utf-8"))
    for r in records:
        out.write(f"t={r.t}\t{';'.join(r.emotions) or '-'}\n")
    for name, p in doc.experiments:
        out.write(f"prosocial {name}\tB_act={_fmt(prosocial_benefit(p))}\tact={prosocial_act(p)}\n")
    return EXIT_OK


def cmd_appraise(args, out) -> int:
    doc = _load(args.scenario)
    agent, _, s_tilde, responses = _state_at(doc, args.at_step, _epsilon(args, doc))
    snap = _snapshot(doc, agent, s_tilde, responses)
    out.write("quantity,stimulus,core_value,value\n")
    for c, x in enumerate(snap.alpha):
        out.write(f"alpha,{agent.self_index},{c},{_fmt(x)}\n")
    for c, x in enumerate(snap.beta):
        out.write(f"beta,{agent.ability_index},{c},{_fmt(x)}\n")
    for i, st in snap.stimuli.items():
        for c, x in enumerate(st.eta):
            out.write(f"eta,{i},{c},{_fmt(x)}\n")
        out.write(f"delta_s,{i},,{_fmt(st.delta_s)}\n")
        for c, x in enumerate(st.gamma):
            out.write(f"gamma,{i},{c},{_fmt(x)}\n")
    for (i, j), x in snap.rho.items():
        out.write(f"rho,{i}>{j},,{_fmt(x)}\n")
    return EXIT_OK


def cmd_emotions(args, out) -> int:
    doc = _load(args.scenario)
    agent, table, s_tilde, responses = _state_at(doc, args.at_step, _epsilon(args, doc))
    snap = _snapshot(doc, agent, s_tilde, responses)
    tracked = doc.run.tracked_stimuli
    s1 = tracked[0] if tracked else agent.self_index
    s2 = tracked[1] if len(tracked) > 1 else None
    out.write("label,specificity\n")
    for m in classify_emotions(snap, table, doc.run.core_value, s1, s2):
        out.write(f"{m.label},{m.specificity}\n")
    return EXIT_OK


_BLOCKS = {"C": "classification", "J": "judgement", "D": "decision"}


def cmd_render(args, out) -> int:
    doc = _load(args.scenario)
    _, spec = doc.agent_spec(args.agent)
    agent = build_agent(spec)
    stack = getattr(agent, _BLOCKS[args.block])
    if not 1 <= args.layer <= len(stack.layers):
        raise UsageError(f"--layer must lie in 1..{len(stack.layers)}")
    layer = stack.layers[args.layer - 1]
    svg = render_heatmap(layer.weights, layer.bias, title=f"{args.agent or doc.agent_spec()[0]} {args.block}")
    Path(args.out).write_bytes(svg.encode("utf-8"))
    return EXIT_OK


def _profile_fragment(profile) -> dict:
    def spec(stack):
        layer = stack.layers[0]
        return LayerSpec(tuple(map(tuple, layer.weights.tolist())), tuple(layer.bias.tolist()), layer.activations)

    agent = AgentSpec((spec(profile.classification),), (spec(profile.judgement),), (spec(profile.decision),))
    return {"agents": {profile.name: agent_to_dict(agent)}}


def cmd_profiles(args, out) -> int:
    params = ProfileParams(n=args.n, diag=args.diag, bg=args.bg, bias_level=args.bias_level, seed=args.seed)
    try:
        profile = generate_profile(args.kind, params)
    except InvalidParams as exc:
        raise UsageError(f"profiles: {exc}") from None
    fragment = json.dumps(_profile_fragment(profile), indent=2) + "\n"
    if args.out is None:
        out.write(fragment)
        return EXIT_OK
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"{args.kind}.json"
    path.write_bytes(fragment.encode("utf-8"))
    out.write(f"{path}\n")
    for block, layer in profile.blocks().items():
        path = out_dir / f"{args.kind}_{block}.svg"
        path.write_bytes(render_heatmap(layer.weights, layer.bias, title=f"{args.kind} {block}").encode("utf-8"))
        out.write(f"{path}\n")
    return EXIT_OK


def cmd_dyad(args, out) -> int:
    doc = _load(args.scenario)
    if doc.environment.kind != "dyad":
        raise ScenarioError("the dyad command needs a dyad environment", "environment.kind")
    env = build_environment(doc.environment)
    steps = doc.run.steps if args.steps is None else args.steps
    out.write("t,s0,s1\n")
    s0, s1 = env.state
    out.write(f"0,{_fmt(s0)},{_fmt(s1)}\n")
    for t in range(1, steps + 1):
        s0, s1 = step_dyad(env)
        out.write(f"{t},{_fmt(s0)},{_fmt(s1)}\n")
    return EXIT_OK


def _nonnegative(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return n


def _positive_float(text: str) -> float:
    x = float(text)
    if not x > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return x


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="share", description="Affective agent simulation engine.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("run", help="run the agent-environment loop and write the trajectory CSV")
    p.add_argument("scenario")
    p.add_argument("--steps", type=_nonnegative)
    p.add_argument("--out", help="directory for <scenario>.csv; without it the CSV goes to stdout")
    p.add_argument("--sign-eps", type=_positive_float)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("appraise", help="print the appraisal snapshot at one step")
    p.add_argument("scenario")
    p.add_argument("--at-step", type=_nonnegative, default=0)
    p.add_argument("--sign-eps", type=_positive_float)
    p.set_defaults(func=cmd_appraise)

    p = sub.add_parser("emotions", help="print the emotion matches at one step")
    p.add_argument("scenario")
    p.add_argument("--at-step", type=_nonnegative, default=0)
    p.add_argument("--sign-eps", type=_positive_float)
    p.set_defaults(func=cmd_emotions)

    p = sub.add_parser("render", help="render one weight/bias block as an SVG heatmap")
    p.add_argument("scenario")
    p.add_argument("--block", choices=sorted(_BLOCKS), required=True)
    p.add_argument("--agent")
    p.add_argument("--layer", type=int, default=1, help="1-based layer within the block")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("profiles", help="generate a neuroware archetype")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--diag", type=float, default=1.0)
    p.add_argument("--bg", type=float, default=0.05)
    p.add_argument("--bias-level", type=float, default=0.3)
    p.add_argument("--out")
    p.set_defaults(func=cmd_profiles)

    p = sub.add_parser("dyad", help="iterate the two-partner mood equations")
    p.add_argument("scenario")
    p.add_argument("--steps", type=_nonnegative)
    p.set_defaults(func=cmd_dyad)
    return parser


def run_command(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, stdout)
    except SystemExit as exc:
        return exc.code or EXIT_OK
    except UsageError as exc:
        stderr.write(f"{exc}\n")
        return EXIT_USAGE
    except ScenarioError as exc:
        stderr.write(f"invalid scenario: {exc}\n")
        return EXIT_INVALID
    except NonFiniteResult as exc:
        stderr.write(f"numeric failure after {len(exc.trajectory)} records: {exc}\n")
        return EXIT_NUMERIC
    except ShareError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_NUMERIC


def main() -> None:
    raise SystemExit(run_command())


if __name__ == "__main__":
    main()
