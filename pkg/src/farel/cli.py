"""Command-line interface: run experiment grids, describe environments, replay traces.

Exit codes: 0 success, 1 runtime failure (e.g. replay check mismatch),
2 configuration error, 3 partial grid-cell failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .distances import DEFAULT_K, DEFAULT_LAMBDA, DISTANCE_METRICS, HEOM
from .engine import FairnessEngine
from .envs.fraud import FraudEnv
from .envs.hiring import HiringEnv
from .experiments.config import ConfigError, ExperimentConfig
from .experiments.output import fmt
from .experiments.runner import GROUP_PAIRS, notion_specs, run_grid
from .history import WindowSpec
from .interactions import read_trace
from .objectives import CANONICAL_OBJECTIVES, canonical_order


def _cmd_run(args) -> int:
    try:
        config = ExperimentConfig.from_file(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return run_grid(config, args.out, workers=args.workers)


def _cmd_env_describe(args) -> int:
    env = HiringEnv() if args.scenario == "hiring" else FraudEnv()
    print(json.dumps(env.describe(), indent=2, sort_keys=True))
    return 0


def _cmd_replay(args) -> int:
    trace, _, individual_schema, meta = read_trace(args.trace)
    if args.objectives:
        try:
            labels = canonical_order([l for l in args.objectives.split(",")])
        except ValueError as exc:
            print(f"config error: {exc}", file=sys.stderr)
            return 2
    else:
        labels = CANONICAL_OBJECTIVES
    scenario = args.scenario or meta.get("scenario")
    if scenario not in GROUP_PAIRS:
        print("config error: pass --scenario hiring|fraud (trace metadata has none)", file=sys.stderr)
        return 2
    try:
        if args.kind == "sliding":
            window = WindowSpec("sliding", args.window)
        else:
            window = WindowSpec("discounted", args.window, gamma=args.gamma,
                                threshold=args.threshold, delay=args.delay)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    specs = notion_specs(labels, scenario, args.distance, args.lam, args.k)
    n_actions = len(trace.interactions[0].action_dist) if len(trace) else 2
    engine = FairnessEngine(specs, window, individual_schema, n_actions=n_actions)

    fairness_labels = [l for l in labels if l != "R"]
    out = open(args.out, "w", encoding="utf-8", newline="\n") if args.out else sys.stdout
    worst = 0.0
    try:
        out.write("t," + ",".join(fairness_labels) + "\n")
        for x in trace:
            values = engine.observe(x)
            row = [values[l].or_zero() for l in fairness_labels]
            out.write(str(x.t) + "," + ",".join(fmt(v) for v in row) + "\n")
            if args.check and x.reward is not None:
                for label, value in zip(fairness_labels, row):
                    if label in x.reward.labels:
                        worst = max(worst, abs(x.reward[label] - value))
    finally:
        if args.out:
            out.close()
    if args.check:
        print(f"max deviation from recorded fairness rewards: {worst:.3e}", file=sys.stderr)
        if worst > args.tolerance:
            return 1
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="farel", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="execute an experiment grid from a JSON config")
    run.add_argument("config", help="path to the experiment config file")
    run.add_argument("--out", default="results", help="output directory (default: results)")
    run.add_argument("--workers", type=int, default=1, help="parallel cell workers")
    run.set_defaults(fn=_cmd_run)

    env = sub.add_parser("env", help="environment utilities")
    env_sub = env.add_subparsers(dest="env_command", required=True)
    describe = env_sub.add_parser("describe", help="print an environment's defaults as JSON")
    describe.add_argument("scenario", choices=("hiring", "fraud"))
    describe.set_defaults(fn=_cmd_env_describe)

    replay = sub.add_parser("replay", help="recompute fairness notions over a saved trace")
    replay.add_argument("trace", help="JSON-lines trace file")
    replay.add_argument("--scenario", choices=("hiring", "fraud"))
    replay.add_argument("--objectives", help="comma-separated subset (default: all eight)")
    replay.add_argument("--kind", choices=("sliding", "discounted"), default="sliding")
    replay.add_argument("--window", type=int, default=500)
    replay.add_argument("--gamma", type=float, default=1.0)
    replay.add_argument("--threshold", type=float, default=1e-4)
    replay.add_argument("--delay", type=int, default=50)
    replay.add_argument("--distance", choices=DISTANCE_METRICS, default=HEOM)
    replay.add_argument("--lam", type=float, default=DEFAULT_LAMBDA)
    replay.add_argument("--k", type=int, default=DEFAULT_K)
    replay.add_argument("--out", help="write the per-step CSV here instead of stdout")
    replay.add_argument("--check", action="store_true",
                        help="compare against the trace's recorded fairness rewards")
    replay.add_argument("--tolerance", type=float, default=1e-9)
    replay.set_defaults(fn=_cmd_replay)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
