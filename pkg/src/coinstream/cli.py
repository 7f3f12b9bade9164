"""Command line entry points: run, sweep, walk.

run executes a config and exits 0 only if every asserted criterion passes.
sweep repeats a config across a C grid and exits 0 if some C passes.
walk simulates walk families, writes a trace CSV, and reports positivity.
Figures render next to the delimited outputs unless --no-figures is given.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .errors import CoinstreamError
from .harness import ExperimentConfig, run_experiment, sweep_C
from .randwalk import check_positive, simulate_classical, simulate_flex


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except CoinstreamError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coinstream",
        description="Streaming pure-exploration experiments",
    )
    sub = parser.add_subparsers(required=True)

    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("--config", required=True)
    run_p.add_argument("--override", action="append", default=[],
                       metavar="KEY=VALUE",
                       help="override a config key (dotted for nesting)")
    run_p.add_argument("--seed", type=int, help="override base_seed")
    run_p.add_argument("--out", help="output directory (default from config)")
    run_p.add_argument("--workers", type=int,
                       help="parallel trial workers (or env COINSTREAM_WORKERS)")
    run_p.add_argument("--no-figures", action="store_true")
    run_p.set_defaults(handler=cmd_run)

    sweep_p = sub.add_parser("sweep", help="sweep a parameter grid")
    sweep_p.add_argument("--config", required=True)
    sweep_p.add_argument("--param", default="C", choices=["C"])
    sweep_p.add_argument("--grid", required=True,
                         help="comma-separated values, e.g. 1,2,4,8")
    sweep_p.add_argument("--seed", type=int, help="override base_seed")
    sweep_p.add_argument("--out", help="output directory")
    sweep_p.add_argument("--workers", type=int)
    sweep_p.add_argument("--no-figures", action="store_true")
    sweep_p.set_defaults(handler=cmd_sweep)

    walk_p = sub.add_parser("walk", help="simulate random walks")
    walk_p.add_argument("--family", required=True,
                        choices=["classical", "flex"])
    walk_p.add_argument("--n", type=int, default=1000)
    walk_p.add_argument("--delta", type=float, default=0.1)
    walk_p.add_argument("--C", type=float, default=32.0)
    walk_p.add_argument("--kappa", type=float)
    walk_p.add_argument("--p", type=float, default=0.9,
                        help="classical forward probability")
    walk_p.add_argument("--seeds", type=int, default=10000)
    walk_p.add_argument("--seed", type=int, default=0, help="base seed")
    walk_p.add_argument("--out", required=True,
                        help="trace CSV path (base seed's trace)")
    walk_p.add_argument("--no-figures", action="store_true")
    walk_p.set_defaults(handler=cmd_walk)
    return parser


def load_config(path: str, overrides, seed) -> ExperimentConfig:
    with open(path) as fh:
        data = json.load(fh)
    for item in overrides:
        key, _, raw = item.partition("=")
        if not _:
            raise SystemExit(f"override {item!r} is not KEY=VALUE")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        _set_dotted(data, key.strip(), value)
    if seed is not None:
        data["base_seed"] = seed
    return ExperimentConfig.from_json(data)


def _set_dotted(data: dict, key: str, value):
    parts = key.split(".")
    node = data
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value


def _default_out(config: ExperimentConfig) -> str:
    return config.output or os.path.join("runs", config.name)


def cmd_run(args) -> int:
    config = load_config(args.config, args.override, args.seed)
    out = args.out or _default_out(config)
    report = run_experiment(config, out_dir=out, workers=args.workers,
                            render=not args.no_figures)
    agg = report.aggregates
    print(f"{config.name}: {agg['trials']} trials, "
          f"success rate {agg['success_rate']:.4f} "
          f"(halfwidth {agg['wilson_halfwidth']:.4f}), "
          f"mean tosses {agg['mean_tosses']:.0f}, outputs in {out}")
    for entry in agg["asserts"]:
        status = "PASS" if entry["passed"] else "FAIL"
        print(f"  [{status}] {entry['criterion']}: observed "
              f"{entry['observed']} vs threshold {entry['threshold']}")
    return 0 if report.passed else 1


def cmd_sweep(args) -> int:
    config = load_config(args.config, [], args.seed)
    grid = [float(v) for v in args.grid.split(",") if v.strip()]
    out = args.out or _default_out(config) + "_sweep"
    sweep = sweep_C(config, grid, out_dir=out, workers=args.workers,
                    render=not args.no_figures)
    for row in sweep.rows:
        status = "PASS" if row["passed"] else "FAIL"
        print(f"  C={row['C']:g}: success {row['success_rate']:.4f} "
              f"max tosses {row['max_tosses']} [{status}]")
    if sweep.smallest_passing is None:
        print("no C in the grid passed")
        return 1
    print(f"smallest passing C: {sweep.smallest_passing:g}; outputs in {out}")
    return 0


def cmd_walk(args) -> int:
    def one(seed: int):
        if args.family == "classical":
            return simulate_classical(args.n, args.p, seed)
        return simulate_flex(args.n, kappa=args.kappa, C=args.C,
                             delta=args.delta, seed=seed)

    positive = 0
    sample = []
    for s in range(args.seeds):
        trace = one(args.seed + s)
        ok, _ = check_positive(trace)
        positive += ok
        if len(sample) < 8:
            sample.append(trace)
    frequency = positive / args.seeds
    base_trace = sample[0]
    base_trace.to_csv(args.out)
    print(f"{args.family} walk: positivity frequency {frequency:.4f} "
          f"over {args.seeds} seeds (n={args.n})")
    print(f"trace for seed {args.seed} written to {args.out}")
    summary_path = os.path.splitext(args.out)[0] + "_summary.json"
    with open(summary_path, "w") as fh:
        json.dump({
            "family": args.family,
            "n": args.n,
            "seeds": args.seeds,
            "positivity_frequency": frequency,
            "params": base_trace.params,
        }, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if not args.no_figures:
        from .figures import render_walks

        out_dir = os.path.dirname(os.path.abspath(args.out))
        render_walks(sample, out_dir)
    return 0
