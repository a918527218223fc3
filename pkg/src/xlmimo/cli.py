"""Command-line front end: campaign sweeps, timing tables, bound grids."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .arrays import ArrayConfig
from .campaign import (
    CampaignConfig,
    benchmark_timing,
    config_from_sources,
    desk_config,
    emit_bench_csv,
    emit_csv,
    full_scale_config,
    run_campaign,
)
from .nearfield import semiorth_prob_bound, semiorth_prob_mc

BOUND_CSV_HEADER = "alpha,m_prime,r_k,r_j,bound,mc_estimate,mc_stderr,mc_samples"


def _comma_list(conv):
    def parse(text: str):
        items = tuple(conv(part.strip()) for part in text.split(",") if part.strip())
        if not items:
            raise argparse.ArgumentTypeError(f"expected a comma-separated list, got {text!r}")
        return items

    return parse


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xlmimo",
        description="Downlink multi-user scheduling simulator for very large linear arrays.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--config", type=Path, help="flat key = value config file")
    shared.add_argument(
        "--preset", choices=("desk", "paper"), default="desk",
        help="base configuration: desk = CI-sized grid, paper = full-scale study",
    )
    shared.add_argument("--seed", type=int, help="override the campaign seed")
    shared.add_argument("--trials", type=int, help="override the trial count")
    shared.add_argument(
        "--methods", type=_comma_list(str), metavar="LIST",
        help="comma-separated scheduler subset (dbs,dbs_s,sus,mrt)",
    )
    shared.add_argument(
        "--models", type=_comma_list(str), metavar="LIST",
        help="comma-separated channel-model subset (sw,pw)",
    )
    shared.add_argument("--workers", type=int, help="process-pool size (1 = sequential)")

    sim = sub.add_parser("simulate", parents=[shared], help="run a Monte-Carlo campaign")
    sim.add_argument("--out", type=Path, required=True, help="output CSV path")

    bench = sub.add_parser("bench", parents=[shared], help="time the schedulers sequentially")
    bench.add_argument("--out", type=Path, required=True, help="output CSV path")
    bench.add_argument("--reps", type=int, default=20, help="timed repetitions per point (default 20)")

    bound = sub.add_parser(
        "bound", help="tabulate the semi-orthogonality probability bound against Monte Carlo",
    )
    bound.add_argument("--alpha", type=_comma_list(float), required=True, metavar="LIST",
                       help="comma-separated correlation thresholds")
    bound.add_argument("--m-prime", type=_comma_list(int), required=True, metavar="LIST",
                       help="comma-separated effective aperture sizes (odd)")
    bound.add_argument("--out", type=Path, required=True, help="output CSV path")
    bound.add_argument("--m", type=int, default=256, help="physical array size (default 256)")
    bound.add_argument("--r-k", type=float, default=100.0, help="reference user range in m")
    bound.add_argument("--r-j", type=float, default=150.0, help="interfering user range in m")
    bound.add_argument("--samples", type=int, default=100_000, help="Monte-Carlo draws per point")
    bound.add_argument("--seed", type=int, default=0, help="Monte-Carlo seed")
    return parser


def _resolve_config(args: argparse.Namespace) -> CampaignConfig:
    base = full_scale_config() if args.preset == "paper" else desk_config()
    return config_from_sources(
        base,
        config_path=args.config,
        seed=args.seed,
        trials=args.trials,
        methods=args.methods,
        models=args.models,
        workers=args.workers,
    )


def _cmd_simulate(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    result = run_campaign(cfg)
    emit_csv(result, args.out)
    print(f"wrote {len(result.rows)} rows to {args.out}")
    for failure in result.failures:
        print(f"failed: {failure}", file=sys.stderr)
    if not result.rows:
        print("error: no trial produced a result", file=sys.stderr)
        return 1
    return 0


def _cmd_bench(args: argparse.Namespace) -> int:
    cfg = _resolve_config(args)
    rows = benchmark_timing(cfg, repetitions=args.reps)
    emit_bench_csv(rows, args.out)
    print(f"median scheduler time (ms), model={rows[0].model}, {args.reps} reps per point")
    for m in dict.fromkeys(r.m for r in rows):
        print(f"M = {m}")
        for method in dict.fromkeys(r.method for r in rows):
            cells = [r for r in rows if r.m == m and r.method == method]
            line = "  ".join(f"{r.snr_db:>5.0f}dB {r.median_ms:8.3f}" for r in cells)
            print(f"  {method:>6}: {line}")
    return 0


def _cmd_bound(args: argparse.Namespace) -> int:
    acfg = ArrayConfig(num_elements=args.m)
    lines = [BOUND_CSV_HEADER]
    for m_prime in args.m_prime:
        for alpha in args.alpha:
            bound = semiorth_prob_bound(alpha, args.r_k, args.r_j, m_prime, acfg)
            estimate, stderr = semiorth_prob_mc(
                alpha, args.r_k, args.r_j, m_prime, acfg,
                samples=args.samples, seed=args.seed,
            )
            lines.append(",".join((
                format(alpha, ".9g"), str(m_prime),
                format(args.r_k, ".9g"), format(args.r_j, ".9g"),
                format(bound, ".9g"), format(estimate, ".9g"),
                format(stderr, ".9g"), str(args.samples),
            )))
    args.out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {len(lines) - 1} rows to {args.out}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {"simulate": _cmd_simulate, "bench": _cmd_bench, "bound": _cmd_bound}
    try:
        return handlers[args.command](args)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
