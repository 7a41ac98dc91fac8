#!/usr/bin/env python3
"""
qpqlab command line.

    python app.py sweep-t --n 101 --trials 100000 --seed 7 --out sweep.csv
    python app.py interrogate --n 10

Exit codes: 0 every metric passed, 1 a metric failed, 2 usage error.
"""
import argparse
import sys
from typing import List, Optional

import config
from src.core import adversary
from src.utils import logger
from src.utils.reporting import FORMATS, write_record
from worker import (
    BASELINE_KINDS,
    INITIAL_KINDS,
    STRATEGIES,
    T_POLICIES,
    ExperimentConfig,
    RunRecord,
    execute_experiment,
)

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", dest="N", type=int, required=True, help="Database size N (>= 2).")
    common.add_argument("--t", type=int, default=None, help="Rhetoric query count for --t-policy fixed (default N-1).")
    common.add_argument("--t-policy", dest="t_policy", choices=T_POLICIES, default="fixed",
                        help="How |T| is chosen per trial.")
    common.add_argument("--trials", type=int, default=config.DEFAULT_TRIALS, help="Monte Carlo trials.")
    common.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Master seed.")
    common.add_argument("--out", default=None, help="Output file (default: stdout).")
    common.add_argument("--format", dest="fmt", choices=FORMATS, default="csv", help="Output format.")
    common.add_argument("--workers", type=int, default=config.NUM_WORKERS, help="Worker processes.")
    common.add_argument("--strict", action="store_true", help="Tighten exact comparisons to QPQLAB_STRICT_TOL.")

    parser = argparse.ArgumentParser(
        prog="qpqlab",
        description="Simulator and exact analytics for O(log N) quantum private query protocols.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("honest", parents=[common], help="Honest protocol runs.")

    attack = sub.add_parser("attack", parents=[common], help="Computational-basis attack by the database.")
    attack.add_argument("--strategy", choices=STRATEGIES, default="full")
    attack.add_argument("--concealment", choices=tuple(adversary.CONCEALMENT_POLICIES), default="uniform")

    sweep = sub.add_parser("sweep-t", parents=[common], help="Detection against t with random-α fakes.")
    sweep.add_argument("--stride", type=int, default=1, help="Step between swept t values.")

    sub.add_parser("optimal-fake", parents=[common], help="Optimal concealing fake state.")

    interrogate = sub.add_parser("interrogate", parents=[common], help="Quantum interrogation by the user.")
    interrogate.add_argument("--kind", choices=INITIAL_KINDS, default=None, help="Initial state (default: all).")

    baseline = sub.add_parser("baseline", parents=[common], help="Attack on an earlier scheme.")
    baseline.add_argument("--kind", choices=BASELINE_KINDS, required=True)

    sub.add_parser("table1", parents=[common], help="Cross-protocol comparison table.")
    return parser


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(round(value, 9))
    return "-" if value is None else str(value)


def summarize(record: RunRecord) -> List[str]:
    lines = []
    for row in record.rows:
        mark = "✅" if row.get("passed", True) else "❌"
        if "protocol" in row:
            lines.append(f"{mark} {row['protocol']}: cheat-sensitive {'yes' if row['cheat_sensitive'] else 'no'}, "
                         f"leakage {row['leakage_bits']:.4f} bits, "
                         f"detection {row['detection_rate']:.4f} (analytic {row['detection_analytic']:.4f}), "
                         f"identified j {row['identified_j_rate']:.4f}")
            continue
        label = row["metric"] if row.get("param") is None else f"{row['metric']}[{row['param']}]"
        note = f" ({row['note']})" if row.get("note") else ""
        lines.append(f"{mark} {label}{note}: {_fmt(row['empirical'])} "
                     f"(expected {_fmt(row['analytic'])}, bound {_fmt(row['bound'])})")
    return lines


def cli(argv: Optional[List[str]] = None) -> int:
    logger.configure()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE

    cfg = ExperimentConfig(
        command=args.command, N=args.N, t=args.t, t_policy=args.t_policy,
        trials=args.trials, seed=args.seed,
        strategy=getattr(args, "strategy", "full"),
        concealment=getattr(args, "concealment", "uniform"),
        kind=getattr(args, "kind", None),
        stride=getattr(args, "stride", 1),
        strict=args.strict, out=args.out, fmt=args.fmt, workers=args.workers,
    )
    result = execute_experiment(cfg)
    if result["status"] != "success":
        print(f"❌ {result['error']}", file=sys.stderr)
        if result.get("usage"):
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return EXIT_FAILED

    record = result["record"]
    text = write_record(record, cfg.out, cfg.fmt)
    # stdout stays machine-readable when it carries the report
    stream = sys.stdout if cfg.out else sys.stderr
    if not cfg.out:
        sys.stdout.write(text)
    for line in summarize(record):
        print(line, file=stream)
    if cfg.out:
        print(f"📁 {cfg.command} report written to {cfg.out}", file=stream)
    return EXIT_OK if record.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(cli())
