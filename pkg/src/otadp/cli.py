"""Command-line entry point: ``otadp run | design-jammer | accountant``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, InvalidInput, InvariantViolation
from .runner import jammer_design_report, load_config, read_metrics_csv, replay_ledger_csv, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2


def _cmd_run(args) -> int:
    cfg = load_config(args.config, args.override)
    summary = run_experiment(cfg, args.output_dir)
    print(f"final test accuracy {summary['final_test_acc_mean']:.4f} "
          f"(std {summary['final_test_acc_std']:.4f}) over {len(cfg.seeds)} seed(s)")
    for w in summary["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def _cmd_design(args) -> int:
    report = jammer_design_report(args.eps, args.delta, args.rounds, args.data_size, args.alpha_u,
                                  args.h_cj, args.sigma_c, args.margin)
    print(json.dumps(report, indent=2))
    return EXIT_OK


def _cmd_accountant(args) -> int:
    path = Path(args.replay)
    if not path.exists():
        raise ConfigError(f"no such file {path}")
    ledger_path = path
    metrics = None
    if path.name.startswith("metrics_"):
        ledger_path = path.with_name("ledger_" + path.name[len("metrics_"):])
        metrics = {r.iteration: r for r in read_metrics_csv(path)}
    if not ledger_path.exists():
        raise ConfigError(f"no ledger file {ledger_path}")
    mismatches = 0
    print("iter,eps_bound,eps_max_client")
    for it, eps_b, eps_c in replay_ledger_csv(ledger_path):
        print(f"{it},{eps_b:.9g},{eps_c:.9g}")
        if metrics is not None:
            row = metrics[it]
            if f"{eps_b:.9g}" != f"{row.eps_bound:.9g}" or f"{eps_c:.9g}" != f"{row.eps_max_client:.9g}":
                mismatches += 1
    if mismatches:
        print(f"{mismatches} row(s) disagree with {path}", file=sys.stderr)
        return EXIT_INVARIANT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="otadp", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment from a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE")
    run.add_argument("--output-dir", default=None)
    run.set_defaults(func=_cmd_run)

    dj = sub.add_parser("design-jammer", help="jammer power-control factor for a privacy target")
    dj.add_argument("--eps", type=float, required=True)
    dj.add_argument("--delta", type=float, required=True)
    dj.add_argument("--rounds", type=int, required=True)
    dj.add_argument("--data-size", type=int, required=True)
    dj.add_argument("--alpha-u", type=float, required=True)
    dj.add_argument("--h-cj", type=float, required=True)
    dj.add_argument("--sigma-c", type=float, required=True)
    dj.add_argument("--margin", type=float, default=1.0)
    dj.set_defaults(func=_cmd_design)

    acc = sub.add_parser("accountant", help="replay the privacy ledger of a finished run")
    acc.add_argument("--replay", required=True, metavar="CSV")
    acc.set_defaults(func=_cmd_accountant)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InvalidInput) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InvariantViolation as exc:
        print(f"invariant violation: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
