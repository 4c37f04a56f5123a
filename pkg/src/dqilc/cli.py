"""Command-line entry point: ``dqilc {run,validate,replay,metrics}``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from .config import PRESETS, ExperimentConfig, load_config, validate
from .experiment_harness import (
    REPLAY_TOL,
    export_campaign,
    replay_csv,
    run_campaign,
    summarize_csv,
)

log = logging.getLogger("dqilc")


def _load(args) -> ExperimentConfig:
    if args.config:
        cfg = load_config(args.config)
    else:
        cfg = PRESETS[args.preset]()
    changes = {}
    if args.iterations is not None:
        changes["iterations"] = args.iterations
    if args.segments is not None:
        changes["segments"] = args.segments
    if args.variant is not None:
        changes["variant"] = args.variant
    if args.freq is not None:
        changes["frequency"] = args.freq
    if args.out is not None:
        changes["output_dir"] = args.out
    if changes:
        cfg = cfg.replace(**changes)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="YAML experiment file (defaults to the preset)")
    p.add_argument("--preset", choices=sorted(PRESETS), default="proximity")
    p.add_argument("--seed", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--segments", type=int)
    p.add_argument("--variant", choices=["unsaturated", "saturated"])
    p.add_argument("--freq", type=float, help="control and simulation frequency [Hz]")
    p.add_argument("--out", help="output directory")


def cmd_run(args) -> int:
    cfg = _load(args)
    problems = validate(cfg)
    if problems:
        for p in problems:
            log.error(p)
        return 2

    def progress(it):
        s = it.summary()
        log.info(
            "k=%d  max|dP|=%.3f m  max angle=%.4f deg  max theta=%.4f",
            s["k"], s["max_dP_norm_m"], s["max_angle_deg"], s["max_theta_hat"],
        )

    report = run_campaign(cfg, progress=progress)
    out = export_campaign(report, cfg.output_dir)
    print(f"wrote {len(report.logs)} iteration logs to {out}")
    return 1 if report.warnings else 0


def cmd_validate(args) -> int:
    try:
        cfg = _load(args)
    except (ValueError, TypeError) as exc:
        print(f"invalid: {exc}")
        return 2
    problems = validate(cfg)
    for p in problems:
        print(f"invalid: {p}")
    if not problems:
        print(f"ok: {cfg.iterations} iterations, {cfg.n_steps + 1} ticks, {cfg.segments} segments, {cfg.variant}")
    return 2 if problems else 0


def cmd_replay(args) -> int:
    dev = replay_csv(args.log, load_config(args.config) if args.config else None)
    ok = dev <= REPLAY_TOL
    print(f"{'ok' if ok else 'MISMATCH'}: max deviation {dev:.3e} (tolerance {REPLAY_TOL:g})")
    return 0 if ok else 1


def cmd_metrics(args) -> int:
    paths = sorted(Path(args.log).glob("iter_*.csv")) if Path(args.log).is_dir() else [Path(args.log)]
    if not paths:
        print(f"no iteration logs under {args.log}")
        return 1
    out = [{"file": p.name, **summarize_csv(p)} for p in paths]
    print(yaml.safe_dump(out, sort_keys=False), end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dqilc", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a campaign and write logs")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("validate", help="check a configuration")
    _add_config_flags(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("replay", help="open-loop consistency check of an iteration log")
    p.add_argument("--log", required=True, type=Path, help="iter_kkk.csv written by run")
    p.add_argument("--config", type=Path, help="defaults to config.yaml next to the log")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("metrics", help="recompute summaries from CSV logs")
    p.add_argument("--log", required=True, help="iteration CSV or a run directory")
    p.set_defaults(func=cmd_metrics)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose or args.command == "run" else logging.WARNING,
                        format="%(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
