"""Command-line entry point: ``qrepeater run|sweep|validate CONFIG``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import load_config
from .errors import ConfigError, EmptySweepError
from .harness import load_sweep, run, sweep, write_outputs
from .scheduling import fatal, validate_config


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("config", type=Path, help="TOML configuration file")
    p.add_argument("--seed", type=int, default=None, help="override the seed in the config")
    p.add_argument("--out-dir", type=Path, default=Path("."), help="where to write results")
    p.add_argument("--trace", action="store_true", help="also write trace.ndjson")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qrepeater", description="Quantum repeater line simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in (
        ("run", "simulate one configuration"),
        ("sweep", "grid search over band boundaries and threshold schedules"),
        ("validate", "check a configuration without running it"),
    ):
        _common(sub.add_parser(name, help=text))
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    result = run(config, trace=args.trace)
    paths = write_outputs(result, args.out_dir)
    s = result.summary
    print(f"{s.status}: {s.delivered} pairs, throughput {s.throughput:.3f} pairs/s")
    for p in paths.values():
        print(f"wrote {p}")
    return 0


def _cmd_sweep(args) -> int:
    spec = load_sweep(args.config)
    if args.seed is not None:
        spec.base = spec.base.replace(seed=args.seed)
    result = sweep(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "sweep_table.csv").write_text(result.to_csv())
    print(f"wrote {out / 'sweep_table.csv'} ({len(result.rows)} runs, {len(result.cells)} cells)")
    best = result.best
    print(f"best boundaries {list(best.boundaries)} thresholds {list(best.thresholds)}: median {best.median_slope:.3f} pairs/s")
    for i, res in enumerate(result.best_rerun):
        sub = out / f"best_seed{res.summary.seed}" if len(result.best_rerun) > 1 else out / "best"
        write_outputs(res, sub)
        print(f"rerun {i}: {res.summary.status}, {res.summary.throughput:.3f} pairs/s -> {sub}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        config = config.replace(seed=args.seed)
    violations = validate_config(config)
    for v in violations:
        print(v)
    report = {"valid": not fatal(violations), "violations": [v._asdict() for v in violations]}
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "validation.json").write_text(json.dumps(report, indent=2) + "\n")
    if fatal(violations):
        return 2
    print("ok")
    return 0


COMMANDS = {"run": _cmd_run, "sweep": _cmd_sweep, "validate": _cmd_validate}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except EmptySweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
