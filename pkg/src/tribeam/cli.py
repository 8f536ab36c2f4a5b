"""Command line front end.

Two subcommands:

``run``       execute a named experiment and write its CSVs plus a
              ``summary.json`` under the output directory.
``validate``  parse the config (file, preset, overrides), run the
              cross-field checks and print the normalized result.

Exit codes: 0 success, 1 experiment failure mid-run (a ``failure.json``
with the error text is left in the output directory), 2 bad usage or an
invalid config.
"""

from __future__ import annotations

import argparse
import json
import subprocess
import sys
import time
from pathlib import Path

from .config import (ConfigError, ExperimentConfig, apply_overrides,
                     apply_preset, config_to_dict, load_config, normalized_text)
from .experiments import EXPERIMENTS, run_experiment

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tribeam",
                                     description="Tri-timescale tri-hybrid beamforming simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a named experiment")
    run_p.add_argument("--experiment", required=True,
                       help="one of: " + ", ".join(sorted(EXPERIMENTS)))
    _common_config_flags(run_p)
    run_p.add_argument("--out", default="results", help="output directory (default: results)")

    val_p = sub.add_parser("validate", help="check a config and print the normalized form")
    _common_config_flags(val_p)
    return parser


def _common_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="INI config file")
    p.add_argument("--preset", default=None, help="named parameter preset")
    p.add_argument("--seed", type=int, default=None, help="override sim.seed")
    p.add_argument("--trials", type=int, default=None, help="override sim.trials")
    p.add_argument("--override", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override a single config field (repeatable)")


def _assemble_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig()
    if args.preset:
        cfg = apply_preset(cfg, args.preset)
    if args.config:
        cfg = load_config(Path(args.config), base=cfg)
    if args.override:
        cfg = apply_overrides(cfg, args.override)
    if args.seed is not None:
        cfg = cfg.replace(seed=args.seed)
    if args.trials is not None:
        cfg = cfg.replace(trials=args.trials)
    return cfg


def _git_revision() -> str:
    try:
        out = subprocess.run(["git", "describe", "--always", "--dirty"],
                             capture_output=True, text=True, timeout=10)
        if out.returncode == 0 and out.stdout.strip():
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def cmd_run(args) -> int:
    try:
        cfg = _assemble_config(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    if args.experiment not in EXPERIMENTS:
        print(f"unknown experiment '{args.experiment}'; choose from: "
              + ", ".join(sorted(EXPERIMENTS)), file=sys.stderr)
        return 2
    out_dir = Path(args.out) / args.experiment
    out_dir.mkdir(parents=True, exist_ok=True)
    start = time.monotonic()
    try:
        files = run_experiment(args.experiment, cfg, out_dir)
    except Exception as err:  # deliberate: any mid-run failure must be recorded
        payload = {"experiment": args.experiment, "error": f"{type(err).__name__}: {err}"}
        with open(out_dir / "failure.json", "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
        print(f"experiment failed: {payload['error']}", file=sys.stderr)
        return 1
    summary = {
        "experiment": args.experiment,
        "seed": cfg.seed,
        "git_revision": _git_revision(),
        "wall_time_s": round(time.monotonic() - start, 3),
        "outputs": sorted(files),
        "config": config_to_dict(cfg),
    }
    with open(out_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    print(f"wrote {len(files)} file(s) to {out_dir}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = _assemble_config(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    print(normalized_text(cfg), end="")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return cmd_run(args)
    if args.command == "validate":
        return cmd_validate(args)
    parser.print_usage(sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
