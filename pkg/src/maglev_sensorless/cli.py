"""Command-line interface.

    maglev-sim run <preset|config.json> [--out DIR] [--dt X] [--horizon T] [--plots]
    maglev-sim list-presets
    maglev-sim validate <config.json>

Exit codes: 0 success, 2 configuration/validation failure, 3 mid-run
failure (non-finite state, or a configured abort on leaving the gap).
Outputs default to MAGLEV_OUT_DIR (or the working directory): a CSV of
the sampled time series and a JSON with metrics and the event log.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

from .config import ScenarioConfig, ValidationError
from .harness import DomainViolationAbort, NumericFailure, emit_csv, emit_plots, metrics, run_scenario
from .presets import PRESETS, get_preset, list_presets


def _load_config(source: str) -> ScenarioConfig:
    if source in PRESETS:
        return get_preset(source)
    if not os.path.exists(source):
        raise ValidationError("run target", f"{source!r} is neither a preset nor a config file")
    return ScenarioConfig.from_json(source)


def _cmd_run(args) -> int:
    try:
        cfg = _load_config(args.target)
        if args.dt is not None:
            cfg = dataclasses.replace(cfg, dt=args.dt)
        if args.horizon is not None:
            cfg = dataclasses.replace(cfg, horizon=args.horizon)
        cfg.validate()
    except (ValidationError, ValueError, TypeError, KeyError, OSError) as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return 2

    try:
        rec = run_scenario(cfg)
    except (NumericFailure, DomainViolationAbort) as e:
        print(f"run failed: {e}", file=sys.stderr)
        return 3

    outdir = args.out or os.environ.get("MAGLEV_OUT_DIR") or "."
    os.makedirs(outdir, exist_ok=True)
    csv_path = os.path.join(outdir, f"{cfg.name}.csv")
    emit_csv(rec, csv_path)
    summary = metrics(rec)
    json_path = os.path.join(outdir, f"{cfg.name}.metrics.json")
    with open(json_path, "w") as fh:
        json.dump(summary, fh, indent=2)
        fh.write("\n")
    written = [csv_path, json_path]
    if args.plots:
        written += emit_plots(rec, outdir)
    for path in written:
        print(path)
    return 0


def _cmd_list_presets(_args) -> int:
    for name in list_presets():
        print(name)
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = ScenarioConfig.from_json(args.config)
        cfg.validate()
    except (ValidationError, ValueError, TypeError, KeyError, OSError,
            json.JSONDecodeError) as e:
        print(f"invalid: {e}", file=sys.stderr)
        return 2
    print(f"ok: {cfg.name} ({cfg.system})")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="maglev-sim",
                                 description="Deterministic sensorless-control scenario runner")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a JSON config")
    run.add_argument("target", help="preset name or path to a config JSON")
    run.add_argument("--out", default=None, help="output directory (default: MAGLEV_OUT_DIR or .)")
    run.add_argument("--dt", type=float, default=None, help="override the integration step")
    run.add_argument("--horizon", type=float, default=None, help="override the simulated horizon")
    run.add_argument("--plots", action="store_true", help="also write per-channel SVG plots")
    run.set_defaults(func=_cmd_run)

    lp = sub.add_parser("list-presets", help="print the available preset names")
    lp.set_defaults(func=_cmd_list_presets)

    val = sub.add_parser("validate", help="validate a config JSON without running it")
    val.add_argument("config", help="path to a config JSON")
    val.set_defaults(func=_cmd_validate)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
