"""Command line surface: validate configs, run experiments, re-render plots.

Exit codes: 0 success, 1 validation failure, 2 runtime I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, ScenarioConfig, build_config
from .harness import rerender_plots, run_experiment
from .presets import PRESET_NAMES, preset_path

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def _config_source(args: argparse.Namespace) -> Path:
    if args.preset:
        try:
            return preset_path(args.preset)
        except KeyError as exc:
            raise ConfigError([str(exc.args[0])]) from exc
    if args.config:
        return Path(args.config)
    raise ConfigError(["no scenario given: pass --config PATH or --preset NAME"])


def _load(args: argparse.Namespace) -> ScenarioConfig:
    path = _config_source(args)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file is not valid JSON: {path}: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"config root must be a JSON object: {path}"])
    if args.seeds is not None:
        try:
            raw["seeds"] = [int(s) for s in args.seeds.split(",") if s.strip() != ""]
        except ValueError as exc:
            raise ConfigError([f"--seeds must be a comma-separated list of integers: {exc}"]) from exc
    if args.horizon is not None:
        raw.setdefault("plan", {})["horizon_cycles"] = args.horizon
    return build_config(raw)


def _cmd_validate(args: argparse.Namespace) -> int:
    config = _load(args)
    print(f"ok: {config.name} ({len(config.seeds)} seeds, horizon {config.plan.horizon_cycles}, "
          f"controller {config.controller.kind.value})")
    return EXIT_OK


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load(args)
    try:
        report = run_experiment(config, args.out, workers=args.workers)
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        partial = sorted(p.name for p in Path(args.out).glob(f"{config.name}_*")) if Path(args.out).is_dir() else []
        if partial:
            print(f"partial outputs in {args.out}: {', '.join(partial)}", file=sys.stderr)
        return EXIT_IO
    agg = report.aggregate
    def show(value: float | None) -> str:
        return f"{value:+.2f}%" if value is not None else "n/a"
    print(f"{config.name}: {len(report.runs)} seed(s) vs baseline  "
          f"PE {show(agg.pacing_error_pct)}  CV_lambda {show(agg.lambda_volatility_pct)}  "
          f"CPM {show(agg.cpm_pct)}")
    for path in report.artifacts:
        print(f"  wrote {path}")
    return EXIT_OK


def _cmd_report(args: argparse.Namespace) -> int:
    try:
        written = rerender_plots(args.telemetry, args.out)
    except (OSError, ValueError) as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    for path in written:
        print(f"  wrote {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pacing-lab",
        description="Budget pacing lab: run seeded controller-vs-baseline experiments "
                    "on a simulated auction plant.",
        epilog=f"bundled presets: {', '.join(PRESET_NAMES)}",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_scenario_args(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", help="path to a scenario JSON file")
        p.add_argument("--preset", help="name of a bundled preset")
        p.add_argument("--seeds", help="comma-separated seed override")
        p.add_argument("--horizon", type=int, help="horizon override (control cycles)")

    run_p = sub.add_parser("run", help="run a scenario and emit CSVs and plots")
    add_scenario_args(run_p)
    run_p.add_argument("--out", default="out", help="output directory (default: ./out)")
    run_p.add_argument("--workers", type=int, default=1, help="seed fan-out worker count")
    run_p.set_defaults(func=_cmd_run)

    val_p = sub.add_parser("validate", help="validate a scenario config and exit")
    add_scenario_args(val_p)
    val_p.set_defaults(func=_cmd_validate)

    rep_p = sub.add_parser("report", help="re-render plots from an existing telemetry CSV")
    rep_p.add_argument("--telemetry", required=True, help="path to a *_telemetry.csv file")
    rep_p.add_argument("--out", default="out", help="output directory (default: ./out)")
    rep_p.set_defaults(func=_cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        for message in exc.errors:
            print(f"config error: {message}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    raise SystemExit(main())
