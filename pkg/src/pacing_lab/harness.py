"""Seeded batch execution and report emission.

For every seed the scenario's test controller and the variable-step
baseline face identical opportunity draws (same seed, same substreams),
so per-seed metric deltas are paired comparisons. Seeds can fan out to a
process pool; report assembly is a single-threaded reduction over the
seed-sorted results.

Everything emitted is a flat file: one telemetry CSV, one summary CSV in
the three-metric-rows layout, one two-panel SVG per seed and a metadata
sidecar. All bytes are determined by (config, seeds) except wall-clock
timestamps, which only appear in the sidecar.
"""

from __future__ import annotations

import csv
import json
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Sequence

from .config import ScenarioConfig, build_baseline_controller, build_test_controller
from .metrics import MetricDeltas, MetricsReport, delta_vs_baseline, report_from_telemetry
from .plant import CycleRecord, ScenarioResult, simulate
from .plotting import write_trace_plot

TELEMETRY_COLUMNS = (
    "cycle",
    "lambda",
    "cycle_spend",
    "cum_spend",
    "target_cum_spend",
    "auctions",
    "wins",
    "controller",
    "seed",
)


@dataclass(frozen=True)
class SeedRun:
    seed: int
    test: ScenarioResult
    baseline: ScenarioResult
    test_metrics: MetricsReport
    baseline_metrics: MetricsReport
    deltas: MetricDeltas


@dataclass(frozen=True)
class RunReport:
    config: ScenarioConfig
    runs: tuple[SeedRun, ...]
    aggregate: MetricDeltas
    artifacts: tuple[Path, ...]


def measured_metrics(config: ScenarioConfig, result: ScenarioResult) -> MetricsReport:
    """Metrics over the scenario's measurement window (full horizon by default)."""
    telemetry = result.telemetry
    if config.measure_cycles is None:
        return report_from_telemetry(telemetry, pe_slot_cycles=config.pe_slot_cycles)
    lo, hi = config.measure_cycles
    prev = telemetry[lo - 1] if lo > 0 else None
    return report_from_telemetry(
        telemetry[lo:hi],
        start_target_cum=prev.target_cum_spend if prev else 0.0,
        start_cum_spend=prev.cum_spend if prev else 0.0,
        pe_slot_cycles=config.pe_slot_cycles,
    )


def run_seed(config: ScenarioConfig, seed: int) -> SeedRun:
    """Simulate the test controller and the baseline on coupled draws."""
    test = simulate(
        config.adline, build_test_controller(config.controller), config.plan,
        config.traffic, seed, config.pricing_rule,
    )
    baseline = simulate(
        config.adline, build_baseline_controller(config.controller), config.plan,
        config.traffic, seed, config.pricing_rule,
    )
    test_metrics = measured_metrics(config, test)
    baseline_metrics = measured_metrics(config, baseline)
    return SeedRun(seed, test, baseline, test_metrics, baseline_metrics,
                   delta_vs_baseline(test_metrics, baseline_metrics))


def _mean_or_none(values: list[float | None]) -> float | None:
    present = [v for v in values if v is not None]
    return fmean(present) if present else None


def aggregate_deltas(runs: Sequence[SeedRun]) -> MetricDeltas:
    return MetricDeltas(
        pacing_error_pct=_mean_or_none([r.deltas.pacing_error_pct for r in runs]),
        lambda_volatility_pct=_mean_or_none([r.deltas.lambda_volatility_pct for r in runs]),
        cpm_pct=_mean_or_none([r.deltas.cpm_pct for r in runs]),
    )


def run_experiment(config: ScenarioConfig, out_dir: str | Path, workers: int = 1) -> RunReport:
    """Run every seed, compute paired metrics and emit all artifacts."""
    started = time.time()
    if workers > 1 and len(config.seeds) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            runs = tuple(pool.map(run_seed, [config] * len(config.seeds), config.seeds))
    else:
        runs = tuple(run_seed(config, seed) for seed in config.seeds)
    runs = tuple(sorted(runs, key=lambda r: r.seed))
    report = RunReport(config, runs, aggregate_deltas(runs), artifacts=())
    artifacts = emit_report(report, out_dir, started=started)
    return RunReport(config, runs, report.aggregate, tuple(artifacts))


def _fmt(value: float | int | str | None) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_telemetry_csv(path: Path, report: RunReport) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TELEMETRY_COLUMNS)
        for run in report.runs:
            for result in (run.baseline, run.test):
                label = result.controller_kind.value if result.controller_kind else "unknown"
                for r in result.telemetry:
                    writer.writerow([
                        r.cycle, _fmt(r.lam), _fmt(r.cycle_spend), _fmt(r.cum_spend),
                        _fmt(r.target_cum_spend), r.auctions, r.wins, label, result.seed,
                    ])


def _write_summary_csv(path: Path, report: RunReport) -> None:
    variant = report.config.controller.kind.value
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "baseline_mean", f"{variant}_mean", "delta_pct_mean"])
        if not report.runs:
            return
        rows = [
            ("PE",
             [r.baseline_metrics.pacing_error for r in report.runs],
             [r.test_metrics.pacing_error for r in report.runs],
             report.aggregate.pacing_error_pct),
            ("CV_lambda",
             [r.baseline_metrics.lambda_volatility for r in report.runs],
             [r.test_metrics.lambda_volatility for r in report.runs],
             report.aggregate.lambda_volatility_pct),
            ("CPM",
             [r.baseline_metrics.cpm for r in report.runs],
             [r.test_metrics.cpm for r in report.runs],
             report.aggregate.cpm_pct),
        ]
        for name, baseline_vals, test_vals, delta in rows:
            writer.writerow([
                name, _fmt(_mean_or_none(baseline_vals)), _fmt(_mean_or_none(test_vals)), _fmt(delta),
            ])


def _write_plot(path: Path, report: RunReport, run: SeedRun) -> None:
    telemetry = run.test.telemetry
    cycles = [r.cycle for r in telemetry]
    write_trace_plot(
        path,
        title=f"{report.config.name} seed {run.seed}",
        cycles=cycles,
        ideal_cum=[r.target_cum_spend for r in telemetry],
        test_label=report.config.controller.kind.value,
        test_cum=[r.cum_spend for r in telemetry],
        test_lam=[r.lam for r in telemetry],
        baseline_cum=[r.cum_spend for r in run.baseline.telemetry],
        baseline_lam=[r.lam for r in run.baseline.telemetry],
    )


def emit_report(report: RunReport, out_dir: str | Path, started: float | None = None) -> list[Path]:
    """Write telemetry CSV, summary CSV, per-seed plots and the metadata sidecar."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    name = report.config.name
    if not report.runs:
        print(f"warning: scenario {name!r} has no seeds; emitting empty summary", file=sys.stderr)

    telemetry_path = out / f"{name}_telemetry.csv"
    summary_path = out / f"{name}_summary.csv"
    _write_telemetry_csv(telemetry_path, report)
    _write_summary_csv(summary_path, report)
    artifacts = [telemetry_path, summary_path]
    for run in report.runs:
        plot_path = out / f"{name}_seed{run.seed}.svg"
        _write_plot(plot_path, report, run)
        artifacts.append(plot_path)

    finished = time.time()
    meta = {
        "scenario": name,
        "config_sha256": report.config.sha256,
        "seeds": list(report.config.seeds),
        "horizon_cycles": report.config.plan.horizon_cycles,
        "files": [p.name for p in artifacts],
        "started_at": started,
        "finished_at": finished,
        "duration_s": (finished - started) if started is not None else None,
    }
    meta_path = out / f"{name}_meta.json"
    meta_path.write_text(json.dumps(meta, indent=2) + "\n")
    artifacts.append(meta_path)
    return artifacts


def rerender_plots(telemetry_csv: str | Path, out_dir: str | Path) -> list[Path]:
    """Rebuild the per-seed trace plots from an existing telemetry CSV."""
    telemetry_csv = Path(telemetry_csv)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scenario = telemetry_csv.name.removesuffix("_telemetry.csv").removesuffix(".csv")

    by_run: dict[tuple[str, int], list[CycleRecord]] = {}
    with telemetry_csv.open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in TELEMETRY_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"telemetry CSV missing columns: {missing}")
        for row in reader:
            key = (row["controller"], int(row["seed"]))
            by_run.setdefault(key, []).append(
                CycleRecord(
                    cycle=int(row["cycle"]),
                    lam=float(row["lambda"]),
                    cycle_spend=float(row["cycle_spend"]),
                    cum_spend=float(row["cum_spend"]),
                    target_cum_spend=float(row["target_cum_spend"]),
                    auctions=int(row["auctions"]),
                    wins=int(row["wins"]),
                    desired_rate=0.0,
                )
            )

    seeds = sorted({seed for _, seed in by_run})
    variants = sorted({c for c, _ in by_run if c != "baseline"})
    written = []
    for seed in seeds:
        for variant in variants or ["baseline"]:
            test = by_run.get((variant, seed))
            base = by_run.get(("baseline", seed), test)
            if test is None:
                continue
            path = out / f"{scenario}_seed{seed}.svg"
            write_trace_plot(
                path,
                title=f"{scenario} seed {seed}",
                cycles=[r.cycle for r in test],
                ideal_cum=[r.target_cum_spend for r in test],
                test_label=variant,
                test_cum=[r.cum_spend for r in test],
                test_lam=[r.lam for r in test],
                baseline_cum=[r.cum_spend for r in base],
                baseline_lam=[r.lam for r in base],
            )
            written.append(path)
    return written
