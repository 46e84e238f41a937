"""Evaluation metrics over telemetry: pacing error, multiplier volatility, CPM.

Pure functions over immutable telemetry; freely parallelizable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import fmean, pstdev
from typing import Sequence

from .plant import CycleRecord


@dataclass(frozen=True)
class MetricsReport:
    """Metric summary of one run. ``cpm`` is None when no impression was won."""

    pacing_error: float
    lambda_volatility: float
    cpm: float | None
    n_cycles: int


@dataclass(frozen=True)
class MetricDeltas:
    """Percentage deltas of a test run against a baseline run.

    Negative means improvement for pacing error and volatility. A delta is
    None when the baseline metric is zero or either side is undefined.
    """

    pacing_error_pct: float | None
    lambda_volatility_pct: float | None
    cpm_pct: float | None


def pacing_error(actual: Sequence[float], target: Sequence[float]) -> float:
    """Mean relative absolute deviation of actual vs target spend per cycle.

    Cycles with zero target and zero spend carry no information and are
    excluded from the mean; spend on a zero target is the worst failure
    mode and makes the metric +inf.
    """
    if len(actual) != len(target) or len(actual) == 0:
        raise ValueError(f"need equal nonempty lengths, got {len(actual)} and {len(target)}")
    total = 0.0
    slots = 0
    for spend, goal in zip(actual, target):
        if goal == 0:
            if spend > 0:
                return math.inf
            continue
        total += abs(spend - goal) / goal
        slots += 1
    return total / slots if slots else 0.0


def lambda_volatility(lambdas: Sequence[float]) -> float:
    """Coefficient of variation (population std over mean) of a multiplier trace."""
    if len(lambdas) == 0:
        raise ValueError("need at least one multiplier value")
    if any(x <= 0 for x in lambdas):
        raise ValueError("multiplier values must be > 0")
    return pstdev(lambdas) / fmean(lambdas)


def cpm(total_spend: float, impressions_won: int) -> float | None:
    """Cost per thousand won impressions; None (undefined) with zero wins."""
    if impressions_won < 0:
        raise ValueError(f"impressions_won must be >= 0, got {impressions_won}")
    if impressions_won == 0:
        return None
    return 1000.0 * total_spend / impressions_won


def _pct_delta(test: float | None, baseline: float | None) -> float | None:
    if test is None or baseline is None or baseline == 0 or not math.isfinite(baseline):
        return None
    if not math.isfinite(test):
        return math.inf if test > 0 else -math.inf
    return 100.0 * (test - baseline) / baseline


def delta_vs_baseline(test: MetricsReport, baseline: MetricsReport) -> MetricDeltas:
    return MetricDeltas(
        pacing_error_pct=_pct_delta(test.pacing_error, baseline.pacing_error),
        lambda_volatility_pct=_pct_delta(test.lambda_volatility, baseline.lambda_volatility),
        cpm_pct=_pct_delta(test.cpm, baseline.cpm),
    )


def slot_targets(telemetry: Sequence[CycleRecord], start_target_cum: float = 0.0) -> list[float]:
    """Per-cycle plan targets recovered from cumulative target telemetry."""
    targets = []
    prev = start_target_cum
    for record in telemetry:
        targets.append(record.target_cum_spend - prev)
        prev = record.target_cum_spend
    return targets


def _chunk_sums(values: Sequence[float], width: int) -> list[float]:
    return [sum(values[i:i + width]) for i in range(0, len(values), width)]


def report_from_telemetry(
    telemetry: Sequence[CycleRecord],
    start_target_cum: float = 0.0,
    start_cum_spend: float = 0.0,
    pe_slot_cycles: int = 1,
) -> MetricsReport:
    """Compute all three metrics from a telemetry slice.

    The ``start_*`` offsets make windowed measurement (e.g. ramp-phase
    only) consistent with the cumulative columns. ``pe_slot_cycles`` sets
    the pacing-error slot width: spends and targets are summed over that
    many consecutive cycles before comparison (volatility and CPM are
    unaffected).
    """
    if len(telemetry) == 0:
        raise ValueError("telemetry must be nonempty")
    if pe_slot_cycles < 1:
        raise ValueError(f"pe_slot_cycles must be >= 1, got {pe_slot_cycles}")
    actual = _chunk_sums([r.cycle_spend for r in telemetry], pe_slot_cycles)
    targets = _chunk_sums(slot_targets(telemetry, start_target_cum), pe_slot_cycles)
    window_spend = telemetry[-1].cum_spend - start_cum_spend
    wins = sum(r.wins for r in telemetry)
    return MetricsReport(
        pacing_error=pacing_error(actual, targets),
        lambda_volatility=lambda_volatility([r.lam for r in telemetry]),
        cpm=cpm(window_spend, wins),
        n_cycles=len(telemetry),
    )
