"""Stochastic auction plant and the closed control loop.

Each control cycle draws a Poisson number of impression opportunities,
resolves one auction per opportunity at the cycle's pacing multiplier and
charges the winner until the budget runs out. The loop then feeds the
cycle's (desired, observed) spend rates back into the controller. One
simulation tick is one control cycle; every auction inside a tick uses
the tick's multiplier.

Randomness comes from one seedable root: each cycle owns an independent
substream keyed by (seed, cycle index), so runs with the same seed face
identical opportunity draws regardless of the controller under test.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .auction import AdLine, PricingRule
from .controllers import Controller, ControllerKind


@dataclass(frozen=True)
class TrafficModel:
    """Arrival intensity and per-opportunity draw distributions.

    Competitor bids are log-normal (location/scale in log space), event
    probabilities uniform on [p_event_low, p_event_high].
    """

    arrivals_per_cycle: float
    competitor_bid_location: float
    competitor_bid_scale: float
    p_event_low: float
    p_event_high: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.arrivals_per_cycle) and self.arrivals_per_cycle >= 0):
            raise ValueError(f"arrivals_per_cycle must be finite and >= 0, got {self.arrivals_per_cycle}")
        if not math.isfinite(self.competitor_bid_location):
            raise ValueError("competitor_bid_location must be finite")
        if not (math.isfinite(self.competitor_bid_scale) and self.competitor_bid_scale >= 0):
            raise ValueError(f"competitor_bid_scale must be finite and >= 0, got {self.competitor_bid_scale}")
        if not (0.0 <= self.p_event_low <= self.p_event_high <= 1.0):
            raise ValueError(
                f"need 0 <= p_event_low <= p_event_high <= 1, got [{self.p_event_low}, {self.p_event_high}]"
            )


@dataclass(frozen=True)
class SpendPlan:
    """Budget and its distribution over the horizon.

    ``weights`` of length ``horizon_cycles`` shape the target spend per
    cycle; None means an even plan. Cumulative target at the final cycle
    equals the total budget.
    """

    total_budget: float
    horizon_cycles: int
    weights: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if not (math.isfinite(self.total_budget) and self.total_budget > 0):
            raise ValueError(f"total_budget must be finite and > 0, got {self.total_budget}")
        if self.horizon_cycles <= 0:
            raise ValueError(f"horizon_cycles must be > 0, got {self.horizon_cycles}")
        if self.weights is not None:
            if len(self.weights) != self.horizon_cycles:
                raise ValueError(
                    f"weights length {len(self.weights)} != horizon_cycles {self.horizon_cycles}"
                )
            if any(w < 0 for w in self.weights):
                raise ValueError("weights must be nonnegative")
            if not sum(self.weights) > 0:
                raise ValueError("weights must sum to a positive value")


def desired_rate(plan: SpendPlan, cycle: int, budget_remaining: float) -> float:
    """Per-cycle spend target: remaining budget over the remaining plan.

    Even plans split the remaining budget over the remaining cycles;
    weighted plans split it in proportion to this cycle's weight within
    the remaining weights. Exhausted budgets and spent-out plans yield 0.
    """
    if cycle >= plan.horizon_cycles:
        raise ValueError(f"cycle {cycle} out of range for horizon {plan.horizon_cycles}")
    if budget_remaining <= 0:
        return 0.0
    if plan.weights is None:
        return budget_remaining / (plan.horizon_cycles - cycle)
    tail = sum(plan.weights[cycle:])
    if tail <= 0:
        return 0.0
    return budget_remaining * plan.weights[cycle] / tail


def cumulative_target(plan: SpendPlan, cycle: int) -> float:
    """Ideal cumulative spend at the end of ``cycle`` (0-based)."""
    if cycle >= plan.horizon_cycles:
        raise ValueError(f"cycle {cycle} out of range for horizon {plan.horizon_cycles}")
    if plan.weights is None:
        return plan.total_budget * (cycle + 1) / plan.horizon_cycles
    return plan.total_budget * sum(plan.weights[: cycle + 1]) / sum(plan.weights)


@dataclass(frozen=True)
class CycleRecord:
    """One control cycle of telemetry."""

    cycle: int
    lam: float
    cycle_spend: float
    cum_spend: float
    target_cum_spend: float
    auctions: int
    wins: int
    desired_rate: float


@dataclass(frozen=True)
class ScenarioResult:
    telemetry: tuple[CycleRecord, ...]
    seed: int
    controller_kind: ControllerKind | None


def cycle_rng(seed: int, cycle: int) -> np.random.Generator:
    """Independent substream for one control cycle of one run."""
    return np.random.default_rng(np.random.SeedSequence([seed, cycle]))


def run_cycle(
    adline: AdLine,
    lam: float,
    traffic: TrafficModel,
    rng: np.random.Generator,
    budget_remaining: float,
    pricing_rule: PricingRule = PricingRule.SECOND_PRICE,
) -> tuple[float, int, int]:
    """Run one cycle's auctions at multiplier ``lam``.

    Returns (spend, auctions entered, auctions won). Auctions are charged
    in arrival order; the charge that would overshoot the remaining budget
    is capped to land exactly on it and every later arrival is skipped, so
    spend never exceeds ``budget_remaining``.
    """
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"pacing multiplier must be in (0, 1], got {lam}")
    if budget_remaining <= 0:
        return 0.0, 0, 0
    n = int(rng.poisson(traffic.arrivals_per_cycle))
    if n == 0:
        return 0.0, 0, 0
    p_event = rng.uniform(traffic.p_event_low, traffic.p_event_high, n)
    competitor = rng.lognormal(traffic.competitor_bid_location, traffic.competitor_bid_scale, n)

    bids = lam * adline.max_bid * p_event
    won = bids > competitor  # ties lose
    if pricing_rule is PricingRule.SECOND_PRICE:
        prices = np.where(won, competitor, 0.0)
    else:
        prices = np.where(won, bids, 0.0)

    cum = np.cumsum(prices)
    if cum[-1] <= budget_remaining:
        return float(cum[-1]), n, int(won.sum())
    # budget exhausted mid-cycle: cap the overflowing charge, skip the rest
    k = int(np.argmax(cum > budget_remaining))
    return float(budget_remaining), k + 1, int(won[: k + 1].sum())


def simulate(
    adline: AdLine,
    controller: Controller,
    plan: SpendPlan,
    traffic: TrafficModel,
    seed: int,
    pricing_rule: PricingRule = PricingRule.SECOND_PRICE,
) -> ScenarioResult:
    """Close the loop between controller and plant over the full horizon.

    Per cycle: compute the desired rate, run the cycle's auctions at the
    controller's current multiplier, record telemetry, then feed
    (desired, observed = cycle spend) to the controller. Cycles after
    budget exhaustion still run (and spend nothing), so the cumulative
    spend trace is flat afterwards. Fully deterministic given the seed.
    """
    remaining = plan.total_budget
    records: list[CycleRecord] = []
    for j in range(plan.horizon_cycles):
        target = desired_rate(plan, j, remaining)
        lam = controller.lam
        spend, entered, wins = run_cycle(
            adline, lam, traffic, cycle_rng(seed, j), remaining, pricing_rule
        )
        remaining -= spend
        records.append(
            CycleRecord(
                cycle=j,
                lam=lam,
                cycle_spend=spend,
                cum_spend=plan.total_budget - remaining,
                target_cum_spend=cumulative_target(plan, j),
                auctions=entered,
                wins=wins,
                desired_rate=target,
            )
        )
        controller.update(target, spend)
    return ScenarioResult(tuple(records), seed, controller.kind)
