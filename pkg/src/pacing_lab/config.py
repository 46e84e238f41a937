"""Scenario configuration: JSON schema, validation and controller construction.

Validation collects every failure (not just the first) with field-level
paths, so a bad config reports all its problems in one pass. All tunable
constants live here or in the bundled preset files, never inside the
controller or plant code.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from .auction import AdLine, PricingRule
from .controllers import (
    BandTable,
    BaselineParams,
    Controller,
    ControllerKind,
    alu_controller,
    aof_controller,
    baseline_controller,
    bhc_controller,
)
from .plant import SpendPlan, TrafficModel

STANDARD_THRESHOLDS = (0.0, 0.05, 0.20)
STANDARD_SCALES = (0.005, 0.02, 0.08)
SLOWED_SCALES = (0.001, 0.004, 0.016)


class ConfigError(Exception):
    """Raised with the full list of validation failures."""

    def __init__(self, errors: list[str]) -> None:
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass(frozen=True)
class BaselineSettings:
    alpha0: float
    params: BaselineParams


@dataclass(frozen=True)
class ControllerSettings:
    kind: ControllerKind
    lam0: float
    lam_min: float
    epsilon: float
    bands: BandTable
    window_m: int
    window_l: int
    chain_from_applied: bool
    baseline: BaselineSettings


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    adline: AdLine
    plan: SpendPlan
    traffic: TrafficModel
    pricing_rule: PricingRule
    controller: ControllerSettings
    seeds: tuple[int, ...]
    measure_cycles: tuple[int, int] | None
    pe_slot_cycles: int
    sha256: str


def _is_num(x: Any) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _get(raw: dict, errors: list[str], path: str, default: Any = None, required: bool = False) -> Any:
    node: Any = raw
    for part in path.split("."):
        if not isinstance(node, dict) or part not in node:
            if required:
                errors.append(f"{path}: missing required field")
            return default
        node = node[part]
    return node


def validate_raw(raw: dict) -> list[str]:
    """Every validation failure in the raw config dict, with field paths."""
    errors: list[str] = []

    name = _get(raw, errors, "name", required=True)
    if name is not None and not isinstance(name, str):
        errors.append("name: must be a string")

    max_bid = _get(raw, errors, "adline.max_bid", required=True)
    if max_bid is not None and not (_is_num(max_bid) and max_bid > 0):
        errors.append(f"adline.max_bid: must be > 0, got {max_bid}")
    budget = _get(raw, errors, "adline.budget_total", required=True)
    if budget is not None and not (_is_num(budget) and budget > 0):
        errors.append(f"adline.budget_total: must be > 0, got {budget}")

    horizon = _get(raw, errors, "plan.horizon_cycles", required=True)
    if horizon is not None and not (isinstance(horizon, int) and horizon > 0):
        errors.append(f"plan.horizon_cycles: must be a positive integer, got {horizon}")
    weights = _get(raw, errors, "plan.weights")
    if weights is not None:
        if not isinstance(weights, list) or not all(_is_num(w) for w in weights):
            errors.append("plan.weights: must be null or a list of numbers")
        else:
            if isinstance(horizon, int) and len(weights) != horizon:
                errors.append(f"plan.weights: length {len(weights)} != plan.horizon_cycles {horizon}")
            if any(w < 0 for w in weights):
                errors.append("plan.weights: entries must be >= 0")
            if weights and not sum(weights) > 0:
                errors.append("plan.weights: must sum to a positive value")

    arrivals = _get(raw, errors, "traffic.arrivals_per_cycle", required=True)
    if arrivals is not None and not (_is_num(arrivals) and arrivals >= 0):
        errors.append(f"traffic.arrivals_per_cycle: must be >= 0, got {arrivals}")
    location = _get(raw, errors, "traffic.competitor_bid_location", required=True)
    if location is not None and not _is_num(location):
        errors.append("traffic.competitor_bid_location: must be a finite number")
    scale = _get(raw, errors, "traffic.competitor_bid_scale", required=True)
    if scale is not None and not (_is_num(scale) and scale >= 0):
        errors.append(f"traffic.competitor_bid_scale: must be >= 0, got {scale}")
    p_lo = _get(raw, errors, "traffic.p_event_low", required=True)
    p_hi = _get(raw, errors, "traffic.p_event_high", required=True)
    if p_lo is not None and p_hi is not None:
        if not (_is_num(p_lo) and _is_num(p_hi) and 0.0 <= p_lo <= p_hi <= 1.0):
            errors.append(
                f"traffic.p_event_low/p_event_high: need 0 <= low <= high <= 1, got [{p_lo}, {p_hi}]"
            )

    rule = _get(raw, errors, "pricing_rule", default="second_price")
    if rule not in ("first_price", "second_price"):
        errors.append(f"pricing_rule: must be 'first_price' or 'second_price', got {rule!r}")

    kind = _get(raw, errors, "controller.kind", required=True)
    if kind is not None and kind not in [k.value for k in ControllerKind]:
        errors.append(
            f"controller.kind: must be one of {sorted(k.value for k in ControllerKind)}, got {kind!r}"
        )

    lam0 = _get(raw, errors, "controller.lam0", default=0.1)
    if not (_is_num(lam0) and 0.0 < lam0 <= 1.0):
        errors.append(f"controller.lam0: must be in (0, 1], got {lam0}")
    lam_min = _get(raw, errors, "controller.lam_min", default=1e-6)
    if not (_is_num(lam_min) and 0.0 < lam_min < 1.0):
        errors.append(f"controller.lam_min: must be in (0, 1), got {lam_min}")
    elif _is_num(lam0) and lam_min > lam0:
        errors.append(f"controller.lam_min: must not exceed controller.lam0, got {lam_min} > {lam0}")

    eps_frac = _get(raw, errors, "controller.epsilon_frac", default=0.01)
    if not (_is_num(eps_frac) and eps_frac > 0):
        errors.append(f"controller.epsilon_frac: must be > 0, got {eps_frac}")

    thresholds = _get(raw, errors, "controller.thresholds", default=list(STANDARD_THRESHOLDS))
    scales_default = SLOWED_SCALES if kind == ControllerKind.SLOWED_BANDS.value else STANDARD_SCALES
    scales = _get(raw, errors, "controller.scales", default=list(scales_default))
    bands_ok = True
    for field_name, seq in (("controller.thresholds", thresholds), ("controller.scales", scales)):
        if not isinstance(seq, (list, tuple)) or not seq or not all(_is_num(x) for x in seq):
            errors.append(f"{field_name}: must be a nonempty list of numbers")
            bands_ok = False
    if bands_ok:
        if len(thresholds) != len(scales):
            errors.append(
                f"controller.thresholds/scales: lengths differ ({len(thresholds)} vs {len(scales)})"
            )
        if thresholds[0] != 0:
            errors.append(
                f"controller.thresholds: first threshold must be 0 so a band always exists, got {thresholds[0]}"
            )
        if any(b <= a for a, b in zip(thresholds, thresholds[1:])):
            errors.append(f"controller.thresholds: must be strictly increasing, got {thresholds}")
        if any(not (0.0 < s < 1.0) for s in scales):
            errors.append(f"controller.scales: every scale must be in (0, 1), got {scales}")

    for field_name, default in (("controller.window_m", 20), ("controller.window_l", 10)):
        value = _get(raw, errors, field_name, default=default)
        if not (isinstance(value, int) and not isinstance(value, bool) and value >= 1):
            errors.append(f"{field_name}: must be an integer >= 1, got {value}")

    chain = _get(raw, errors, "controller.chain_from_applied", default=False)
    if not isinstance(chain, bool):
        errors.append(f"controller.chain_from_applied: must be a boolean, got {chain!r}")

    base = _get(raw, errors, "controller.baseline", default={})
    if not isinstance(base, dict):
        errors.append("controller.baseline: must be an object")
        base = {}
    alpha0 = base.get("alpha0", 0.05)
    eta_up = base.get("eta_up", 0.2)
    eta_down = base.get("eta_down", 0.5)
    tau = base.get("tau", 3.0)
    alpha_min = base.get("alpha_min", 0.01)
    alpha_max = base.get("alpha_max", 0.25)
    window_n = base.get("window_n", 5)
    if not (_is_num(eta_up) and eta_up > 0):
        errors.append(f"controller.baseline.eta_up: must be > 0, got {eta_up}")
    if not (_is_num(eta_down) and 0.0 < eta_down < 1.0):
        errors.append(f"controller.baseline.eta_down: must be in (0, 1), got {eta_down}")
    if not (_is_num(tau) and tau > 1.0):
        errors.append(f"controller.baseline.tau: must be > 1, got {tau}")
    if not (_is_num(alpha_min) and _is_num(alpha_max) and 0.0 < alpha_min <= alpha_max < 1.0):
        errors.append(
            f"controller.baseline.alpha_min/alpha_max: need 0 < min <= max < 1, got [{alpha_min}, {alpha_max}]"
        )
    elif not (_is_num(alpha0) and alpha_min <= alpha0 <= alpha_max):
        errors.append(
            f"controller.baseline.alpha0: must lie in [alpha_min, alpha_max], got {alpha0}"
        )
    if not (isinstance(window_n, int) and not isinstance(window_n, bool) and window_n >= 2):
        errors.append(f"controller.baseline.window_n: must be an integer >= 2, got {window_n}")

    seeds = _get(raw, errors, "seeds", default=[])
    if not isinstance(seeds, list) or not all(
        isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds
    ):
        errors.append("seeds: must be a list of nonnegative integers")

    window = _get(raw, errors, "measure_cycles")
    if window is not None:
        ok = (
            isinstance(window, list)
            and len(window) == 2
            and all(isinstance(x, int) and not isinstance(x, bool) for x in window)
            and 0 <= window[0] < window[1]
        )
        if ok and isinstance(horizon, int):
            ok = window[1] <= horizon
        if not ok:
            errors.append(f"measure_cycles: must be [lo, hi) with 0 <= lo < hi <= horizon, got {window}")

    slot = _get(raw, errors, "pe_slot_cycles", default=1)
    if not (isinstance(slot, int) and not isinstance(slot, bool) and slot >= 1):
        errors.append(f"pe_slot_cycles: must be an integer >= 1, got {slot}")

    return errors


def build_config(raw: dict) -> ScenarioConfig:
    """Turn a validated raw dict into a ScenarioConfig; raises ConfigError otherwise."""
    errors = validate_raw(raw)
    if errors:
        raise ConfigError(errors)

    plan_raw = raw["plan"]
    weights = plan_raw.get("weights")
    plan = SpendPlan(
        total_budget=float(raw["adline"]["budget_total"]),
        horizon_cycles=plan_raw["horizon_cycles"],
        weights=tuple(float(w) for w in weights) if weights is not None else None,
    )
    adline = AdLine(
        id=str(raw["adline"].get("id", raw["name"])),
        max_bid=float(raw["adline"]["max_bid"]),
        budget_total=float(raw["adline"]["budget_total"]),
    )
    traffic_raw = raw["traffic"]
    traffic = TrafficModel(
        arrivals_per_cycle=float(traffic_raw["arrivals_per_cycle"]),
        competitor_bid_location=float(traffic_raw["competitor_bid_location"]),
        competitor_bid_scale=float(traffic_raw["competitor_bid_scale"]),
        p_event_low=float(traffic_raw["p_event_low"]),
        p_event_high=float(traffic_raw["p_event_high"]),
    )

    ctrl_raw = raw["controller"]
    kind = ControllerKind(ctrl_raw["kind"])
    epsilon = float(ctrl_raw.get("epsilon_frac", 0.01)) * plan.total_budget / plan.horizon_cycles
    scales_default = SLOWED_SCALES if kind is ControllerKind.SLOWED_BANDS else STANDARD_SCALES
    bands = BandTable(
        thresholds=tuple(float(t) for t in ctrl_raw.get("thresholds", STANDARD_THRESHOLDS)),
        scales=tuple(float(s) for s in ctrl_raw.get("scales", scales_default)),
    )
    base_raw = ctrl_raw.get("baseline", {})
    lam_min = float(ctrl_raw.get("lam_min", 1e-6))
    baseline = BaselineSettings(
        alpha0=float(base_raw.get("alpha0", 0.05)),
        params=BaselineParams(
            eta_up=float(base_raw.get("eta_up", 0.2)),
            eta_down=float(base_raw.get("eta_down", 0.5)),
            tau=float(base_raw.get("tau", 3.0)),
            epsilon=epsilon,
            alpha_min=float(base_raw.get("alpha_min", 0.01)),
            alpha_max=float(base_raw.get("alpha_max", 0.25)),
            window_n=int(base_raw.get("window_n", 5)),
            lam_min=lam_min,
        ),
    )
    controller = ControllerSettings(
        kind=kind,
        lam0=float(ctrl_raw.get("lam0", 0.1)),
        lam_min=lam_min,
        epsilon=epsilon,
        bands=bands,
        window_m=int(ctrl_raw.get("window_m", 20)),
        window_l=int(ctrl_raw.get("window_l", 10)),
        chain_from_applied=bool(ctrl_raw.get("chain_from_applied", False)),
        baseline=baseline,
    )

    window = raw.get("measure_cycles")
    digest = hashlib.sha256(
        json.dumps(raw, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
    return ScenarioConfig(
        name=raw["name"],
        adline=adline,
        plan=plan,
        traffic=traffic,
        pricing_rule=PricingRule(raw.get("pricing_rule", "second_price")),
        controller=controller,
        seeds=tuple(raw.get("seeds", [])),
        measure_cycles=tuple(window) if window is not None else None,
        pe_slot_cycles=int(raw.get("pe_slot_cycles", 1)),
        sha256=digest,
    )


def load_config(path: str | Path) -> ScenarioConfig:
    """Load and fully validate a JSON scenario config file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError([f"config file not found: {path}"])
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError([f"config file is not valid JSON: {path}: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"config root must be a JSON object: {path}"])
    return build_config(raw)


def build_test_controller(settings: ControllerSettings) -> Controller:
    """Construct the scenario's controller under test from its settings."""
    kind = settings.kind
    if kind is ControllerKind.BASELINE:
        return baseline_controller(settings.lam0, settings.baseline.alpha0, settings.baseline.params)
    if kind in (ControllerKind.BHC, ControllerKind.SLOWED_BANDS):
        return bhc_controller(settings.lam0, settings.bands, settings.epsilon, settings.lam_min, kind)
    if kind is ControllerKind.AOF:
        return aof_controller(settings.lam0, settings.bands, settings.epsilon, settings.window_m,
                              settings.lam_min)
    if kind is ControllerKind.ALU:
        return alu_controller(settings.lam0, settings.bands, settings.epsilon, settings.window_l,
                              settings.lam_min, settings.chain_from_applied)
    raise ValueError(f"unknown controller kind: {kind}")


def build_baseline_controller(settings: ControllerSettings) -> Controller:
    """Construct the variable-step comparator, started at the same multiplier."""
    return baseline_controller(settings.lam0, settings.baseline.alpha0, settings.baseline.params)
