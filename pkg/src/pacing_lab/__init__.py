"""Closed-loop budget pacing lab.

Controllers that throttle auction bids through a pacing multiplier, a
stochastic auction plant to drive them against, metrics for pacing quality
and a seeded experiment harness with CSV/SVG reporting.
"""

from .auction import AdLine, AuctionOutcome, Opportunity, PricingRule, final_bid, paced_bid, run_auction
from .config import ConfigError, ScenarioConfig, build_config, load_config
from .controllers import (
    AluState,
    AofState,
    BandTable,
    BaselineParams,
    BaselineState,
    BhcState,
    ControlInput,
    Controller,
    ControllerKind,
    adapt_scale,
    alu_controller,
    alu_update,
    aof_controller,
    aof_update,
    baseline_controller,
    baseline_update,
    bhc_controller,
    bhc_update,
    fluctuation_factor,
    relative_error,
    select_band,
)
from .harness import RunReport, SeedRun, emit_report, run_experiment
from .metrics import (
    MetricDeltas,
    MetricsReport,
    cpm,
    delta_vs_baseline,
    lambda_volatility,
    pacing_error,
    report_from_telemetry,
)
from .plant import (
    CycleRecord,
    ScenarioResult,
    SpendPlan,
    TrafficModel,
    cumulative_target,
    desired_rate,
    run_cycle,
    simulate,
)
from .presets import PRESET_NAMES, preset_path

__version__ = "0.1.0"
