"""Pacing-multiplier controllers.

Two families are implemented behind one interface:

* a variable-step multiplicative controller ("baseline") whose step size
  adapts to the smoothness of its own recent trajectory, and
* a banded hysteresis controller that discretizes the relative delivery
  error into bands and applies a band-specific multiplicative step, plus
  two low-pass variants (averaged observations, averaged multiplier
  updates) and a damped "slowed bands" configuration.

All update rules are pure functions over small immutable states; the
``Controller`` shell at the bottom adapts them to the mutable one-call-per
control-cycle interface the plant drives. A single controller instance
must not receive concurrent updates.
"""

from __future__ import annotations

import enum
import math
from bisect import bisect_right
from dataclasses import dataclass, replace
from statistics import fmean
from typing import Callable

DEFAULT_LAMBDA_MIN = 1e-6


class ControllerKind(enum.Enum):
    """Controller variants selectable from scenario configuration."""

    BASELINE = "baseline"
    BHC = "bhc"
    AOF = "aof"
    ALU = "alu"
    SLOWED_BANDS = "slowed_bands"


@dataclass(frozen=True)
class ControlInput:
    """One control cycle's (desired rate, observed rate) pair."""

    desired_rate: float
    observed_rate: float

    def __post_init__(self) -> None:
        for name in ("desired_rate", "observed_rate"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value}")


def _clamp(x: float, lo: float, hi: float) -> float:
    return min(hi, max(lo, x))


# ---------------------------------------------------------------------------
# Variable-step multiplicative controller (baseline)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaselineParams:
    """Constants of the variable-step controller.

    ``eta_up``/``eta_down`` grow and shrink the step size, ``tau`` is the
    oscillation threshold on the fluctuation factor, ``epsilon`` the
    absolute delivery tolerance (currency per cycle), ``window_n`` the
    trajectory length used to judge smoothness.
    """

    eta_up: float
    eta_down: float
    tau: float
    epsilon: float
    alpha_min: float
    alpha_max: float
    window_n: int
    lam_min: float = DEFAULT_LAMBDA_MIN

    def __post_init__(self) -> None:
        if not self.eta_up > 0:
            raise ValueError(f"eta_up must be > 0, got {self.eta_up}")
        if not (0.0 < self.eta_down < 1.0):
            raise ValueError(f"eta_down must be in (0, 1), got {self.eta_down}")
        if not self.tau > 1:
            raise ValueError(f"tau must be > 1, got {self.tau}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")
        if not (0.0 < self.alpha_min <= self.alpha_max < 1.0):
            raise ValueError(
                f"need 0 < alpha_min <= alpha_max < 1, got [{self.alpha_min}, {self.alpha_max}]"
            )
        if self.window_n < 2:
            raise ValueError(f"window_n must be >= 2, got {self.window_n}")
        if not (0.0 < self.lam_min < 1.0):
            raise ValueError(f"lam_min must be in (0, 1), got {self.lam_min}")


@dataclass(frozen=True)
class BaselineState:
    """Current multiplier, adaptive step size and recent multiplier trajectory."""

    lam: float
    alpha: float
    trajectory: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"pacing multiplier must be in (0, 1], got {self.lam}")


def fluctuation_factor(trajectory: list[float] | tuple[float, ...]) -> float:
    """Ratio of cumulative variation to net displacement of a trajectory.

    1.0 for strictly monotone paths, larger for oscillatory ones, and
    +inf when the endpoints coincide (zero net displacement).
    """
    if len(trajectory) < 2:
        raise ValueError("fluctuation_factor needs at least 2 points")
    displacement = abs(trajectory[-1] - trajectory[0])
    distance = sum(abs(b - a) for a, b in zip(trajectory, trajectory[1:]))
    if displacement == 0:
        return math.inf
    # distance >= displacement by the triangle inequality; guard the ratio
    # against rounding a monotone path just below 1
    return max(1.0, distance / displacement)


def adapt_scale(alpha: float, trajectory: tuple[float, ...], params: BaselineParams) -> float:
    """Speed the step size up on smooth trends, slow it down on oscillation.

    With fewer than 2 trajectory points the step is left unchanged. The
    result is clamped to [alpha_min, alpha_max].
    """
    if len(trajectory) < 2:
        new_alpha = alpha
    else:
        factor = fluctuation_factor(trajectory)
        if factor <= 1.0:
            new_alpha = alpha * (1.0 + params.eta_up)
        elif factor > params.tau:
            new_alpha = alpha * (1.0 - params.eta_down)
        else:
            new_alpha = alpha
    return _clamp(new_alpha, params.alpha_min, params.alpha_max)


def baseline_update(state: BaselineState, inp: ControlInput, params: BaselineParams) -> BaselineState:
    """One cycle of the variable-step multiplicative update.

    The step size adapts first; the multiplier update then uses the
    adapted step. Within the +/- epsilon tolerance the multiplier is left
    untouched. The applied multiplier is appended to the trajectory as the
    smoothness proxy for future adaptation.
    """
    alpha = adapt_scale(state.alpha, state.trajectory, params)
    observed, desired = inp.observed_rate, inp.desired_rate
    if abs(observed - desired) <= params.epsilon:
        lam = state.lam
    elif observed < desired:
        lam = state.lam * (1.0 + alpha)
    else:
        lam = state.lam * (1.0 - alpha)
    lam = _clamp(lam, params.lam_min, 1.0)
    trajectory = (state.trajectory + (lam,))[-params.window_n:]
    return BaselineState(lam=lam, alpha=alpha, trajectory=trajectory)


# ---------------------------------------------------------------------------
# Banded hysteresis controller and variants
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BandTable:
    """Error bands for gain scheduling.

    ``thresholds`` are strictly increasing relative-error magnitudes with
    thresholds[0] == 0 so every error falls into some band; ``scales`` are
    the per-band multiplicative step sizes, each in (0, 1).
    """

    thresholds: tuple[float, ...]
    scales: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.thresholds) == 0 or len(self.thresholds) != len(self.scales):
            raise ValueError("thresholds and scales must be nonempty and of equal length")
        if self.thresholds[0] != 0.0:
            raise ValueError(f"first threshold must be 0 so a band always exists, got {self.thresholds[0]}")
        if any(b <= a for a, b in zip(self.thresholds, self.thresholds[1:])):
            raise ValueError(f"thresholds must be strictly increasing, got {self.thresholds}")
        if any(not (0.0 < s < 1.0) for s in self.scales):
            raise ValueError(f"every scale must be in (0, 1), got {self.scales}")


@dataclass(frozen=True)
class BhcState:
    """Banded hysteresis controller: multiplier, band table and tolerance."""

    lam: float
    bands: BandTable
    epsilon: float
    lam_min: float = DEFAULT_LAMBDA_MIN

    def __post_init__(self) -> None:
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"pacing multiplier must be in (0, 1], got {self.lam}")
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be > 0, got {self.epsilon}")


def relative_error(inp: ControlInput) -> float:
    """Normalized delivery error, positive under under-delivery.

    At desired_rate == 0 the ratio is undefined; spend on a zero target is
    treated as full over-delivery (-1.0) and zero spend on a zero target
    as zero error.
    """
    desired, observed = inp.desired_rate, inp.observed_rate
    if desired > 0:
        return (desired - observed) / desired
    return -1.0 if observed > 0 else 0.0


def select_band(bands: BandTable, abs_error: float) -> int:
    """Index of the highest band whose threshold does not exceed ``abs_error``.

    0-based; thresholds[0] == 0 guarantees a band exists for any
    nonnegative error.
    """
    if abs_error < 0:
        raise ValueError(f"abs_error must be >= 0, got {abs_error}")
    return bisect_right(bands.thresholds, abs_error) - 1


def bhc_update(state: BhcState, inp: ControlInput) -> BhcState:
    """One banded hysteresis update of the pacing multiplier.

    Inside the strict epsilon tolerance the state is returned unchanged;
    otherwise the relative error selects a band and the multiplier moves
    by that band's scale, up under under-delivery and down under
    over-delivery, clamped to [lam_min, 1].
    """
    desired, observed = inp.desired_rate, inp.observed_rate
    if abs(observed - desired) < state.epsilon:
        return state
    direction = 1.0 if observed < desired else -1.0
    band = select_band(state.bands, abs(relative_error(inp)))
    lam = _clamp(state.lam * (1.0 + state.bands.scales[band] * direction), state.lam_min, 1.0)
    return replace(state, lam=lam)


@dataclass(frozen=True)
class AofState:
    """Banded controller fed a moving average of the observed rate.

    Low-pass filter on the measurement: the inner controller sees the mean
    of the last ``window_m`` observations (fewer during warm-up).
    """

    inner: BhcState
    window_m: int
    history: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        if self.window_m < 1:
            raise ValueError(f"window_m must be >= 1, got {self.window_m}")

    @property
    def lam(self) -> float:
        return self.inner.lam


def aof_update(state: AofState, inp: ControlInput) -> AofState:
    history = (state.history + (inp.observed_rate,))[-state.window_m:]
    averaged = ControlInput(inp.desired_rate, fmean(history))
    return replace(state, inner=bhc_update(state.inner, averaged), history=history)


@dataclass(frozen=True)
class AluState:
    """Banded controller whose applied multiplier averages recent candidates.

    Low-pass filter on the actuation: each cycle produces a candidate
    multiplier via the banded update; the applied multiplier is the mean of
    the last ``window_l`` candidates (fewer during warm-up). By default
    candidates chain from the previous candidate; ``chain_from_applied``
    switches the chaining to the applied (averaged) multiplier instead.
    """

    inner: BhcState
    window_l: int
    candidates: tuple[float, ...] = ()
    chain_from_applied: bool = False

    def __post_init__(self) -> None:
        if self.window_l < 1:
            raise ValueError(f"window_l must be >= 1, got {self.window_l}")

    @property
    def lam(self) -> float:
        return fmean(self.candidates) if self.candidates else self.inner.lam


def alu_update(state: AluState, inp: ControlInput) -> AluState:
    candidate_state = bhc_update(state.inner, inp)
    candidates = (state.candidates + (candidate_state.lam,))[-state.window_l:]
    if state.chain_from_applied:
        candidate_state = replace(candidate_state, lam=fmean(candidates))
    return replace(state, inner=candidate_state, candidates=candidates)


# ---------------------------------------------------------------------------
# Uniform stateful shell
# ---------------------------------------------------------------------------

_State = BaselineState | BhcState | AofState | AluState


class Controller:
    """Mutable shell around an immutable controller state.

    The plant drives it one control cycle at a time: ``update`` consumes
    the cycle's (desired, observed) rates and returns the multiplier to
    apply next cycle.
    """

    def __init__(self, state: _State, step: Callable[[_State, ControlInput], _State],
                 kind: ControllerKind | None = None) -> None:
        self.state = state
        self._step = step
        self.kind = kind

    @property
    def lam(self) -> float:
        return self.state.lam

    def update(self, desired_rate: float, observed_rate: float) -> float:
        self.state = self._step(self.state, ControlInput(desired_rate, observed_rate))
        return self.state.lam


def baseline_controller(lam0: float, alpha0: float, params: BaselineParams) -> Controller:
    state = BaselineState(lam=lam0, alpha=_clamp(alpha0, params.alpha_min, params.alpha_max))
    return Controller(state, lambda s, i: baseline_update(s, i, params), ControllerKind.BASELINE)


def bhc_controller(lam0: float, bands: BandTable, epsilon: float,
                   lam_min: float = DEFAULT_LAMBDA_MIN,
                   kind: ControllerKind = ControllerKind.BHC) -> Controller:
    return Controller(BhcState(lam0, bands, epsilon, lam_min), bhc_update, kind)


def aof_controller(lam0: float, bands: BandTable, epsilon: float, window_m: int,
                   lam_min: float = DEFAULT_LAMBDA_MIN) -> Controller:
    state = AofState(BhcState(lam0, bands, epsilon, lam_min), window_m)
    return Controller(state, aof_update, ControllerKind.AOF)


def alu_controller(lam0: float, bands: BandTable, epsilon: float, window_l: int,
                   lam_min: float = DEFAULT_LAMBDA_MIN,
                   chain_from_applied: bool = False) -> Controller:
    state = AluState(BhcState(lam0, bands, epsilon, lam_min), window_l,
                     chain_from_applied=chain_from_applied)
    return Controller(state, alu_update, ControllerKind.ALU)
