"""Single-impression bidding, pacing and auction resolution.

Pure functions, no shared state: safe to call from any number of
concurrent simulation workers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class PricingRule(enum.Enum):
    """How a won impression is charged."""

    FIRST_PRICE = "first_price"
    SECOND_PRICE = "second_price"


@dataclass(frozen=True)
class AdLine:
    """A budget-constrained ad line entering auctions."""

    id: str
    max_bid: float
    budget_total: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.max_bid) and self.max_bid > 0):
            raise ValueError(f"max_bid must be a positive finite number, got {self.max_bid}")
        if not (math.isfinite(self.budget_total) and self.budget_total > 0):
            raise ValueError(f"budget_total must be a positive finite number, got {self.budget_total}")


@dataclass(frozen=True)
class Opportunity:
    """One impression opportunity: event probability and the top competing paced bid."""

    p_event: float
    competitor_bid: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.p_event <= 1.0):
            raise ValueError(f"p_event must be in [0, 1], got {self.p_event}")
        if self.competitor_bid < 0:
            raise ValueError(f"competitor_bid must be >= 0, got {self.competitor_bid}")


@dataclass(frozen=True)
class AuctionOutcome:
    won: bool
    price: float


def final_bid(max_bid: float, p_event: float) -> float:
    """Bid submitted for a single impression: max bid scaled by event probability."""
    if not (math.isfinite(max_bid) and max_bid > 0):
        raise ValueError(f"max_bid must be a positive finite number, got {max_bid}")
    if not (0.0 <= p_event <= 1.0):
        raise ValueError(f"p_event must be in [0, 1], got {p_event}")
    return max_bid * p_event


def paced_bid(lam: float, bid: float) -> float:
    """Rescale a bid by the pacing multiplier lam in (0, 1]."""
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"pacing multiplier must be in (0, 1], got {lam}")
    if bid < 0:
        raise ValueError(f"bid must be >= 0, got {bid}")
    return lam * bid


def run_auction(own_bid: float, opp: Opportunity, rule: PricingRule) -> AuctionOutcome:
    """Resolve a single auction against the highest competing bid.

    Ties lose: the win requires a strictly higher bid. A won first-price
    auction charges the submitted bid; a won second-price auction charges
    the runner-up's bid. Lost auctions charge exactly 0.
    """
    if own_bid < 0:
        raise ValueError(f"own_bid must be >= 0, got {own_bid}")
    if own_bid > opp.competitor_bid:
        price = own_bid if rule is PricingRule.FIRST_PRICE else opp.competitor_bid
        return AuctionOutcome(won=True, price=price)
    return AuctionOutcome(won=False, price=0.0)
