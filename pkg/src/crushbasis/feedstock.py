"""Feedstock economics for renewable diesel: credit value and cost gaps.

Arithmetic runs in :class:`decimal.Decimal` on the decimal text of each
input so published round figures come out exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

from .errors import DataValidationError

GRAMS_PER_TONNE = Decimal(1_000_000)


def _dec(x) -> Decimal:
    return x if isinstance(x, Decimal) else Decimal(str(x))


def _fmt(d: Decimal) -> str:
    return f"{d.normalize():f}"


@dataclass(frozen=True)
class FeedstockProfile:
    name: str
    ci_score: float  # g CO2e / MJ
    price: float  # $ / lb

    def __post_init__(self):
        if not self.ci_score > 0:
            raise DataValidationError(f"{self.name}: carbon intensity must be positive")
        if self.price < 0:
            raise DataValidationError(f"{self.name}: price must be non-negative")


@dataclass(frozen=True)
class FuelConstants:
    mj_per_gallon: float = 129.65
    lbs_feedstock_per_gallon: float = 8.125
    credit_price: float = 59.0  # $ / metric ton CO2e

    def __post_init__(self):
        for name in ("mj_per_gallon", "lbs_feedstock_per_gallon", "credit_price"):
            if not getattr(self, name) > 0:
                raise DataValidationError(f"{name} must be positive")


SOYBEAN_OIL = FeedstockProfile("soybean oil", 55.0, 0.45)
YELLOW_GREASE = FeedstockProfile("yellow grease", 20.0, 0.37)


@dataclass(frozen=True)
class CreditBreakdown:
    ci_gap: Decimal  # g/MJ
    grams_per_gallon: Decimal
    tonnes_per_gallon: Decimal
    dollars_per_gallon: Decimal

    def line(self, a: FeedstockProfile, b: FeedstockProfile, k: FuelConstants) -> str:
        return (
            f"{b.name} vs {a.name}: {_fmt(self.ci_gap)} g/MJ x {_fmt(_dec(k.mj_per_gallon))} MJ/gal"
            f" = {_fmt(self.grams_per_gallon)} g = {_fmt(self.tonnes_per_gallon)} t"
            f" x ${_fmt(_dec(k.credit_price))}/t = ${_fmt(self.dollars_per_gallon)}/gal"
        )


def lcfs_credit_breakdown(a: FeedstockProfile, b: FeedstockProfile, k: FuelConstants = FuelConstants()) -> CreditBreakdown:
    gap = _dec(a.ci_score) - _dec(b.ci_score)
    grams = gap * _dec(k.mj_per_gallon)
    tonnes = grams / GRAMS_PER_TONNE
    return CreditBreakdown(gap, grams, tonnes, tonnes * _dec(k.credit_price))


def lcfs_credit_advantage(a: FeedstockProfile, b: FeedstockProfile, k: FuelConstants = FuelConstants()) -> float:
    """Extra credit value per gallon, in dollars, from using ``b`` instead of ``a``."""
    return float(lcfs_credit_breakdown(a, b, k).dollars_per_gallon)


def feedstock_cost_gap(a: FeedstockProfile, b: FeedstockProfile, k: FuelConstants = FuelConstants()) -> float:
    """Feedstock cost saving per gallon, in dollars, of ``b`` relative to ``a``."""
    return float((_dec(a.price) - _dec(b.price)) * _dec(k.lbs_feedstock_per_gallon))
