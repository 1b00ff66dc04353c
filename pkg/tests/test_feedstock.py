from decimal import Decimal

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crushbasis.errors import DataValidationError
from crushbasis.feedstock import (
    SOYBEAN_OIL,
    YELLOW_GREASE,
    FeedstockProfile,
    FuelConstants,
    feedstock_cost_gap,
    lcfs_credit_advantage,
    lcfs_credit_breakdown,
)


def test_credit_intermediates_exact():
    c = lcfs_credit_breakdown(SOYBEAN_OIL, YELLOW_GREASE)
    assert c.ci_gap == Decimal("35")
    assert c.grams_per_gallon == Decimal("4537.75")
    assert c.tonnes_per_gallon == Decimal("0.00453775")
    assert c.dollars_per_gallon == Decimal("0.26772725")


def test_credit_rounds_to_four_places():
    assert round(lcfs_credit_advantage(SOYBEAN_OIL, YELLOW_GREASE), 4) == 0.2677
    assert round(100 * lcfs_credit_advantage(SOYBEAN_OIL, YELLOW_GREASE), 2) == 26.77


def test_credit_equal_ci_and_linearity():
    same = FeedstockProfile("x", 40, 0.4)
    assert lcfs_credit_advantage(same, same) == 0
    k = FuelConstants(credit_price=59.0)
    k2 = FuelConstants(credit_price=118.0)
    assert lcfs_credit_advantage(SOYBEAN_OIL, YELLOW_GREASE, k2) == 2 * lcfs_credit_advantage(SOYBEAN_OIL, YELLOW_GREASE, k)


def test_cost_gap_exact():
    assert feedstock_cost_gap(SOYBEAN_OIL, YELLOW_GREASE) == 0.65


def test_cost_gap_equal_and_halved():
    a = FeedstockProfile("a", 50, 0.45)
    half = FeedstockProfile("h", 20, 0.41)
    assert feedstock_cost_gap(a, a) == 0
    assert feedstock_cost_gap(a, half) == feedstock_cost_gap(SOYBEAN_OIL, YELLOW_GREASE) / 2


profiles = st.builds(
    FeedstockProfile,
    st.just("f"),
    st.floats(0.01, 200, allow_nan=False),
    st.floats(0, 5, allow_nan=False),
)


@settings(max_examples=200, deadline=None)
@given(profiles, profiles)
def test_antisymmetry(a, b):
    assert lcfs_credit_advantage(a, b) == -lcfs_credit_advantage(b, a)
    assert feedstock_cost_gap(a, b) == -feedstock_cost_gap(b, a)


def test_validation():
    with pytest.raises(DataValidationError):
        FeedstockProfile("bad", 0, 0.4)
    with pytest.raises(DataValidationError):
        FeedstockProfile("bad", 10, -0.1)
    with pytest.raises(DataValidationError):
        FuelConstants(mj_per_gallon=0)


def test_summary_line():
    c = lcfs_credit_breakdown(SOYBEAN_OIL, YELLOW_GREASE)
    line = c.line(SOYBEAN_OIL, YELLOW_GREASE, FuelConstants())
    assert "4537.75 g" in line and "$0.26772725/gal" in line
