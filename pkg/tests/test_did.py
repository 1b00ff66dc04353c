import numpy as np
import pandas as pd
import pytest

from conftest import make_did, random_did
from crushbasis.errors import DataValidationError
from crushbasis.estimators import cell_means, did_fe
from crushbasis.simulate import generate_event_dataset


def test_two_by_two_cell_means():
    d = make_did([("c", 0, -1, 10.0), ("c", 0, 1, 12.0), ("t", 1, -1, 20.0), ("t", 1, 1, 25.0)])
    r = did_fe(d)
    assert r.coefficient == pytest.approx(3.0, abs=1e-12)
    assert cell_means(d).loc["treated", "post"] == 25.0


def test_unit_constant_is_absorbed(rng):
    d = random_did(rng)
    base = did_fe(d)
    f = d.frame.copy()
    f.loc[f["unit_id"] == "u01", "basis"] += 7.0
    moved = did_fe(type(d)(f))
    assert moved.coefficient == pytest.approx(base.coefficient, abs=1e-10)


def test_within_equals_dummies(rng):
    d = random_did(rng, n_treated=5, n_control=7)
    a = did_fe(d, method="within")
    b = did_fe(d, method="dummies")
    assert a.coefficient == pytest.approx(b.coefficient, abs=1e-10)
    assert a.se == pytest.approx(b.se, rel=1e-8)


def test_cluster_se_against_direct_formula(rng):
    d = random_did(rng, n_treated=3, n_control=4)
    f = d.frame
    # independent route: unit dummies solved by lstsq, scores summed per unit
    units = sorted(f["unit_id"].unique())
    U = (f["unit_id"].to_numpy()[:, None] == np.array(units)[None, :]).astype(float)
    X = np.column_stack([f["post"], f["post"] * f["treatment"], U])
    y = f["basis"].to_numpy()
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    e = y - X @ beta
    bread = np.linalg.inv(X.T @ X)
    meat = np.zeros((X.shape[1], X.shape[1]))
    for u in units:
        m = (f["unit_id"] == u).to_numpy()
        score = X[m].T @ e[m]
        meat += np.outer(score, score)
    n, G = len(y), len(units)
    V = G / (G - 1) * (n - 1) / (n - 3) * bread @ meat @ bread
    r = did_fe(d)
    assert r.coefficient == pytest.approx(beta[1], abs=1e-10)
    assert r.se == pytest.approx(np.sqrt(V[1, 1]), rel=1e-8)


def test_noiseless_effect_recovered():
    d = generate_event_dataset(20, 30, tau=10.0, noise_sd=0.0, seed=3)
    assert abs(did_fe(d).coefficient - 10.0) <= 1e-9


def test_ci_and_p_value(rng):
    r = did_fe(random_did(rng))
    lo, hi = r.ci95
    assert lo == pytest.approx(r.coefficient - 1.96 * r.se)
    assert hi == pytest.approx(r.coefficient + 1.96 * r.se)
    assert r.se > 0
    assert 0 <= r.p_value <= 1


def test_single_regime_units_are_dropped(rng):
    d = random_did(rng)
    f = d.frame
    extra = f[(f["unit_id"] == "u00") & (f["post"] == 0)].assign(unit_id="lonely", elevator_id="lonely")
    with_extra = type(d)(pd.concat([f, extra], ignore_index=True))
    assert did_fe(with_extra).coefficient == pytest.approx(did_fe(d).coefficient, abs=1e-12)


def test_requires_both_groups():
    d = make_did([("t", 1, -1, 1.0), ("t", 1, 1, 2.0), ("s", 1, -1, 1.0), ("s", 1, 1, 3.0)])
    with pytest.raises(DataValidationError):
        did_fe(d)


def test_unknown_method(rng):
    with pytest.raises(ValueError):
        did_fe(random_did(rng), method="ridge")
