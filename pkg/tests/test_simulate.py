import numpy as np
import pandas as pd
import pytest

from crushbasis import data as D
from crushbasis.errors import DataValidationError
from crushbasis.geo import B0_20, B20_40, BANDS, Band, distance_matrix
from crushbasis.simulate import (
    NewPlantSpec,
    Scenario,
    generate_basis_panel,
    generate_layout,
    oracle_att,
    oracle_frame,
    seasonal_term,
    true_basis,
)


def small(**kw):
    base = dict(n_elevators=40, start_date="2023-01-01", end_date="2023-03-31")
    base.update(kw)
    return Scenario(**base)


def basis_by_elevator(scenario):
    layout = generate_layout(scenario)
    cash, quotes = generate_basis_panel(scenario, layout)
    fut = D.select_active_futures(quotes)
    panel = D.PricePanel(cash, scenario.calendar())
    b = D.compute_basis(panel, fut).frame
    return layout, b.pivot(index="elevator_id", columns="period", values="basis")


def test_flat_scenario_gives_base_basis_everywhere():
    s = small(effects={})
    _, wide = basis_by_elevator(s)
    assert np.abs(wide.to_numpy() - s.base_basis).max() <= 1e-9


def test_band_gap_between_near_and_far_elevator():
    s = small(effects={B0_20: 10.0})
    (plants, elevs), wide = basis_by_elevator(s)
    d = distance_matrix([[e.location.lat, e.location.lon] for e in elevs], [[p.location.lat, p.location.lon] for p in plants]).min(axis=1)
    near = [e.id for e, di in zip(elevs, d) if di < 20]
    far = [e.id for e, di in zip(elevs, d) if 100 <= di]
    assert near and far
    gap = wide.loc[near].to_numpy() - wide.loc[far[0]].to_numpy()
    assert np.abs(gap - 10.0).max() <= 1e-9


def test_noiseless_basis_matches_construction():
    s = small(seasonal_amplitude=8.0)
    (plants, elevs), wide = basis_by_elevator(s)
    truth = true_basis(s, plants, elevs, s.calendar())
    assert np.abs(wide.loc[[e.id for e in elevs]].to_numpy() - truth).max() <= 1e-9


def test_seasonal_term_peaks_mid_july():
    s = Scenario(seasonal_amplitude=5.0)
    dates = pd.date_range("2023-01-01", "2023-12-31")
    peak = dates[np.argmax(seasonal_term(s, dates))]
    assert (peak.month, peak.day) == (7, 15)


def test_noisy_band_mean_within_three_standard_errors():
    s = Scenario(n_elevators=400, noise_sd=4.0, start_date="2023-01-01", end_date="2023-01-31", seed=8)
    (plants, elevs), wide = basis_by_elevator(s)
    d = distance_matrix([[e.location.lat, e.location.lon] for e in elevs], [[p.location.lat, p.location.lon] for p in plants]).min(axis=1)
    ids = np.array([e.id for e in elevs])
    day = wide.columns[0]
    far = wide.loc[ids[d >= 100], day]
    for band in BANDS:
        near = wide.loc[ids[(d >= band.lo) & (d < band.hi)], day]
        if len(near) < 5:
            continue
        se = s.noise_sd * np.sqrt(1 / len(near) + 1 / len(far))
        assert abs(near.mean() - far.mean() - s.effects[band]) <= 3 * se


def test_determinism_and_substreams():
    s = small(noise_sd=2.0, missing_rate=0.1)
    a = generate_basis_panel(s, generate_layout(s))
    b = generate_basis_panel(s, generate_layout(s))
    pd.testing.assert_frame_equal(a[0], b[0])
    pd.testing.assert_frame_equal(a[1], b[1])
    c = generate_basis_panel(small(noise_sd=2.0, missing_rate=0.1, seed=1), generate_layout(s))
    assert not a[0]["cash_cents"].equals(c[0]["cash_cents"])


def test_futures_leadership_alternates():
    s = small()
    _, quotes = generate_basis_panel(s, generate_layout(s))
    q = pd.DataFrame(quotes)
    q["date"] = pd.to_datetime(q["date"])
    lead = q.sort_values("volume").groupby("date").tail(1).set_index("date")["contract_id"]
    assert set(lead[lead.index.month == 1]) == {"C1"}
    assert set(lead[lead.index.month == 2]) == {"C2"}


def test_oracle_lookup_and_seed_independence():
    s = Scenario(new_plant=NewPlantSpec(42.0, -94.0, "2023-11", 10.0))
    assert oracle_att(s, B0_20).effect == 23.36
    assert oracle_att(s, B20_40).new_plant_att == 10.0
    s2 = Scenario(seed=99, new_plant=NewPlantSpec(42.0, -94.0, "2023-11", 10.0))
    pd.testing.assert_frame_equal(oracle_frame(s), oracle_frame(s2))
    with pytest.raises(DataValidationError):
        oracle_att(s, Band(0, 50))


def test_scenario_validation():
    with pytest.raises(DataValidationError):
        Scenario(noise_sd=-1)
    with pytest.raises(DataValidationError):
        Scenario(effects={B0_20: 5.0, B20_40: 6.0})
    with pytest.raises(DataValidationError):
        Scenario(effects={Band(100, 120): 1.0})


def test_config_round_trip():
    s = Scenario(seed=4, noise_sd=2.5, n_states=3, effects={B0_20: 7.0}, new_plant=NewPlantSpec(41.0, -95.0, "2022-06", 3.0, 80.0))
    back = Scenario.from_config(s.to_config())
    assert back == s


def test_config_rejects_unknown_key():
    with pytest.raises(DataValidationError):
        Scenario.from_config("noise = 3\n")
    with pytest.raises(DataValidationError):
        Scenario.from_config("new_plant_lat = 41\n")


def test_layout_states_and_ids():
    s = Scenario(n_states=2, n_elevators=20, new_plant=NewPlantSpec(42.0, -99.0, "2023-11", 1.0))
    plants, elevs = generate_layout(s)
    assert plants[-1].id == "N1" and plants[-1].is_new
    assert {e.state for e in elevs} <= {"IA", "IL"}
    assert plants[-1].state == "IA"
