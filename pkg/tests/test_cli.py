import json

import pandas as pd
import pytest

from crushbasis.cli import main

SCENARIO = """\
seed = 3
n_elevators = 150
start_date = 2023-01-01
end_date = 2024-03-31
noise_sd = 2
missing_rate = 0.05
new_plant_lat = 42.0
new_plant_lon = -94.0
new_plant_start_month = 2023-11
new_plant_tau = 10
"""


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("sim")
    cfg = root / "scenario.cfg"
    cfg.write_text(SCENARIO)
    assert main(["simulate", "--config", str(cfg), "--out", str(root / "data")]) == 0
    return root / "data"


def inputs(d):
    return [
        "--plants", str(d / "plants.csv"),
        "--elevators", str(d / "elevators.csv"),
        "--cash", str(d / "cash.csv"),
        "--futures", str(d / "futures.csv"),
    ]


def test_simulate_outputs(sim_dir):
    names = {p.name for p in sim_dir.iterdir()}
    assert {"plants.csv", "elevators.csv", "cash.csv", "futures.csv", "oracle.csv", "scenario.cfg", "manifest.json"} <= names
    manifest = json.loads((sim_dir / "manifest.json").read_text())
    assert manifest["command"] == "simulate"
    assert set(manifest["outputs"]) >= {"cash.csv", "oracle.csv"}
    plants = pd.read_csv(sim_dir / "plants.csv")
    assert list(plants.columns[:6]) == ["id", "lat", "lon", "capacity_kbu_day", "status", "start_month"]


def test_estimate_new_outputs(sim_dir, tmp_path):
    out = tmp_path / "new"
    rc = main(["estimate-new", *inputs(sim_dir), "--placebo-reps", "10", "--bands", "B0_20,B20_40,B40_60", "--out", str(out)])
    assert rc == 0
    results = pd.read_csv(out / "results.csv")
    assert list(results.columns) == ["label", "coefficient", "se", "t", "p", "ci_lo", "ci_hi", "n"]
    did = results[results["label"].str.startswith("did|pooled|")]
    assert len(did) == 3
    table3 = pd.read_csv(out / "table3.csv")
    assert list(table3.columns) == ["sample", "B0_20", "B20_40", "B40_60"]
    table2 = pd.read_csv(out / "table2.csv")
    assert table2.loc[0, "change_treated"] - table2.loc[0, "change_control"] == pytest.approx(10.0, abs=2.0)
    fig6 = pd.read_csv(out / "figure6.csv")
    assert set(fig6["band"]) == {"B0_20", "B20_40", "B40_60"}


def test_estimate_new_exclude_plant(sim_dir, tmp_path):
    out = tmp_path / "excl"
    rc = main(["estimate-new", *inputs(sim_dir), "--placebo-reps", "0", "--bands", "B20_40", "--exclude-plant", "N1", "--out", str(out)])
    assert rc == 0
    samples = pd.read_csv(out / "table3.csv")["sample"].tolist()
    assert samples == ["pooled", "pooled_without_N1", "N1"]


def test_estimate_existing_outputs(sim_dir, tmp_path):
    out = tmp_path / "old"
    assert main(["estimate-existing", *inputs(sim_dir), "--hac-lag", "2", "--out", str(out)]) == 0
    ev = pd.read_csv(out / "event_coefficients.csv")
    assert list(ev.columns) == ["month", "label", "coefficient", "se", "t", "p", "ci_lo", "ci_hi", "n", "significant_5pct"]
    t4 = pd.read_csv(out / "table4.csv")
    assert t4["year"].tolist()[-1] == "mean_over_years"
    assert "mean_over_bands" in t4.columns


def test_feedstock_prints_and_writes(tmp_path, capsys):
    assert main(["feedstock", "--out", str(tmp_path)]) == 0
    text = capsys.readouterr().out
    assert "4537.75 g" in text and "$0.26772725/gal" in text and "$0.6500/gal" in text
    frame = pd.read_csv(tmp_path / "feedstock.csv").set_index("quantity")["value"]
    assert frame["cost_gap_usd_per_gal"] == 0.65


def test_missing_input_exits_with_data_code(sim_dir, tmp_path, capsys):
    args = inputs(sim_dir)
    args[1] = str(tmp_path / "nope.csv")
    assert main(["estimate-new", *args, "--out", str(tmp_path / "x")]) == 2
    assert "error kind=data-validation" in capsys.readouterr().err


def test_unknown_excluded_plant_is_rejected(sim_dir, tmp_path):
    rc = main(["estimate-new", *inputs(sim_dir), "--exclude-plant", "P01", "--out", str(tmp_path / "x")])
    assert rc == 2


def test_bad_band_is_rejected(sim_dir, tmp_path):
    assert main(["estimate-existing", *inputs(sim_dir), "--bands", "near", "--out", str(tmp_path / "x")]) == 2


def test_estimation_failure_exit_code(sim_dir, tmp_path, capsys):
    # no elevator sits within a 1-mile ring of an existing plant
    rc = main(["estimate-existing", *inputs(sim_dir), "--bands", "0-0.01", "--out", str(tmp_path / "x")])
    assert rc == 3
    assert "error kind=estimation" in capsys.readouterr().err


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
