import csv
import json

import numpy as np
import pytest

from epigame.cli import main
from epigame.scenario import (
    SweepPlan,
    ScenarioError,
    builtin,
    load_scenario,
    parse_scenario,
    save_scenario,
    scenario_dict,
    table1,
)


@pytest.fixture
def small_scenario(tmp_path):
    path = tmp_path / "small.json"
    save_scenario(path, table1("nu_beta", n_points=3), SweepPlan((2,), (0.0, 0.009)))
    return path


class TestScenario:
    def test_round_trip(self, tmp_path):
        spec, plan = builtin("table1")
        save_scenario(tmp_path / "t.json", spec, plan)
        spec2, plan2 = load_scenario(tmp_path / "t.json")
        assert spec2 == spec
        assert plan2 == plan

    def test_builtin_fields(self):
        spec, plan = builtin("table1")
        np.testing.assert_allclose(np.diag(spec.epidemic.beta), [0.45, 0.3, 0.225, 0.18, 0.15])
        np.testing.assert_allclose(spec.epidemic.i0, [0.2, 0.1, 0.005, 0.002, 0.001])
        assert spec.T == 30 and spec.step == 0.05 and spec.actions.n_points == 11
        assert plan.varied_regions == (0, 1, 2, 3, 4) and len(plan.rates) == 13

    def test_unknown_builtin(self):
        with pytest.raises(ScenarioError):
            builtin("nope")

    @pytest.mark.parametrize(
        "mutate,path",
        [
            (lambda d: d["epidemic"]["gamma"].__setitem__(2, -0.1), "epidemic.gamma[2]"),
            (lambda d: d["epidemic"]["beta"][1].__setitem__(0, -1.0), "epidemic.beta[1][0]"),
            (lambda d: d["epidemic"]["s0"].pop(), "epidemic.s0"),
            (lambda d: d["actions"]["u_max"].__setitem__(0, 0.5), "actions.u_max[0]"),
            (lambda d: d["costs"]["c"].__setitem__(4, "x"), "costs.c[4]"),
            (lambda d: d.pop("horizon"), "horizon"),
            (lambda d: d["horizon"].__setitem__("T_days", 0), "horizon.T_days"),
            (lambda d: d.__setitem__("sweep", {"varied_region": 9}), "sweep.varied_region[0]"),
        ],
    )
    def test_validation_paths(self, mutate, path):
        doc = scenario_dict(*builtin("table1"))
        mutate(doc)
        with pytest.raises(ScenarioError) as err:
            parse_scenario(doc)
        assert err.value.path == path

    def test_bad_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{")
        with pytest.raises(ScenarioError):
            load_scenario(p)

    def test_single_varied_region(self):
        doc = scenario_dict(*builtin("table1"))
        doc["sweep"] = {"varied_region": 3, "cross_rate_values": [0.001]}
        _, plan = parse_scenario(doc)
        assert plan.varied_regions == (2,) and plan.base == "nu_beta"


class TestSimulate:
    def test_rows_and_header(self, tmp_path):
        out = tmp_path / "traj.csv"
        assert main(["simulate", "--out", str(out)]) == 0
        rows = list(csv.reader(out.open()))
        assert rows[0][:2] == ["t", "s_1"] and rows[0][-1] == "r_5" and len(rows[0]) == 16
        assert len(rows) == 602
        assert float(rows[-1][0]) == 30.0

    def test_profile_snaps_to_grid(self, tmp_path, capsys):
        assert main(["simulate", "--profile", "0.6,0.51,0.35,0.2,0.1"]) == 0
        assert main(["simulate", "--profile", "0.61,0.51,0.35,0.2,0.1"]) == 2
        assert "grid" in capsys.readouterr().err.lower()

    def test_off_grid_allowed(self, capsys):
        assert main(["simulate", "--profile", "0.61,0.51,0.35,0.2,0.1", "--allow-off-grid"]) == 0

    def test_wrong_length(self, capsys):
        assert main(["simulate", "--profile", "0.6,0.51"]) == 2


class TestSolve:
    def test_report_small_grid(self, tmp_path):
        out = tmp_path / "solve.json"
        assert main(["solve", "--grid-points", "3", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        eq = doc["equilibrium"]
        assert eq["poa"] >= 1 and eq["profiles_evaluated"] == 243
        assert doc["conditions"]["nonmonotone_regions"] == [3, 4, 5]
        assert doc["scenario"]["actions"]["n_points"] == 3

    def test_missing_file(self, tmp_path):
        assert main(["solve", "--scenario", str(tmp_path / "missing.json")]) == 2


class TestSweep:
    def test_csv_and_sidecar(self, tmp_path, small_scenario):
        out = tmp_path / "sweep.csv"
        assert main(["sweep", "--scenario", str(small_scenario), "--out", str(out)]) == 0
        rows = list(csv.DictReader(out.open()))
        assert [r["varied_region"] for r in rows] == ["3", "3"]
        assert rows[0]["in_wir_flag"] == "true" and rows[1]["in_wir_flag"] == "false"
        assert all(float(r["poa"]) >= 1 for r in rows)
        meta = json.loads((tmp_path / "sweep.csv.meta.json").read_text())
        assert meta["sweep"]["varied_region"] == [3] and meta["n_points"] == 3

    def test_no_sweep_section(self, tmp_path):
        assert main(["sweep", "--builtin", "table1-decoupled", "--out", str(tmp_path / "x.csv")]) == 2


@pytest.mark.parametrize(
    "argv",
    [
        ["simulate", "--at", "u_max"],
        ["conditions", "--grid-points", "3"],
        ["solve", "--grid-points", "3"],
    ],
)
def test_deterministic_output(tmp_path, argv):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(argv + ["--out", str(a)]) == main(argv + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()
