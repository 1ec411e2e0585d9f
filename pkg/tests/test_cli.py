import json
import math

import pytest

from substochastic.cli import main, parse_t_grid
from substochastic.models import dump_model
from substochastic.zoo import pure_loss, quadratic_birth, two_state, yule

EXP1 = math.exp(-1.0)
EXP2 = math.exp(-2.0)


@pytest.fixture(scope="module")
def model_files(tmp_path_factory):
    d = tmp_path_factory.mktemp("models")
    paths = {}
    for m in (yule(), quadratic_birth(), two_state(), pure_loss()):
        p = d / f"{m.name}.json"
        dump_model(m, str(p))
        paths[m.name] = str(p)
    bad = d / "bad.json"
    bad.write_text('{"name": "x", "bogus": 1}')
    paths["bad"] = str(bad)
    notjson = d / "notjson.json"
    notjson.write_text("{{{")
    paths["notjson"] = str(notjson)
    return paths


class TestGridParsing:
    def test_range_inclusive_of_both_ends(self):
        assert parse_t_grid("0:1:0.25") == (0.0, 0.25, 0.5, 0.75, 1.0)
        assert parse_t_grid("0.5:2:0.7") == (0.5, 1.2, 1.9, 2.0)

    def test_single_and_list(self):
        assert parse_t_grid("0") == (0.0,)
        assert parse_t_grid("0.5,1,2") == (0.5, 1.0, 2.0)

    def test_rejects_bad_specs(self):
        for spec in ("1:0:0.5", "0:1:0", "2,1", "0:1:0.1:9"):
            with pytest.raises(ValueError):
                parse_t_grid(spec)


class TestVerdictCommand:
    def test_honest_exit_zero(self, model_files, tmp_path):
        out = tmp_path / "r.json"
        assert main(["verdict", "--model", model_files["yule"], "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert doc["verdict"] == "Honest"

    def test_dishonest_exit_ten(self, model_files, tmp_path):
        out = tmp_path / "r.json"
        rc = main(["verdict", "--model", model_files["quadratic_birth"], "--out", str(out)])
        assert rc == 10
        doc = json.loads(out.read_text())
        assert doc["verdict"] == "Dishonest"
        assert doc["xi"]["lo"] == pytest.approx(0.2720290, abs=1e-6)

    def test_malformed_model_exit_one(self, model_files, capsys):
        assert main(["verdict", "--model", model_files["bad"]]) == 1
        assert "error:" in capsys.readouterr().err
        assert main(["verdict", "--model", model_files["notjson"]]) == 1

    def test_report_round_trips_bit_exactly(self, model_files, tmp_path):
        out = tmp_path / "r.json"
        main(["verdict", "--model", model_files["quadratic_birth"], "--out", str(out)])
        text = out.read_text()
        doc = json.loads(text)
        assert json.dumps(doc, indent=2, sort_keys=True) + "\n" == text
        again = json.loads(json.dumps(doc))
        assert again["xi"]["lo"] == doc["xi"]["lo"]
        assert again["xi"]["hi"] == doc["xi"]["hi"]


class TestTrajectoryCommand:
    def test_single_zero_row(self, model_files, tmp_path):
        out = tmp_path / "t.csv"
        assert main(["trajectory", "--model", model_files["two_state"], "--t-grid", "0", "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "t,mass_lo,mass_hi,abar,ahat,delta_lo,delta_hi"
        row = [float(x) for x in lines[1].split(",")]
        assert row == [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]

    def test_two_state_masses(self, model_files, tmp_path):
        out = tmp_path / "t.csv"
        main(["trajectory", "--model", model_files["two_state"], "--t-grid", "0:1:0.5", "--out", str(out)])
        lines = out.read_text().strip().split("\n")[1:]
        exact = {0.0: 1.0, 0.5: math.exp(-0.5) + math.exp(-0.5) - math.exp(-1.0), 1.0: EXP1 + EXP1 - EXP2}
        for line in lines:
            t, mass_lo, mass_hi, *_ = (float(x) for x in line.split(","))
            assert mass_lo == pytest.approx(exact[t], abs=1e-8)
            assert mass_hi == pytest.approx(exact[t], abs=1e-8)

    def test_quadratic_delta_negative_nonincreasing(self, model_files, tmp_path):
        out = tmp_path / "t.csv"
        main(
            [
                "trajectory",
                "--model",
                model_files["quadratic_birth"],
                "--t-grid",
                "0.25,0.5",
                "--out",
                str(out),
            ]
        )
        rows = [
            [float(x) for x in line.split(",")]
            for line in out.read_text().strip().split("\n")[1:]
        ]
        his = [r[6] for r in rows]
        los = [r[5] for r in rows]
        assert all(h < 0 for h in his)
        assert los[1] <= his[0]


class TestCompareCommand:
    def test_two_state_routes_agree(self, model_files, tmp_path):
        out = tmp_path / "c.json"
        assert main(
            ["compare", "--model", model_files["two_state"], "--t-grid", "0.5,1", "--out", str(out)]
        ) == 0
        doc = json.loads(out.read_text())
        assert doc["pass"] and doc["max_discrepancy"] <= 1e-8
        assert len(doc["rows"]) == 2

    def test_yule_both_routes_flat(self, model_files, tmp_path):
        out = tmp_path / "c.json"
        main(["compare", "--model", model_files["yule"], "--t-grid", "1", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["max_discrepancy"] == 0.0

    def test_zero_kernel_exact_agreement(self, model_files, tmp_path):
        out = tmp_path / "c.json"
        main(["compare", "--model", model_files["pure_loss"], "--t-grid", "0.5,1", "--out", str(out)])
        doc = json.loads(out.read_text())
        assert doc["pass"] and doc["max_discrepancy"] <= 1e-9


class TestSimulateCommand:
    def test_csv_shape_and_determinism(self, model_files, tmp_path):
        o1, o2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        args = [
            "simulate",
            "--model",
            model_files["two_state"],
            "--t-grid",
            "0.5,1",
            "--paths",
            "5000",
            "--seed",
            "3",
        ]
        assert main(args + ["--out", str(o1)]) == 0
        assert main(args + ["--out", str(o2)]) == 0
        assert o1.read_text() == o2.read_text()
        lines = o1.read_text().strip().split("\n")
        assert lines[0] == "t,survival,survival_ci,exploded,exploded_ci,killed,killed_ci"
        assert len(lines) == 3
