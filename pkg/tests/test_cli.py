"""Command-line behavior: exit codes, report formats, config files."""

import json
import math
import re

import pytest

from svyglm.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


@pytest.fixture
def sim_csv(tmp_path, capsys):
    path = tmp_path / "data.csv"
    code, _, err = run(capsys, "simulate", "--seed", "11", "--strata", "3",
                       "--psus", "2", "--obs", "15", "--beta", "0.4,-0.3",
                       "--family", "poisson", "--out", str(path))
    assert code == 0, err
    return path


class TestFit:
    def test_saturated_json_report(self, tmp_path, capsys):
        data = tmp_path / "two.csv"
        data.write_text("y,x\n1,0\n3,1\n")
        code, out, _ = run(capsys, "fit", "--data", str(data),
                           "--model", "y ~ 1 + x", "--family", "normal",
                           "--link", "identity", "--out-format", "json")
        assert code == 0
        report = json.loads(out)
        assert report["schema_version"] == 1
        assert report["fit"]["converged"] is True
        betas = [c["est"] for c in report["inference"]["coefficients"]]
        assert betas == pytest.approx([1.0, 2.0], abs=1e-10)

    def test_text_and_json_agree(self, sim_csv, capsys):
        common = ["fit", "--data", str(sim_csv), "--model", "y ~ 1 + x1",
                  "--family", "poisson", "--weight", "weight",
                  "--strata", "stratum", "--psu", "psu", "--fpc", "fpc",
                  "--test", "x1"]
        code_t, out_t, _ = run(capsys, *common, "--out-format", "text")
        code_j, out_j, _ = run(capsys, *common, "--out-format", "json")
        assert code_t == code_j == 0
        report = json.loads(out_j)
        for coef in report["inference"]["coefficients"]:
            line = next(l for l in out_t.splitlines()
                        if l.strip().startswith(coef["label"]))
            shown = [float(v) for v in re.findall(r"-?\d+\.?\d*(?:e-?\d+)?", line)]
            for key in ("est", "se", "p"):
                assert any(math.isclose(coef[key], v, rel_tol=1e-4, abs_tol=1e-6)
                           for v in shown), (coef, line)
        wt = report["inference"]["wald_tests"]
        assert len(wt) == 1 and 0.0 <= wt[0]["p"] <= 1.0

    def test_csv_output_round_trips_floats(self, sim_csv, capsys):
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--out-format", "csv")
        assert code == 0
        lines = out.strip().splitlines()
        header = lines[0].split(",")
        assert header[:3] == ["label", "est", "se"]
        assert "risk_ratio" in header  # log link adds the exp(beta) column
        assert len(lines) == 3

    def test_risk_ratio_matches_exp_beta(self, sim_csv, capsys):
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--out-format", "json")
        assert code == 0
        for coef in json.loads(out)["inference"]["coefficients"]:
            assert coef["risk_ratio"] == pytest.approx(math.exp(coef["est"]))

    def test_paper_df_mode(self, sim_csv, capsys):
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--df-mode", "paper",
                           "--test", "x1", "--out-format", "json")
        assert code == 0
        report = json.loads(out)
        sum_w = report["analysis"]["sum_weights"]
        assert report["inference"]["wald_tests"][0]["ddf"] == pytest.approx(
            sum_w - 1.0)

    def test_config_file_supplies_flags(self, sim_csv, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(
            f"data={sim_csv}\n"
            "model=y ~ 1 + x1\n"
            "family=poisson\n"
            "weight=weight\n"
            "strata=stratum   # comment\n"
            "psu=psu\n"
            "out-format=json\n"
            "test=x1\n")
        code, out, _ = run(capsys, "fit", "--config", str(cfg))
        assert code == 0
        report = json.loads(out)
        assert report["input"]["family"] == "poisson"
        assert len(report["inference"]["wald_tests"]) == 1

    def test_flag_overrides_config(self, sim_csv, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(f"data={sim_csv}\nmodel=y ~ 1\nfamily=poisson\n"
                       "out-format=text\n")
        code, out, _ = run(capsys, "fit", "--config", str(cfg),
                           "--out-format", "json")
        assert code == 0
        json.loads(out)

    def test_numeric_df_mode_and_level(self, sim_csv, capsys):
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--df-mode", "7", "--level", "0.9",
                           "--test", "x1", "--out-format", "json")
        assert code == 0
        report = json.loads(out)
        assert report["inference"]["df_mode"] == "fixed(7)"
        assert report["inference"]["level"] == 0.9
        assert report["inference"]["wald_tests"][0]["ddf"] == 7.0

    def test_forced_categorical_and_centering(self, tmp_path, capsys):
        data = tmp_path / "coded.csv"
        data.write_text("y,grp,age\n1.0,1,20\n2.0,2,40\n1.5,1,30\n2.5,2,50\n")
        code, out, _ = run(capsys, "fit", "--data", str(data),
                           "--model", "y ~ 1 + C(grp) + center(age)",
                           "--categorical", "grp",
                           "--centering", "unweighted",
                           "--out-format", "json")
        assert code == 0
        labels = [c["label"] for c in
                  json.loads(out)["inference"]["coefficients"]]
        assert labels == ["(Intercept)", "grp=2", "center(age)"]

    def test_dispersion_rule_override(self, sim_csv, capsys):
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--dispersion", "moments",
                           "--out-format", "json")
        assert code == 0
        report = json.loads(out)
        assert report["input"]["dispersion_rule"] == "moments"
        assert report["fit"]["dispersion"] != 1.0

    def test_test_file_contrast(self, sim_csv, tmp_path, capsys):
        cpath = tmp_path / "contrast.csv"
        cpath.write_text("0,1\n")
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--test-file", str(cpath),
                           "--test", "x1", "--out-format", "json")
        assert code == 0
        tests = json.loads(out)["inference"]["wald_tests"]
        assert len(tests) == 2
        assert tests[0]["f"] == pytest.approx(tests[1]["f"], rel=1e-12)


class TestExitCodes:
    def test_malformed_csv_is_input_error(self, tmp_path, capsys):
        bad = tmp_path / "bad.csv"
        bad.write_text("y,x\n1,2\n3\n")
        code, _, err = run(capsys, "fit", "--data", str(bad), "--model", "y ~ 1")
        assert code == 1
        assert "line 3" in err

    def test_missing_file_is_input_error(self, tmp_path, capsys):
        code, _, err = run(capsys, "fit", "--data", str(tmp_path / "none.csv"),
                           "--model", "y ~ 1")
        assert code == 1

    def test_unknown_column_is_input_error(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("y\n1\n2\n")
        code, _, err = run(capsys, "fit", "--data", str(data),
                           "--model", "y ~ 1 + zzz")
        assert code == 1
        assert "zzz" in err

    def test_singleton_stratum_is_input_error(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("y,s,c\n1,a,p0\n2,a,p0\n3,a,p1\n4,b,q0\n")
        code, _, err = run(capsys, "fit", "--data", str(data),
                           "--model", "y ~ 1", "--strata", "s", "--psu", "c")
        assert code == 1
        assert "singleton" in err.lower() or "single PSU" in err

    def test_single_psu_simulation_triggers_singleton(self, tmp_path, capsys):
        data = tmp_path / "one.csv"
        code, _, _ = run(capsys, "simulate", "--seed", "3", "--strata", "1",
                         "--psus", "1", "--obs", "30", "--beta", "0.2",
                         "--out", str(data))
        assert code == 0
        code, _, err = run(capsys, "fit", "--data", str(data),
                           "--model", "y ~ 1", "--strata", "stratum",
                           "--psu", "psu")
        assert code == 1

    def test_not_converged_is_exit_2(self, sim_csv, capsys):
        code, out, _ = run(capsys, "fit", "--data", str(sim_csv),
                           "--model", "y ~ 1 + x1", "--family", "poisson",
                           "--weight", "weight", "--strata", "stratum",
                           "--psu", "psu", "--max-iter", "1",
                           "--out-format", "json")
        assert code == 2
        assert json.loads(out)["fit"]["converged"] is False


class TestSimulateCommand:
    def test_deterministic_bytes(self, tmp_path, capsys):
        args = ("simulate", "--seed", "5", "--beta", "0.1,0.2",
                "--family", "binomial")
        _, out1, _ = run(capsys, *args)
        _, out2, _ = run(capsys, *args)
        assert out1 == out2

    def test_truth_side_file(self, tmp_path, capsys):
        out_path = tmp_path / "sim.csv"
        code, _, _ = run(capsys, "simulate", "--seed", "9", "--beta", "1.0,0.5",
                         "--out", str(out_path))
        assert code == 0
        truth = json.loads((tmp_path / "sim.csv.truth.json").read_text())
        assert truth["beta"] == {"(Intercept)": 1.0, "x1": 0.5}

    def test_categorical_spec(self, tmp_path, capsys):
        code, out, _ = run(capsys, "simulate", "--seed", "2",
                           "--beta", "0.5,0.1,-0.2", "--obs", "40",
                           "--categorical", "g=a,b,c")
        assert code == 0
        assert out.splitlines()[0] == "y,g,weight,stratum,psu,fpc"

    def test_bad_generator_parameters(self, capsys):
        code, _, err = run(capsys, "simulate", "--seed", "2",
                           "--beta", "0.5,0.1", "--fpc", "2.0")
        assert code == 1
