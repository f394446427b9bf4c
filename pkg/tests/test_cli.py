import csv
import dataclasses
import re

import numpy as np
import pytest

import crashskew.cli as cli
from crashskew.cli import main, parse_term, read_config
from crashskew.inference import Intercept, Interaction, LaggedDep, Var
from crashskew.synthetic import FILES, bundled_path

from conftest import write_csv

TABLE_FILES = ["table2_descriptive.txt", "table3_correlation.txt", "table4_cases.txt", "table5_epu.txt",
               "table6_cases_epu.txt", "table7_interaction.txt", "table8_emu.txt", "table9_emv_id.txt"]


def bundled_args(out_dir, *extra):
    args = ["pipeline", "--out-dir", str(out_dir)]
    for f in FILES:
        args += [f"--{f[:-4].replace('_', '-')}", str(bundled_path(f))]
    return args + list(extra)


@pytest.fixture(scope="module")
def sim_prices(tmp_path_factory):
    path = tmp_path_factory.mktemp("sim") / "sim.csv"
    assert main(["simulate", "--n", "800", "--seed", "11", "--out", str(path)]) == 0
    return path


@pytest.fixture(scope="module")
def bundle(tmp_path_factory):
    out = tmp_path_factory.mktemp("bundle")
    assert main(bundled_args(out)) == 0
    return out


# -- fit ----------------------------------------------------------------------

def test_fit_report_and_determinism(sim_prices, tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["fit", "--prices", str(sim_prices), "--value-col", "price", "--out-dir", str(a)]) == 0
    assert main(["fit", "--prices", str(sim_prices), "--value-col", "price", "--out-dir", str(b)]) == 0
    text = (a / "fit_report.txt").read_text()
    assert text == (b / "fit_report.txt").read_text()
    assert (a / "fit_report.csv").read_bytes() == (b / "fit_report.csv").read_bytes()
    for name in ("mu", "alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2"):
        assert re.search(rf"^{name}\s+-?\d+\.\d{{4}}", text, re.M)
    assert re.search(r"^Converged\s+true\s+true", text, re.M)
    assert (a / "skew.csv").exists()
    rows = list(csv.DictReader((a / "fit_report.csv").open()))
    ll = {r["model"]: float(r["value"]) for r in rows if r["param"] == "loglik"}
    assert ll["GARCH-S"] >= ll["GARCH(1,1)"] - 1e-6
    assert "GARCH-S" in capsys.readouterr().out


def test_fit_nonconvergence_exit_2(sim_prices, tmp_path, monkeypatch):
    real = cli.fit_garchs
    monkeypatch.setattr(cli, "fit_garchs",
                        lambda *a, **k: dataclasses.replace(real(*a, **k), converged=False))
    assert main(["fit", "--prices", str(sim_prices), "--value-col", "price", "--out-dir", str(tmp_path)]) == 2
    assert re.search(r"^Converged\s+false", (tmp_path / "fit_report.txt").read_text(), re.M)


def test_fit_missing_file(tmp_path, capsys):
    assert main(["fit", "--prices", str(tmp_path / "none.csv"), "--out-dir", str(tmp_path)]) == 1
    assert "error:" in capsys.readouterr().err


def test_fit_bad_csv(tmp_path, capsys):
    p = write_csv(tmp_path / "p.csv", ["date", "value"], [("2020-01-02", 1), ("2020-01-02", 2)])
    assert main(["fit", "--prices", str(p), "--out-dir", str(tmp_path)]) == 1
    assert "duplicate date" in capsys.readouterr().err


# -- small commands -----------------------------------------------------------

def test_describe_constant(tmp_path, capsys):
    p = write_csv(tmp_path / "c.csv", ["date", "value"],
                  [("2020-01-01", 1), ("2020-01-02", 1), ("2020-01-03", 1)])
    assert main(["describe", "--input", str(p)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("mean 1.0000")
    assert "std 0.0000" in out


def test_adf_random_walk(tmp_path, capsys):
    y = np.cumsum(np.random.default_rng(8).standard_normal(1000))
    dates = np.datetime64("2015-01-01") + np.arange(1000)
    p = write_csv(tmp_path / "rw.csv", ["date", "value"], [(d, repr(float(v))) for d, v in zip(dates, y)])
    assert main(["adf", "--input", str(p)]) == 0
    out = capsys.readouterr().out
    stat = float(re.search(r"ADF (-?\d+\.\d+)", out).group(1))
    crit5 = float(re.search(r"5% (-?\d+\.\d+)", out).group(1))
    assert stat > crit5
    assert "fail to reject" in out


def _wide(tmp_path, n=120):
    g = np.random.default_rng(9)
    dates = np.datetime64("2019-09-01") + np.arange(n)
    cols = {"Skew": g.standard_normal(n), "rCases": g.standard_normal(n), "rEPU": g.standard_normal(n)}
    rows = [(d, *(repr(float(cols[k][i])) for k in cols)) for i, d in enumerate(dates)]
    return write_csv(tmp_path / "wide.csv", ["date", *cols], rows)


def test_regress_missing_column(tmp_path, capsys):
    spec = tmp_path / "spec.txt"
    spec.write_text("dependent = Skew\nterms = Intercept, Skew(-1), rVIX(-1)\n")
    assert main(["regress", "--data", str(_wide(tmp_path)), "--spec", str(spec)]) == 1
    assert "'rVIX'" in capsys.readouterr().err


def test_regress_eq3_with_search(tmp_path, capsys):
    spec = tmp_path / "spec.txt"
    spec.write_text("# interaction model\ndependent: Skew\nterms = Intercept, D_epid, Skew(-1)\n"
                    "search_p = rCases\nsearch_q = rEPU\ninteract = D_epid\n")
    assert main(["regress", "--data", str(_wide(tmp_path)), "--spec", str(spec), "--max-p", "2",
                 "--max-q", "1", "--criterion", "sc", "--cutoff", "2019-11-01", "--out-dir", str(tmp_path / "o")]) == 0
    out = capsys.readouterr().out
    assert "D_epid* rEPU_(t)" in out and "Lag lengths chosen by SC" in out
    assert (tmp_path / "o" / "regression.csv").exists()


def test_corr_command(tmp_path, capsys):
    assert main(["corr", "--data", str(_wide(tmp_path)), "--cutoff", "2019-11-01"]) == 0
    out = capsys.readouterr().out
    assert "Panel C From 2019-11-01" in out
    assert re.search(r"^Skew\s+1\.0000", out, re.M)


def test_simulate_stdout(capsys):
    assert main(["simulate", "--n", "5", "--seed", "1", "--params", "0,0.1,0.1,0.5,0,0.1,0.2"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "date,price,r,h,s"
    assert len(lines) == 7 and lines[1].endswith(",,,")


def test_simulate_bad_params(capsys):
    assert main(["simulate", "--params", "0,1"]) == 1
    assert main(["simulate", "--params", "0,0.1,0.6,0.6,0,0,0"]) == 1


def test_simulate_bundle_matches_packaged_data(tmp_path):
    assert main(["simulate", "--bundle", "--seed", "2020", "--out-dir", str(tmp_path)]) == 0
    for f in FILES:
        assert (tmp_path / f).read_bytes() == bundled_path(f).read_bytes()


def test_parse_term():
    assert parse_term("Intercept", "Skew") == Intercept()
    assert parse_term("Skew(-1)", "Skew") == LaggedDep(1)
    assert parse_term("rCases(t-2)", "Skew") == Var("rCases", 2)
    assert parse_term("D_epid*rEPU(-1)", "Skew") == Interaction("D_epid", "rEPU", 1)
    with pytest.raises(ValueError):
        parse_term("a+b", "Skew")


def test_read_config_errors(tmp_path):
    p = tmp_path / "c.txt"
    p.write_text("just words\n")
    with pytest.raises(ValueError, match="c.txt:1"):
        read_config(p)


# -- pipeline -----------------------------------------------------------------

def test_pipeline_writes_eight_tables(bundle):
    tables = sorted(p.name for p in bundle.glob("table*.txt"))
    assert tables == sorted(TABLE_FILES)
    for name in TABLE_FILES:
        assert (bundle / name.replace(".txt", ".csv")).exists()
    t2 = (bundle / "table2_descriptive.txt").read_text()
    assert "The total observations are 917." in t2
    t4 = (bundle / "table4_cases.txt").read_text()
    assert re.search(r"-?\d+\.\d{4}(\*{1,3})? \(-?\d+\.\d{4}\)", t4)
    assert "The t-statistics are presented in the brackets" in t4


def test_pipeline_emu_robustness(bundle):
    text = (bundle / "table8_emu.txt").read_text()
    assert "Robustness results from EMU" in text
    assert "rEMU_(t)" in text and "D_epid* rEMU_(t)" in text
    heads = re.search(r"^Variables\s+(.*)$", text, re.M).group(1).split()
    assert heads == ["(1)", "(2)", "(3)", "(4)"]


def test_pipeline_cutoff_beyond_sample(tmp_path):
    assert main(bundled_args(tmp_path, "--cutoff", "2030-01-01")) == 0
    t3 = (tmp_path / "table3_correlation.txt").read_text()
    panel_c = t3.split("Panel C")[1]
    assert "N/A" in panel_c
    assert "The observations for Panel C are 0" in t3
    assert "N/A" in (tmp_path / "table7_interaction.txt").read_text()


def test_pipeline_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    lines = [f"{f[:-4]} = {bundled_path(f)}" for f in FILES]
    cfg.write_text("\n".join(lines + ["max-p = 2", "max_q = 1", "criterion = aic",
                                      f"out_dir = {tmp_path / 'ignored'}"]) + "\n")
    out = tmp_path / "out"
    assert main(["pipeline", "--config", str(cfg), "--out-dir", str(out), "--criterion", "sc"]) == 0
    assert not (tmp_path / "ignored").exists()
    t7 = (out / "table7_interaction.txt").read_text()
    assert "Lag lengths follow Table 6 (SC then AIC)" in t7


def test_pipeline_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert main(["pipeline", "--config", str(cfg)]) == 1
    assert "unknown config keys: colour" in capsys.readouterr().err


def test_pipeline_missing_input(tmp_path, capsys):
    assert main(["pipeline", "--prices", str(bundled_path("prices.csv")), "--out-dir", str(tmp_path)]) == 1
    assert "missing input" in capsys.readouterr().err


def test_pipeline_bad_max_p(tmp_path):
    assert main(bundled_args(tmp_path, "--max-p", "0")) == 1
