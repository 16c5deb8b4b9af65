import json
from datetime import date

import pytest

from bidcraft import cli
from bidcraft.config import RunConfig, parse_strategy
from bidcraft.backtest import FixedBid, Lagged, ModelStrategy, Window
from bidcraft.data import write_csv
from bidcraft.errors import SpecError
from bidcraft.models import ModelKind
from bidcraft.synthetic import periodic_market


@pytest.fixture
def prices(tmp_path):
    path = tmp_path / "prices.csv"
    write_csv(periodic_market(date(2023, 1, 1), 120, seed=0), path)
    return path


def run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def test_parse_strategy():
    cfg = RunConfig()
    assert parse_strategy("fixed:week", cfg) == (FixedBid(Window.WEEK), False)
    assert parse_strategy("lagged:42", cfg) == (Lagged(42), False)
    strat, tuned = parse_strategy("model:xgb:tuned", cfg)
    assert isinstance(strat, ModelStrategy) and strat.spec.kind is ModelKind.GB_SECOND_ORDER and tuned
    strat, _ = parse_strategy({"model": "svr", "hyperparameters": {"C": 10}, "name": "svr_c10"}, cfg)
    assert strat.id == "svr_c10" and strat.spec.hyperparameters == {"C": 10}
    for bad in ("fixed:year", "lagged:7", "model:prophet", "model:svr:best"):
        with pytest.raises(SpecError):
            parse_strategy(bad, cfg)


def test_config_round_trip_and_unknown_keys(tmp_path):
    cfg = RunConfig(data="x.csv", retrain="weekly", seed=4)
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert RunConfig.load(path) == cfg
    path.write_text(json.dumps({"data": "x.csv", "colour": "red"}))
    with pytest.raises(SpecError):
        RunConfig.load(path)
    assert cfg.override(seed=None, k=3).k == 3 and cfg.override(seed=None).seed == 4


def test_help_lists_flags(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["backtest", "--help"])
    assert exc.value.code == 0
    out = capsys.readouterr().out
    for flag in ("--data", "--market", "--train-end", "--test-end", "--strategy", "--retrain", "--scoring", "--k",
                 "--seed", "--offset", "--out", "--config"):
        assert flag in out


def test_unknown_flag_rejected(capsys):
    with pytest.raises(SystemExit) as exc:
        cli.main(["stats", "--colour", "red"])
    assert exc.value.code == 2


def test_ingest_round_trip(tmp_path, capsys, prices):
    out = tmp_path / "canon.csv"
    code, stdout, _ = run(capsys, "ingest", "--raw", prices, "--out", out)
    assert code == 0 and "0 gaps" in stdout
    assert out.read_bytes() == prices.read_bytes()


def test_ingest_conflict_exit_code(tmp_path, capsys):
    raw = tmp_path / "raw.csv"
    raw.write_text("date,block,market,capacity_price_eur_mw\n2023-01-01,0,AFRR_POS,1\n2023-01-01,0,AFRR_POS,2\n")
    code, _, err = run(capsys, "ingest", "--raw", raw, "--out", tmp_path / "o.csv")
    assert code == 2
    payload = json.loads(err.strip())
    assert payload["error"] == "ConflictError" and "2023-01-01" in payload["message"]
    assert not (tmp_path / "o.csv").exists()


def test_stats_and_acf(tmp_path, capsys, prices):
    code, out, _ = run(capsys, "stats", "--data", prices, "--train-end", "2023-03-31", "--test-end", "2023-04-30",
                       "--out", tmp_path)
    assert code == 0 and "train" in out and "test" in out
    assert (tmp_path / "stats.csv").read_text().count("\n") == 1 + 2 * 7
    code, out, _ = run(capsys, "acf", "--data", prices, "--out", tmp_path, "--split", "all")
    assert code == 0
    lines = (tmp_path / "acf.csv").read_text().splitlines()
    assert len(lines) == 52 and lines[1] == "AFRR_POS,0,1.0"


def test_acf_constant_series(tmp_path, capsys):
    path = tmp_path / "flat.csv"
    write_csv(periodic_market(date(2023, 1, 1), 30, amplitude=0.0, noise=0.0), path)
    code, _, err = run(capsys, "acf", "--data", path, "--split", "all")
    assert code == 2 and json.loads(err)["error"] == "DegenerateSeries"


def test_missing_data_file(capsys, tmp_path):
    code, _, err = run(capsys, "stats", "--data", tmp_path / "missing.csv")
    assert code == 2 and "error" in json.loads(err)


def test_tune_writes_all_configs(tmp_path, capsys, prices):
    code, _, _ = run(capsys, "tune", "--data", prices, "--train-end", "2023-03-31", "--test-end", "2023-04-30",
                     "--strategy", "model:svr", "--out", tmp_path)
    assert code == 0
    doc = json.loads((tmp_path / "tune" / "AFRR_POS__svr.json").read_text())
    assert len(doc["configs"]) == 9 and doc["k"] == 5


def test_tune_without_model_is_usage_error(tmp_path, capsys, prices):
    code, _, _ = run(capsys, "tune", "--data", prices, "--strategy", "fixed:day", "--out", tmp_path)
    assert code == 2


def test_backtest_and_report(tmp_path, capsys, prices):
    argv = ["backtest", "--data", prices, "--train-end", "2023-03-31", "--test-end", "2023-04-30", "--out", tmp_path]
    for s in ("fixed:day", "fixed:week", "fixed:month", "lagged:6", "lagged:42", "model:ridge", "model:knn",
              "model:cart"):
        argv += ["--strategy", s]
    code, out, _ = run(capsys, *argv)
    assert code == 0 and "ridge" in out
    summary = json.loads((tmp_path / "backtest" / "AFRR_POS__ridge.json").read_text())
    assert summary["n_days"] == 30 and summary["config"]["retrain"] == "fixed"
    code, _, _ = run(capsys, "report", "--out", tmp_path)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    row = report["rows"][0]
    for key in ("best_model", "mae", "mse", "mape_pct", "revenue_test", "best_baseline", "diff_abs", "diff_pct",
                "revenue_yearly", "diff_yearly"):
        assert row[key] is not None, key
    assert "AFRR_POS" in report["correlations"]
    assert not list(tmp_path.rglob(".*"))  # no temp files left behind


def test_sweep_offset(tmp_path, capsys, prices):
    code, _, _ = run(capsys, "sweep-offset", "--data", prices, "--train-end", "2023-03-31", "--test-end",
                     "2023-04-30", "--strategy", "model:ridge", "--delta-min", "-2", "--delta-max", "2",
                     "--delta-step", "0.5", "--out", tmp_path)
    assert code == 0
    lines = (tmp_path / "sweep" / "AFRR_POS__ridge.csv").read_text().splitlines()
    assert lines[0] == "delta,revenue" and len(lines) == 10
    info = json.loads((tmp_path / "sweep" / "AFRR_POS__ridge.json").read_text())
    assert info["revenue_ex_post"] >= max(float(l.split(",")[1]) for l in lines[1:])


def test_report_without_runs(tmp_path, capsys):
    code, _, err = run(capsys, "report", "--out", tmp_path)
    assert code == 2 and json.loads(err)["error"] == "DataError"
