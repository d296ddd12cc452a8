import csv
import json

import pytest

from horolab import cli
from horolab.exceptions import ConfigError, ConvergenceError
from horolab.experiments import REGISTRY, Record

CHEAP = """
experiment = "harmonicity-scan"
seed = 3

[model]
kind = "hyperbolic"
n = 2

[params]
sample_size = 4
"""


def _write(tmp_path, text, name="cfg.toml"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def _cfg(expect="pass"):
    return {"experiment": "harmonicity-scan", "seed": 1, "expect": expect,
            "model": {"kind": "hyperbolic", "n": 2, "profile": None}, "params": {"sample_size": 4}}


def test_list(capsys):
    assert cli.main(["list"]) == 0
    out = capsys.readouterr().out
    for name in REGISTRY:
        assert name in out


def test_run_cheap_config(tmp_path, capsys):
    out = tmp_path / "out"
    assert cli.main(["run", "--config", _write(tmp_path, CHEAP), "--out", str(out)]) == 0
    assert "PASS harmonicity-scan trU_max_deviation" in capsys.readouterr().out
    with open(out / "results.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == cli.CSV_COLUMNS
    assert all(r["pass"] == "true" for r in rows)
    summary = json.loads((out / "summary.json").read_text())
    assert summary["fail_count"] == 0 and summary["seed"] == 3
    assert (out / "details.csv").exists()


def test_run_is_byte_deterministic(tmp_path):
    cfg = _write(tmp_path, CHEAP)
    for d in ("a", "b"):
        assert cli.main(["run", "--config", cfg, "--out", str(tmp_path / d)]) == 0
    for f in ("results.csv", "summary.json", "details.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_seed_override_changes_hash(tmp_path):
    cfg = _write(tmp_path, CHEAP)
    a = cli.load_config(cfg)
    b = cli.load_config(cfg, seed=4)
    assert b["seed"] == 4
    assert cli.config_hash(a) != cli.config_hash(b)


@pytest.mark.parametrize("text", [
    CHEAP + "bogus = 1\n",
    CHEAP.replace("[model]", "[model]\ncolour = 'red'"),
    CHEAP.replace("sample_size = 4", "sample_count = 4"),
    CHEAP.replace("sample_size = 4", "sample_size = 'many'"),
    CHEAP.replace("seed = 3\n", ""),
    CHEAP.replace("harmonicity-scan", "no-such-experiment"),
    CHEAP.replace('kind = "hyperbolic"', 'kind = "spherical"'),
    CHEAP.replace("seed = 3", "seed = -1"),
    CHEAP + "expect = 'maybe'\n",
    "experiment = [",
])
def test_config_errors_exit_2(tmp_path, text, capsys):
    assert cli.main(["run", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2
    assert "config error" in capsys.readouterr().err


def test_missing_seed_raises_config_error():
    with pytest.raises(ConfigError):
        cli.validate_config({"experiment": "harmonicity-scan", "model": {"kind": "hyperbolic"}})
    # experiments without sampling run without a seed
    assert cli.validate_config({"experiment": "eigen-means", "model": {"kind": "hyperbolic"}})["seed"] is None


def test_model_mismatch_is_config_error(tmp_path):
    text = CHEAP.replace("harmonicity-scan", "dirichlet").replace("n = 2", "n = 3")
    text = text.replace("[params]\nsample_size = 4\n", "")
    assert cli.main(["run", "--config", _write(tmp_path, text), "--out", str(tmp_path / "o")]) == 2


def test_bad_arguments_exit_2():
    assert cli.main(["run", "--config"]) == 2
    assert cli.main(["frobnicate"]) == 2


def test_numerical_failure_exit_3(tmp_path, monkeypatch, capsys):
    def boom(M, P, seed):
        raise ConvergenceError("integrator stalled")
    monkeypatch.setattr(REGISTRY["harmonicity-scan"], "func", boom)
    assert cli.main(["run", "--config", _write(tmp_path, CHEAP), "--out", str(tmp_path / "o")]) == 3
    assert "integrator stalled" in capsys.readouterr().err


def test_emit_report_counts_failures(tmp_path):
    recs = [Record("x", "a", 1e-9, 1e-6), Record("x", "b", 2.0, 1.0), Record("x", "c", 0.0, 0.0)]
    assert cli.emit_report(recs, _cfg(), tmp_path) == 1
    s = json.loads((tmp_path / "summary.json").read_text())
    assert (s["pass_count"], s["fail_count"], s["mismatch_count"]) == (2, 1, 1)
    assert s["worst_residual_per_metric"] == {"a": 1e-9, "b": 2.0, "c": 0.0}


def test_emit_report_rejects_empty(tmp_path):
    with pytest.raises(Exception, match="no records"):
        cli.emit_report([], _cfg(), tmp_path)


def test_expected_failure_semantics(tmp_path):
    # in a negative-control run only control metrics are expected to fail
    fail_ctrl = Record("x", "ctrl", 2.0, 1.0, control=True)
    ok_plain = Record("x", "plain", 0.0, 1.0)
    assert cli.emit_report([fail_ctrl, ok_plain], _cfg("fail"), tmp_path) == 0
    assert cli.emit_report([fail_ctrl, ok_plain], _cfg("pass"), tmp_path) == 1
    assert cli.emit_report([Record("x", "ctrl", 0.0, 1.0, control=True)], _cfg("fail"), tmp_path) == 1


def test_csv_values_round_trip_exactly(tmp_path):
    vals = [0.1, 1 / 3, 2.0 ** -1074, 1.7976931348623157e308, 123456.789e-20]
    recs = [Record("x", f"m{i}", v, 1.0) for i, v in enumerate(vals)]
    cli.emit_report(recs, _cfg(), tmp_path)
    with open(tmp_path / "results.csv") as fh:
        got = {r["metric"]: float(r["value"]) for r in csv.DictReader(fh)}
    assert [got[f"m{i}"] for i in range(len(vals))] == vals


def test_params_string_is_sorted():
    assert cli.params_string({"b": 0.1, "a": [1.0, 2.0], "c": True}) == "a=[1,2];b=0.10000000000000001;c=true"
