import json

import numpy as np
import pytest

from zeno_lab import harness
from zeno_lab.exceptions import ValidationError
from zeno_lab.harness import CSV_HEADER, ExperimentConfig, fit_rate, load_config, read_records, run_experiment

BASE = {
    "model": {"kind": "random", "dim": 8, "rank": 3, "spectral_radius": 2.0, "seed": 1},
    "functions": ["resolvent-1", "exp"],
    "t_grid": [0.5, 1.0],
    "n_list": [4, 16, 64],
    "metrics": ["norm", "strong", "bound", "time-averaged", "diagnostics", "graf-guekos"],
}


def config(tmp_path, **over):
    d = dict(BASE, output=str(tmp_path / "out"))
    d.update(over)
    return d


def test_fit_rate_examples():
    ns = [4, 8, 16, 32]
    r = fit_rate(ns, [2.0 / n for n in ns])
    assert abs(r.beta - 1) <= 1e-10 and abs(r.r_squared - 1) <= 1e-10
    assert abs(fit_rate(ns, [1 / np.sqrt(n) for n in ns]).beta - 0.5) <= 1e-10
    r = fit_rate(ns, [1e-15] * 4)
    assert not r.fitted and r.to_dict()["beta"] is None


@pytest.mark.parametrize(
    "over",
    [
        {"n_list": []},
        {"n_list": [4, 4]},
        {"n_list": [8, 4]},
        {"t_grid": [0.0]},
        {"metrics": []},
        {"metrics": ["speed"]},
        {"functions": []},
        {"quadrature_nodes": 32},
        {"colour": "red"},
    ],
)
def test_invalid_config_writes_nothing(tmp_path, over):
    with pytest.raises(ValidationError):
        run_experiment(config(tmp_path, **over))
    assert not (tmp_path / "out").exists()


def test_load_config_errors(tmp_path):
    with pytest.raises(ValidationError):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ValidationError):
        load_config(bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(BASE))
    cfg = load_config(good)
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg


def test_commuting_exact_case(tmp_path):
    cfg = config(
        tmp_path,
        model={"kind": "commuting", "dim": 6, "indices": [1, 4, 5], "seed": 2, "spectral_radius": 3.0},
        functions=["exp"],
        metrics=["norm"],
        n_list=[1, 2, 4, 8, 16],
    )
    records, summary = run_experiment(cfg)
    assert all(r.norm_error <= 1e-12 for r in records)
    assert all(not fit["fitted"] for fit in summary["rate_fits"])


def test_random_rate(tmp_path):
    cfg = config(
        tmp_path,
        model={"kind": "random", "dim": 16, "rank": 8, "spectral_radius": 4.0, "seed": 42},
        functions=["resolvent-1"],
        t_grid=[1.0],
        n_list=[4 * 2 ** k for k in range(11)],
        metrics=["norm"],
    )
    _, summary = run_experiment(cfg, write=False)
    (fit,) = summary["rate_fits"]
    assert fit["fitted"] and fit["beta"] >= 0.4 and 0 <= fit["r_squared"] <= 1


def test_outputs_and_roundtrip(tmp_path):
    records, summary = run_experiment(config(tmp_path))
    out = tmp_path / "out"
    lines = (out / "records.csv").read_text().splitlines()
    assert lines[0] == ",".join(CSV_HEADER)
    assert len(lines) == 1 + 2 * 2 * 3
    assert [r.to_dict() for r in read_records(out / "records.json")] == [r.to_dict() for r in records]
    s = json.loads((out / "summary.json").read_text())
    assert s["cells"] == 12 and s["bound"]["failed"] == 0
    assert len(s["conjecture_exploration"]) == 6
    keys = [(r.function_id, r.t, r.n) for r in records]
    assert keys == sorted(keys)


def test_unselected_metrics_are_empty(tmp_path):
    run_experiment(config(tmp_path, metrics=["norm"]))
    row = (tmp_path / "out" / "records.csv").read_text().splitlines()[1].split(",")
    cols = dict(zip(CSV_HEADER, row))
    assert cols["norm_error"] and not cols["strong_error_max"] and not cols["bound_lhs"] and not cols["pass"]


def test_incompatible_metric_noted_per_cell(tmp_path):
    cfg = config(
        tmp_path,
        model={"kind": "momentum-circle", "dim": 64},
        functions=["exp"],
        t_grid=[0.1],
        n_list=[4, 8],
        metrics=["norm", "counterexample"],
    )
    records, _ = run_experiment(cfg)
    assert len(records) == 2
    assert all(r.norm_error is None and r.notes for r in records)
    assert all("limit_residual" in r.diagnostics for r in records)


def test_thread_independence(tmp_path, monkeypatch):
    one = config(tmp_path, output=str(tmp_path / "a"))
    four = config(tmp_path, output=str(tmp_path / "b"))
    run_experiment(one, threads=1)
    monkeypatch.setenv(harness.THREADS_ENV, "4")
    assert harness.worker_count() == 4
    run_experiment(four)
    for name in ("records.csv", "records.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_worker_count_rejects_bad_env(monkeypatch):
    monkeypatch.setenv(harness.THREADS_ENV, "zero")
    with pytest.raises(ValidationError):
        harness.worker_count()
