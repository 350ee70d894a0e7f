import json
import math

import pytest

from sqmean.core import Query, exact_moments
from sqmean.harness import (
    CSV_FIELDS,
    ConfigError,
    ExperimentConfig,
    ResultRow,
    compare_naive,
    emit_results,
    generate_coordinates,
    generate_distribution,
    rows_from_csv,
    rows_from_json,
    rows_to_csv,
    run_experiment,
    trial_seed,
)
from sqmean.harness.cli import main
from sqmean.oracles import POLICIES
from sqmean.verification import heavy_tail_config


def moments(dist):
    return exact_moments(dist, Query.identity(dist))


def test_generator_examples():
    d = generate_distribution({"kind": "two-point", "lo": 0, "hi": 1, "p": 0.5})
    assert d.support.tolist() == [0, 1] and d.weights.tolist() == [0.5, 0.5]
    d = generate_distribution({"kind": "point-mass", "value": 7})
    assert d.support.tolist() == [7] and d.weights.tolist() == [1.0]
    d = generate_distribution({"kind": "uniform-grid", "lo": 0, "hi": 1, "step": 0.25})
    assert len(d) == 5


def test_pareto_mean_close_to_closed_form():
    d = generate_distribution({"kind": "discretized-pareto", "alpha": 2.5, "xmin": 1, "step": 0.01, "cap": 1e4})
    assert moments(d).mean == pytest.approx(2.5 / 1.5, rel=0.01)


@pytest.mark.parametrize("spec", [
    {"kind": "discretized-pareto", "alpha": 2.0, "xmin": 1, "step": 0.1, "cap": 10},
    {"kind": "uniform-grid", "lo": 0, "hi": 1, "step": 0},
    {"kind": "discretized-gaussian", "std": 1, "step": 0.1, "cap": -1},
    {"kind": "mystery"},
])
def test_generator_rejects(spec):
    with pytest.raises(ValueError):
        generate_distribution(spec)


def test_generator_file(tmp_path):
    path = tmp_path / "d.txt"
    path.write_text("# v w\n0 1\n10 3\n")
    d = generate_distribution({"kind": "empirical-file", "path": str(path)})
    assert d.weights.tolist() == [0.25, 0.75]
    with pytest.raises(OSError):
        generate_distribution({"kind": "empirical-file", "path": str(tmp_path / "missing.txt")})


@pytest.mark.parametrize("spec, bound", [
    ({"kind": "discretized-gaussian", "mean": 1, "std": 2, "step": 0.05, "cap": 20}, 1 + 4),
    ({"kind": "discretized-lognormal", "mu": 0, "sigma": 1, "step": 0.01, "cap": 500}, math.exp(2)),
    ({"kind": "discretized-pareto", "alpha": 3, "xmin": 1, "step": 0.01, "cap": 1000}, 3.0),
])
def test_generator_second_moment_sanity(spec, bound):
    d = generate_distribution(spec)
    step = spec["step"]
    assert moments(d).second_moment <= bound * 1.01 + step


def test_product_coordinates():
    coords = generate_coordinates({
        "kind": "product", "d": 3, "means": [0, 1, 2],
        "coordinate": {"kind": "discretized-gaussian", "std": 0.1, "step": 0.01, "cap": 0.5},
    })
    assert [round(moments(c).mean, 9) for c in coords] == [0, 1, 2]


def lognormal_config(**overrides):
    config = {
        "distribution": {"kind": "discretized-lognormal", "mu": 0, "sigma": 1, "step": 0.05, "cap": 60},
        "estimator": {"name": "signed_mean", "n": 256, "zeta": 0.01},
        "oracle": {"model": "vstat", "policy": "adversarial-up"},
        "trials": 3,
        "seed": 7,
    }
    config.update(overrides)
    return ExperimentConfig.from_dict(config)


def test_honest_trials_identical():
    rows = run_experiment(lognormal_config(oracle={"model": "vstat", "policy": "honest-exact"}))
    assert len(rows) == 3 and len({r.realized_error for r in rows}) == 1
    assert all(r.bits == 0 and r.wall_time_ms == 0 for r in rows)


def test_signed_lognormal_fifty_trials():
    rows = run_experiment(lognormal_config(trials=50))
    assert all(r.realized_error <= r.theoretical_bound for r in rows)


def test_precondition_checked_before_oracles():
    config = lognormal_config(estimator={"name": "signed_mean", "n": 256, "zeta": 0.01, "B": 0.1})
    with pytest.raises(ConfigError):
        run_experiment(config)
    with pytest.raises(ConfigError):
        run_experiment(lognormal_config(estimator={"name": "nope"}))
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"distribution": {}, "estimator": {}, "colour": 1})


def test_trial_seed_mixing():
    assert trial_seed(1, 0, 0) == trial_seed(1, 0, 0)
    assert len({trial_seed(1, c, t) for c in range(5) for t in range(5)}) == 25


def test_comm_sim_rows_report_bits():
    config = lognormal_config(oracle={"model": "comm-sim", "q_total": 40, "delta": 0.1},
                              estimator={"name": "nonneg_mean", "n": 64, "zeta": 0.1}, trials=1)
    row = run_experiment(config)[0]
    assert row.policy == "comm-sim" and row.bits > 0


def test_sweep_grid_rows():
    config = lognormal_config(sweep={"policy": list(POLICIES), "n": [64, 256]}, trials=2)
    rows = run_experiment(config)
    assert len(rows) == 16
    assert {r.n for r in rows} == {64, 256}


def test_compare_heavy_tail():
    out = compare_naive(ExperimentConfig.from_dict(heavy_tail_config()))
    assert out["naive_error"] == pytest.approx(50)
    assert out["estimator_error"] <= 0.1
    assert out["ratio"] >= 500


def test_compare_honest_ratio_undefined():
    config = heavy_tail_config()
    config["oracle"] = {"model": "vstat", "policy": "honest-exact"}
    out = compare_naive(ExperimentConfig.from_dict(config))
    assert out["naive_error"] == 0 and math.isnan(out["ratio"])


def test_csv_and_json(tmp_path):
    row = ResultRow(0, "signed_mean", "adversarial-up", 256, 0.1 + 0.2, 1 / 3, 12, 0, 0.0)
    text = rows_to_csv([row])
    lines = text.splitlines()
    assert lines[0] == ",".join(CSV_FIELDS)
    assert len(lines) == 2 and "0.30000000000000004" in lines[1]
    assert rows_from_csv(text) == [row]
    path = emit_results([row], "json", tmp_path / "r.json")
    assert rows_from_json(path.read_text()) == [row]
    assert list(json.loads(path.read_text())[0]) == list(CSV_FIELDS)
    with pytest.raises(ValueError):
        emit_results([], "csv", tmp_path / "x.csv")
    with pytest.raises(OSError):
        emit_results([row], "csv", tmp_path / "missing" / "x.csv")


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "config.json"
    path.write_text(json.dumps(lognormal_config().to_dict()))
    return path


def test_cli_estimate_and_overrides(config_file, tmp_path, capsys):
    assert main(["estimate", "--config", str(config_file), "--trials", "2", "--seed", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == ",".join(CSV_FIELDS) and len(out) == 3


def test_cli_sweep_deterministic(config_file, tmp_path):
    data = json.loads(config_file.read_text())
    data["sweep"] = {"n": [64, 128], "policy": ["adversarial-seeded-random-sign"]}
    config_file.write_text(json.dumps(data))
    outs = []
    for i in range(2):
        out = tmp_path / f"o{i}.json"
        assert main(["sweep", "--config", str(config_file), "--out", str(out), "--format", "json"]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_cli_compare(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps(heavy_tail_config()))
    assert main(["compare", "--config", str(path)]) == 0
    summary = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert summary["ratio"] >= 500


def test_cli_simulate_comm(tmp_path, capsys):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({
        "distribution": {"kind": "two-point", "lo": 0, "hi": 3, "p": 0.4},
        "estimator": {"name": "nonneg_mean", "n": 64, "zeta": 0.1},
        "oracle": {"q_total": 40, "delta": 0.1},
    }))
    assert main(["simulate-comm", "--config", str(path)]) == 0
    captured = capsys.readouterr()
    row = rows_from_csv(captured.out)[0]
    assert row.policy == "comm-sim" and row.bits > 0
    assert f"total bits consumed: {row.bits}" in captured.err


def test_cli_bad_config(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"distribution": {"kind": "point-mass", "value": 1}, "estimator": {"name": "nope"}}))
    assert main(["estimate", "--config", str(path)]) == 2
    assert "error" in capsys.readouterr().err
