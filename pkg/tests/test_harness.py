import csv
import math

import numpy as np
import pytest

from sbim.errors import ConfigError
from sbim.harness import (
    DEFAULT_H_SWEEP,
    ExperimentConfig,
    converge_run,
    export,
    load_json,
    run_convergence,
    run_energy_trace,
    run_swarm_batch,
)
from sbim.integrators import Scheme, SchemeParams
from sbim.objectives import make_objective
from sbim.seeding import splitmix64, trial_seed


def test_default_sweep_halves_to_1_128():
    assert DEFAULT_H_SWEEP[0] == 1.0
    assert DEFAULT_H_SWEEP[-1] == 1 / 128
    for a, b in zip(DEFAULT_H_SWEEP, DEFAULT_H_SWEEP[1:]):
        assert b == a / 2


def test_config_validation():
    with pytest.raises(ConfigError):
        ExperimentConfig(trials=0)
    with pytest.raises(ConfigError):
        ExperimentConfig(mode="banana")
    with pytest.raises(ConfigError):
        ExperimentConfig(h_sweep=[1.0, -0.5])


def test_converge_run_exact_start_flags():
    spec = make_objective("sphere", 2)
    params = SchemeParams(step=1.0, scheme=Scheme.GD)
    outcome = converge_run(spec, params, x0=np.zeros(2), gd_step_size=0.25)
    assert outcome.success
    assert outcome.exact_convergence
    assert math.isnan(outcome.p_bar)


def test_run_convergence_rows_gd_sphere():
    config = ExperimentConfig(
        function="sphere", dim=1, scheme="gd", mode="converge",
        h_sweep=[1.0, 0.5], gd_step=0.25,
    )
    rows = run_convergence(config)
    assert len(rows) == 2
    for row in rows:
        assert row["success"] == 1
        assert row["scheme"] == "gd"


def test_run_convergence_fd_band():
    config = ExperimentConfig(
        function="rotated-hyper-ellipsoid", dim=1, scheme="fd",
        mode="converge", h_sweep=[1.0],
    )
    row = run_convergence(config)[0]
    assert row["success"] == 1
    assert 4.5 <= row["p_bar"] <= 5.5


def test_swarm_batch_reproducible_and_bounded():
    config = ExperimentConfig(
        function="rastrigin", dim=1, scheme="gd", mode="swarm",
        trials=20, master_seed=7,
    )
    row1, recs1 = run_swarm_batch(config)
    row2, recs2 = run_swarm_batch(config)
    assert 0.0 <= row1["success_rate"] <= 1.0
    assert row1["success_rate"] == row1["successes"] / row1["trials"]
    for key in row1:
        if key != "avg_cpu_seconds":
            assert row1[key] == row2[key]
    assert [r.seed for r in recs1] == [r.seed for r in recs2]
    assert [r.iterations for r in recs1] == [r.iterations for r in recs2]


def test_trial_seeds_are_distinct_and_stable():
    seeds = [trial_seed(42, t) for t in range(100)]
    assert len(set(seeds)) == 100
    # pinned values guard the documented derivation against edits
    assert splitmix64(0) == 696566373075308979
    assert trial_seed(42, 0) == splitmix64(splitmix64(42))


def test_energy_trace_rows_have_all_columns():
    config = ExperimentConfig(
        function="sphere", dim=1, scheme="fd", mode="energy-trace", step=0.0625,
    )
    rows = run_energy_trace(config)
    assert len(rows) > 3
    expected = {
        "k", "f_gap", "delta_k", "c_k", "energy_fd",
        "kinetic", "total_swarm_energy", "p_k",
    }
    assert set(rows[0].keys()) == expected
    gaps = [r["f_gap"] for r in rows]
    assert gaps[-1] < gaps[0]


def test_export_csv_roundtrip(tmp_path):
    rows = [
        {"h": 1.0, "p_bar": 5.054932111234567, "success": 1, "scheme": "fd"},
        {"h": 0.5, "p_bar": float(np.pi), "success": 0, "scheme": "fd"},
    ]
    path = tmp_path / "table.csv"
    export(rows, path, "csv")
    with open(path) as fh:
        parsed = list(csv.DictReader(fh))
    assert len(parsed) == 2
    assert float(parsed[0]["p_bar"]) == rows[0]["p_bar"]
    assert float(parsed[1]["p_bar"]) == rows[1]["p_bar"]


def test_export_json_roundtrip(tmp_path):
    rows = [{"a": 0.1 + 0.2, "b": "x"}, {"a": 1e-300, "b": "y"}]
    path = tmp_path / "rows.json"
    export(rows, path, "json")
    back = load_json(path)
    assert back == rows


def test_export_empty_rejected(tmp_path):
    with pytest.raises(ConfigError):
        export([], tmp_path / "nothing.csv")


def test_export_csv_two_lines_for_one_row(tmp_path):
    path = tmp_path / "one.csv"
    export([{"a": 1.5}], path, "csv")
    assert len(path.read_text().strip().splitlines()) == 2


def test_byte_identical_csv_excluding_wall_clock(tmp_path):
    config = ExperimentConfig(
        function="sphere", dim=1, scheme="gd", mode="swarm",
        trials=5, master_seed=3,
    )
    paths = []
    for tag in ("a", "b"):
        row, _ = run_swarm_batch(config)
        row.pop("avg_cpu_seconds")
        path = tmp_path / f"{tag}.csv"
        export([row], path, "csv")
        paths.append(path.read_bytes())
    assert paths[0] == paths[1]


def test_single_trial_all_agents_at_minimizer():
    config = ExperimentConfig(
        function="sphere", dim=2, scheme="fb", mode="swarm",
        trials=1, master_seed=0, x0=[0.0, 0.0],
    )
    row, _ = run_swarm_batch(config)
    assert row["success_rate"] == 1.0
    assert row["avg_iterations"] == 2.0


def test_worker_count_does_not_change_aggregates():
    config = ExperimentConfig(
        function="rastrigin", dim=1, scheme="gd", mode="swarm",
        trials=6, master_seed=5,
    )
    serial, recs_serial = run_swarm_batch(config, workers=1)
    parallel, recs_parallel = run_swarm_batch(config, workers=2)
    for key in serial:
        if key != "avg_cpu_seconds":
            assert serial[key] == parallel[key]
    assert [r.seed for r in recs_serial] == [r.seed for r in recs_parallel]
    assert [r.success for r in recs_serial] == [r.success for r in recs_parallel]
