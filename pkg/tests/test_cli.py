import csv
import json

from sbim.cli import _parse_h_sweep, main


def test_parse_h_sweep_range():
    sweep = _parse_h_sweep("1:1/8")
    assert sweep == [1.0, 0.5, 0.25, 0.125]


def test_parse_h_sweep_list():
    assert _parse_h_sweep("1,0.5") == [1.0, 0.5]


def test_converge_subcommand_writes_csv_and_figure(tmp_path):
    out = tmp_path / "table.csv"
    code = main([
        "converge", "--fn", "sphere", "--dim", "1", "--scheme", "gd",
        "--gd-step", "0.25", "--h-sweep", "1,0.5", "--out", str(out),
    ])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2
    assert out.with_suffix(".png").exists()


def test_swarm_subcommand_json(tmp_path):
    out = tmp_path / "row.json"
    code = main([
        "swarm", "--fn", "rastrigin", "--dim", "1", "--shift-b", "0",
        "--scheme", "gd", "--trials", "5", "--seed", "42",
        "--out", str(out), "--no-plot",
    ])
    assert code == 0
    rows = json.loads(out.read_text())
    assert rows[0]["trials"] == 5
    assert 0.0 <= rows[0]["success_rate"] <= 1.0


def test_energy_trace_subcommand(tmp_path):
    out = tmp_path / "trace.csv"
    code = main([
        "energy-trace", "--fn", "sphere", "--dim", "1", "--scheme", "fd",
        "--h", "0.0625", "--out", str(out), "--no-plot",
    ])
    assert code == 0
    with open(out) as fh:
        header = fh.readline().strip().split(",")
    assert header == [
        "k", "f_gap", "delta_k", "c_k", "energy_fd",
        "kinetic", "total_swarm_energy", "p_k",
    ]


def test_config_file_merging(tmp_path):
    cfg = tmp_path / "conf.json"
    cfg.write_text(json.dumps({"function": "sphere", "dim": 2, "gd_step": 0.25}))
    out = tmp_path / "t.csv"
    code = main([
        "converge", "--scheme", "gd", "--config", str(cfg),
        "--h-sweep", "1", "--out", str(out),
        "--no-plot",
    ])
    assert code == 0
    with open(out) as fh:
        rows = list(csv.DictReader(fh))
    assert rows[0]["dim"] == "2"


def test_config_error_exit_code(tmp_path):
    code = main([
        "swarm", "--fn", "sphere", "--dim", "1", "--scheme", "gd",
        "--trials", "0", "--out", str(tmp_path / "x.csv"), "--no-plot",
    ])
    assert code == 1


def test_unknown_config_field_exit_code(tmp_path):
    cfg = tmp_path / "conf.json"
    cfg.write_text(json.dumps({"no_such_field": 1}))
    code = main([
        "converge", "--fn", "sphere", "--dim", "1", "--scheme", "gd",
        "--config", str(cfg), "--out", str(tmp_path / "y.csv"), "--no-plot",
    ])
    assert code == 1


def test_io_error_exit_code(tmp_path):
    code = main([
        "converge", "--fn", "sphere", "--dim", "1", "--scheme", "gd",
        "--gd-step", "0.25", "--h-sweep", "1",
        "--out", str(tmp_path / "missing-dir" / "t.csv"), "--no-plot",
    ])
    assert code == 2
