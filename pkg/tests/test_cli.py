import csv
import json

import pytest
import yaml

from satvnf.cli import (ConfigError, ExperimentConfig, config_from_dict,
                        config_to_dict, load_config, main, run)


def test_empty_config_gives_all_defaults(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    cfg = load_config(p)
    assert cfg == ExperimentConfig()
    assert cfg.topology.planes == 3
    assert cfg.topology.sats_per_plane == 4
    assert cfg.topology.isl_bandwidth_mbps == 1000.0
    assert cfg.topology.cloud_gateways == (5, 6)
    assert cfg.workload.chain_max == 7
    assert cfg.workload.max_delay_ms == 250.0
    assert cfg.solver.d == 8
    assert cfg.solver.beam_width == 4


def test_missing_config_path_gives_defaults():
    assert load_config(None) == ExperimentConfig()


def test_partial_override():
    cfg = config_from_dict({"seed": 9, "topology": {"planes": 2},
                            "static": {"m_values": [5], "repetitions": 3}})
    assert cfg.seed == 9
    assert cfg.topology.planes == 2
    assert cfg.topology.sats_per_plane == 4  # untouched default
    assert cfg.static.m_values == (5,)


@pytest.mark.parametrize("raw,needle", [
    ({"bogus": 1}, "bogus"),
    ({"topology": {"planes": 0}}, "topology.planes"),
    ({"topology": {"planes": "three"}}, "topology.planes"),
    ({"topology": {"coverage_overlap": 1.5}}, "topology.coverage_overlap"),
    ({"topology": {"cloud_gateways": [99]}}, "topology.cloud_gateways"),
    ({"workload": {"cpu_range": [5, 1]}}, "workload.cpu_range"),
    ({"workload": {"chain_min": 1}}, "workload.chain_min"),
    ({"workload": {"max_delay_ms": -2}}, "workload.max_delay_ms"),
    ({"solver": {"beam_width": 0}}, "solver.beam_width"),
    ({"static": {"m_values": []}}, "static.m_values"),
    ({"dynamic": {"slots": 0}}, "dynamic.slots"),
    ({"mode": "warp"}, "mode"),
    ({"algorithms": ["quantum"]}, "algorithms"),
    ({"schema_version": 99}, "schema_version"),
])
def test_validation_errors_name_the_field(raw, needle):
    with pytest.raises(ConfigError) as exc:
        config_from_dict(raw)
    assert needle in str(exc.value)


def test_config_round_trips_through_yaml(tmp_path):
    cfg = config_from_dict({"seed": 5, "mode": "dynamic"})
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(config_to_dict(cfg)))
    assert load_config(p) == cfg


SMALL = {
    "seed": 11,
    "mode": "both",
    "static": {"m_values": [5, 15], "repetitions": 2},
    "dynamic": {"lambda_values": [5.0], "slots": 4, "repetitions": 2},
}


def test_run_writes_expected_artifacts(tmp_path):
    cfg = config_from_dict(SMALL)
    summary = run(cfg, tmp_path / "out")
    for name in ("detail.csv", "aggregate.csv", "timings.csv",
                 "resolved_config.yaml", "summary.json"):
        assert (tmp_path / "out" / name).exists()
    with open(tmp_path / "out" / "detail.csv") as f:
        rows = list(csv.DictReader(f))
    # 3 algorithms x (2 M-cells x 2 reps x 1 row + 1 lambda x 2 reps x 4 slots).
    assert len(rows) == 3 * (4 + 8)
    assert summary["detail_rows"] == len(rows)
    static_rows = [r for r in rows if r["mode"] == "static"]
    assert all(r["slot"] == "-1" for r in static_rows)
    assert {r["algorithm"] for r in rows} == {"dvnfp", "greedy", "viterbi"}
    with open(tmp_path / "out" / "summary.json") as f:
        assert json.load(f) == summary


def test_aggregate_row_counts(tmp_path):
    cfg = config_from_dict(SMALL)
    run(cfg, tmp_path / "out")
    with open(tmp_path / "out" / "aggregate.csv") as f:
        rows = list(csv.DictReader(f))
    # 3 algorithms x (2 static cells + 1 dynamic cell).
    assert len(rows) == 9
    for r in rows:
        assert r["repetitions"] == "2"
        assert 0.0 <= float(r["allocated_mean"]) <= 1.0


def test_rerun_is_byte_identical(tmp_path):
    cfg = config_from_dict(SMALL)
    run(cfg, tmp_path / "a")
    run(cfg, tmp_path / "b")
    for name in ("detail.csv", "aggregate.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == \
            (tmp_path / "b" / name).read_bytes()


def test_parallel_run_matches_serial(tmp_path):
    cfg = config_from_dict(SMALL)
    run(cfg, tmp_path / "serial", jobs=1)
    run(cfg, tmp_path / "par", jobs=4)
    assert (tmp_path / "serial" / "detail.csv").read_bytes() == \
        (tmp_path / "par" / "detail.csv").read_bytes()
    assert (tmp_path / "serial" / "aggregate.csv").read_bytes() == \
        (tmp_path / "par" / "aggregate.csv").read_bytes()


def test_main_run_and_validate(tmp_path, capsys):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(SMALL | {"mode": "static"}))
    assert main(["validate", "--config", str(p)]) == 0
    resolved = yaml.safe_load(capsys.readouterr().out)
    assert resolved["seed"] == 11
    out = tmp_path / "run_out"
    assert main(["run", "--config", str(p), "--out", str(out)]) == 0
    assert (out / "detail.csv").exists()


def test_main_seed_override_changes_results(tmp_path):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump({"mode": "static",
                                 "static": {"m_values": [10], "repetitions": 1}}))
    main(["run", "--config", str(p), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["run", "--config", str(p), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a" / "detail.csv").read_bytes() != \
        (tmp_path / "b" / "detail.csv").read_bytes()


def test_main_reports_config_errors(tmp_path, capsys):
    p = tmp_path / "bad.yaml"
    p.write_text("topology:\n  planes: -1\n")
    assert main(["validate", "--config", str(p)]) == 2
    assert "topology.planes" in capsys.readouterr().err


def test_main_oracle_check(capsys):
    assert main(["oracle-check", "--instances", "5", "--seed", "0"]) == 0
    assert "5/5 instances match" in capsys.readouterr().out
