import csv
import os

import numpy as np
import pytest
import yaml

from codedgd.cli import main
from codedgd.config import load_config, parse_config
from codedgd.errors import ConfigError

BASE = {
    "schemes": [{"kind": "gc", "K": 6, "r": 3},
                {"kind": "lcc-mm", "K": 6, "r": 3}],
    "timing": {"model": {"mu": 10.0, "alpha": 0.01}},
    "scenario": {},
    "iterations": 200,
    "master_seed": 42,
}


def write_cfg(tmp_path, overrides=None, name="cfg.yaml"):
    cfg = dict(BASE)
    cfg.update(overrides or {})
    path = tmp_path / name
    path.write_text(yaml.safe_dump(cfg))
    return str(path)


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestRun:
    def test_outputs_and_self_consistency(self, tmp_path):
        cfg = write_cfg(tmp_path, {"output": str(tmp_path / "out")})
        assert main(["run", cfg]) == 0
        out = tmp_path / "out"
        summary = read_rows(out / "summary.csv")
        assert {r["scheme"] for r in summary} == {"gc", "lcc-mm"}
        for row in summary:
            records = read_rows(out / f"records_{row['scheme']}.csv")
            assert len(records) == 200
            mean = np.mean([float(r["completion_ms"]) for r in records])
            assert mean == pytest.approx(float(row["mean_completion_ms"]), rel=1e-9)
            msgs = np.mean([int(r["msgs_sent"]) for r in records])
            assert msgs == pytest.approx(float(row["mean_msgs"]), rel=1e-9)
        assert (out / "cdf_gc.csv").exists()
        assert (out / "fig_cdf_gc.png").exists()
        assert (out / "fig_cdf_schemes.png").exists()

    def test_byte_identical_reruns(self, tmp_path):
        cfg_a = write_cfg(tmp_path, {"output": str(tmp_path / "a")}, "a.yaml")
        cfg_b = write_cfg(tmp_path, {"output": str(tmp_path / "b")}, "b.yaml")
        assert main(["run", cfg_a, "--no-figures"]) == 0
        assert main(["run", cfg_b, "--no-figures"]) == 0
        for name in ("summary.csv", "records_gc.csv", "records_lcc-mm.csv",
                     "cdf_lcc-mm.csv"):
            a = (tmp_path / "a" / name).read_bytes()
            b = (tmp_path / "b" / name).read_bytes()
            assert a == b, name

    def test_seed_override_changes_results(self, tmp_path):
        cfg = write_cfg(tmp_path, {"output": str(tmp_path / "o1")})
        main(["run", cfg, "--no-figures"])
        cfg2 = write_cfg(tmp_path, {"output": str(tmp_path / "o2")}, "c2.yaml")
        main(["run", cfg2, "--seed", "1", "--no-figures"])
        a = read_rows(tmp_path / "o1" / "summary.csv")
        b = read_rows(tmp_path / "o2" / "summary.csv")
        assert a[0]["mean_completion_ms"] != b[0]["mean_completion_ms"]

    def test_sweep_outputs(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "schemes": [{"kind": "lcc", "K": 8, "r": 4}],
            "sweep": {"param": "r", "values": [2, 4]},
            "iterations": 50,
            "output": str(tmp_path / "out"),
        })
        assert main(["run", cfg]) == 0
        summary = read_rows(tmp_path / "out" / "summary.csv")
        assert [r["param_point"] for r in summary] == ["2", "4"]
        assert (tmp_path / "out" / "fig_sweep_completion.png").exists()
        assert (tmp_path / "out" / "fig_sweep_load.png").exists()

    def test_initial_delay_list_is_a_sweep(self, tmp_path):
        cfg = write_cfg(tmp_path, {
            "schemes": [{"kind": "uc-mm", "K": 5, "r": 2}],
            "scenario": {"p_delay": 0.5, "initial_delay": [0.0, 0.1]},
            "iterations": 30,
            "output": str(tmp_path / "out"),
        })
        assert main(["run", cfg, "--no-figures"]) == 0
        summary = read_rows(tmp_path / "out" / "summary.csv")
        assert len(summary) == 2


class TestConfigErrors:
    def test_empty_scheme_list_usage_error(self, tmp_path):
        cfg = write_cfg(tmp_path, {"schemes": []})
        assert main(["run", cfg]) == 2

    def test_invalid_yaml_reports_line(self, tmp_path, capsys):
        path = tmp_path / "broken.yaml"
        path.write_text("schemes:\n  - kind: gc\n   K: 6\n")
        assert main(["run", str(path)]) == 2
        err = capsys.readouterr().err
        assert "broken.yaml:3" in err

    def test_infeasible_plan_rejected_before_simulation(self, tmp_path):
        cfg = write_cfg(tmp_path, {"schemes": [{"kind": "lcc-mm", "K": 6, "r": 1}]})
        assert main(["run", cfg]) == 2

    def test_unknown_scheme_kind(self, tmp_path):
        cfg = write_cfg(tmp_path, {"schemes": [{"kind": "nope", "K": 4, "r": 2}]})
        assert main(["run", cfg]) == 2

    def test_bad_scenario_key(self):
        raw = dict(BASE)
        raw["scenario"] = {"warp": 9}
        with pytest.raises(ConfigError):
            parse_config(raw)


class TestVerify:
    def test_small_roster_passes(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "dataset": {"synthetic": {"rows": 48, "features": 5, "seed": 3}},
            "schemes": [
                {"kind": "gc", "K": 8, "r": 3},
                {"kind": "gc-mm-u", "K": 8, "r": 3, "orders": [2, 3], "clusters": 2},
                {"kind": "lcc", "K": 8, "r": 4},
                {"kind": "lcc-mm", "K": 8, "r": 2},
                {"kind": "uc-mm", "K": 8, "r": 3},
            ],
            "scenario": {"p_delay": 0.3, "initial_delay": 0.2},
            "verify": {"iterations": 12},
        })
        assert main(["verify", cfg]) == 0
        out = capsys.readouterr().out
        assert out.count("OK over 12 iterations") == 5
        assert "rel_err" in out

    def test_partial_gradient_reports_missing(self, tmp_path, capsys):
        cfg = write_cfg(tmp_path, {
            "dataset": {"synthetic": {"rows": 80, "features": 4, "seed": 5}},
            "schemes": [{"kind": "uc-mm-pg", "K": 40, "r": 4, "tolerance": 0.05}],
            "scenario": {"p_delay": 0.5, "initial_delay": 5.0},
            "verify": {"iterations": 10},
        })
        assert main(["verify", cfg]) == 0
        out = capsys.readouterr().out
        for line in out.splitlines():
            if "missing=" in line and "iter=" in line:
                assert int(line.rsplit("missing=", 1)[1]) <= 2


def test_repo_example_configs_parse():
    root = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
    for name in os.listdir(root):
        load_config(os.path.join(root, name))
