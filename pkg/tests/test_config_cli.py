"""Configuration parsing and the command-line front end."""

import json
import os
import subprocess
import sys

import numpy as np
import pytest

from evoq.cli import main
from evoq.config import DEFAULT_TOLERANCES, load_config
from evoq.errors import SchemaError

CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def write_config(tmp_path, payload, name="cfg.json"):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def base_config():
    return {
        "seed": 7,
        "nu": 1.0,
        "grid": {"t_min": -4.0, "t_max": 4.0, "n": 128, "padding_fraction": 0.25},
        "spatial": {"kind": "heat", "k": 2, "a": 2.0},
        "rhs": {"shape": "bump", "component": 0, "center": 0.0, "width": 1.0},
    }


class TestLoadConfig:
    def test_bundled_configs_parse(self):
        for name in ("heat_small", "wave_small", "maxwell_small", "pointwise_decay"):
            cfg = load_config(os.path.join(CONFIG_DIR, f"{name}.json"))
            assert cfg.nu > 0
            assert cfg.m >= 1

    def test_builder_kind_produces_law(self, tmp_path):
        cfg = load_config(write_config(tmp_path, base_config()))
        assert cfg.m == 5
        assert cfg.law.order == 1
        assert cfg.tolerances == DEFAULT_TOLERANCES

    def test_matrix_kind_needs_law(self, tmp_path):
        payload = base_config()
        payload["spatial"] = {"kind": "matrix", "matrix": [[[0.0, 0.0]]]}
        with pytest.raises(SchemaError, match="law"):
            load_config(write_config(tmp_path, payload))

    def test_law_forbidden_with_builder(self, tmp_path):
        payload = base_config()
        payload["law"] = {"coeffs": [[[[1.0, 0.0]]]]}
        with pytest.raises(SchemaError, match="builder"):
            load_config(write_config(tmp_path, payload))

    def test_missing_field_reports_path(self, tmp_path):
        payload = base_config()
        del payload["grid"]
        with pytest.raises(SchemaError, match="grid"):
            load_config(write_config(tmp_path, payload))

    def test_ragged_matrix_rejected(self, tmp_path):
        payload = base_config()
        payload["spatial"] = {"kind": "matrix",
                              "matrix": [[[0.0, 0.0], [1.0, 0.0]], [[0.0, 0.0]]]}
        with pytest.raises(SchemaError, match="ragged"):
            load_config(write_config(tmp_path, payload))

    def test_unknown_tolerance_rejected(self, tmp_path):
        payload = base_config()
        payload["tolerances"] = {"made_up": 1.0}
        with pytest.raises(SchemaError, match="made_up"):
            load_config(write_config(tmp_path, payload))

    def test_component_out_of_range(self, tmp_path):
        payload = base_config()
        payload["rhs"]["component"] = 99
        with pytest.raises(SchemaError, match="component"):
            load_config(write_config(tmp_path, payload))

    def test_custom_rhs_must_exist(self, tmp_path):
        payload = base_config()
        payload["rhs"] = {"shape": "custom", "csv": "missing_signal"}
        with pytest.raises(SchemaError, match="does not exist"):
            load_config(write_config(tmp_path, payload))

    def test_custom_rhs_roundtrip(self, tmp_path):
        import evoq

        payload = base_config()
        cfg0 = load_config(write_config(tmp_path, payload))
        sig = cfg0.build_rhs()
        evoq.save_signal(sig, str(tmp_path / "forcing"))
        payload["rhs"] = {"shape": "custom", "csv": "forcing"}
        cfg = load_config(write_config(tmp_path, payload, name="cfg2.json"))
        loaded = cfg.build_rhs()
        assert np.array_equal(loaded.phi, sig.phi)

    def test_control_section(self, tmp_path):
        payload = base_config()
        payload["control"] = {
            "B": [[[1.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]]],
            "T": 1.0,
            "variant": "supported",
        }
        cfg = load_config(write_config(tmp_path, payload))
        assert cfg.control.B.shape == (5, 1)

    def test_pointwise_control_needs_u0(self, tmp_path):
        payload = base_config()
        payload["control"] = {
            "B": [[[1.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]], [[0.0, 0.0]]],
            "T": 1.0,
            "variant": "pointwise",
        }
        with pytest.raises(SchemaError, match="U0"):
            load_config(write_config(tmp_path, payload))


class TestCliExitCodes:
    def test_solve_writes_reports(self, tmp_path):
        out = tmp_path / "out"
        code = main(["solve", "--config",
                     os.path.join(CONFIG_DIR, "heat_small.json"),
                     "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "solution.csv").exists()
        report = json.loads((out / "report.json").read_text())
        assert report["report"]["residual_rel"] < 1e-10
        assert report["report"]["certificate"]["c_est"] > 0

    def test_adjoint_runs(self, tmp_path):
        code = main(["adjoint", "--config",
                     os.path.join(CONFIG_DIR, "heat_small.json"),
                     "--out", str(tmp_path / "out")])
        assert code == 0

    @pytest.mark.parametrize("suite", ["duality", "causality", "reversal",
                                       "nu-independence"])
    def test_verify_suites_pass(self, tmp_path, suite):
        code = main(["verify", "--config",
                     os.path.join(CONFIG_DIR, "heat_small.json"),
                     "--suite", suite, "--out", str(tmp_path)])
        assert code == 0
        payload = json.loads((tmp_path / f"verify_{suite}.json").read_text())
        assert payload["passed"] is True

    def test_schema_violation_exits_2(self, tmp_path):
        payload = base_config()
        del payload["nu"]
        code = main(["solve", "--config", write_config(tmp_path, payload)])
        assert code == 2

    def test_noncoercive_mass_exits_2(self, tmp_path):
        payload = base_config()
        payload["spatial"] = {"kind": "matrix", "matrix": [[[0.0, 0.0]]]}
        payload["law"] = {"coeffs": [[[[-1.0, 0.0]]]]}
        code = main(["solve", "--config", write_config(tmp_path, payload)])
        assert code == 2

    def test_missing_config_exits_3(self):
        code = main(["solve", "--config", "/nonexistent/cfg.json"])
        assert code == 3

    def test_control_infeasible_is_a_finding(self, tmp_path):
        # B = 0: uncontrollable, but the command succeeds and reports it
        out = tmp_path / "out"
        code = main(["control", "--config",
                     os.path.join(CONFIG_DIR, "maxwell_small.json"),
                     "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "control_result.json").read_text())
        assert payload["result"]["feasible"] is False
        obs = json.loads((out / "observability.json").read_text())
        assert obs["c_obs"] == "infinity"

    def test_control_certify_duality(self, tmp_path):
        code = main(["control", "--config",
                     os.path.join(CONFIG_DIR, "heat_small.json"),
                     "--certify-duality", "--out", str(tmp_path)])
        assert code == 0
        payload = json.loads((tmp_path / "duality_table.json").read_text())
        assert payload["agree"] is True

    def test_control_pointwise(self, tmp_path):
        out = tmp_path / "out"
        code = main(["control", "--config",
                     os.path.join(CONFIG_DIR, "pointwise_decay.json"),
                     "--out", str(out)])
        assert code == 0
        payload = json.loads((out / "control_result.json").read_text())
        assert payload["result"]["feasible"] is True
        assert payload["result"]["terminal_residual"] < 1e-8 * 2
        assert (out / "control_G.csv").exists()

    def test_reports_are_bitwise_reproducible(self, tmp_path):
        cfg = os.path.join(CONFIG_DIR, "heat_small.json")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["solve", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["solve", "--config", cfg, "--out", str(out2)]) == 0
        for name in ("report.json", "solution.csv", "solution.json"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()

    def test_console_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "evoq.cli", "--help"],
            capture_output=True, text=True)
        assert proc.returncode == 0
        assert "solve" in proc.stdout

    def test_programmatic_run_wrapper(self, tmp_path):
        from evoq.cli import run

        code = run(os.path.join(CONFIG_DIR, "heat_small.json"), "solve",
                   str(tmp_path / "out"))
        assert code == 0
        assert (tmp_path / "out" / "report.json").exists()
