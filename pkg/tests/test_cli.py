import json
from pathlib import Path

import numpy as np
import pytest

from flatsat.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture(scope="module")
def table1_design_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("t1")
    assert main(["synthesize", "--config", str(CONFIGS / "table1.json"), "--out", str(out)]) == 0
    return out


class TestSynthesize:
    def test_table1_report_values(self, table1_design_dir):
        report = json.loads((table1_design_dir / "design.json").read_text())
        assert report["mode"] == "nominal"
        assert report["scalars"]["rho"] == pytest.approx(2.9019, abs=1e-3)
        assert report["scalars"]["eps"] == pytest.approx(2.4182, abs=1e-3)

    def test_table2_verify_mode(self, tmp_path):
        code = main(
            ["synthesize", "--config", str(CONFIGS / "table2_verify.json"), "--out", str(tmp_path)]
        )
        assert code == 0
        report = json.loads((tmp_path / "design.json").read_text())
        assert report["diagnostics"]["lmi_max_eig"] <= 0.15
        assert min(report["diagnostics"]["box_row_margins"]) >= -0.05

    def test_malformed_config_exit_1(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"physical": {"g": 9.81, "t_max": 14.0}}))
        assert main(["synthesize", "--config", str(bad), "--out", str(tmp_path)]) == 1

    def test_unknown_key_rejected(self, tmp_path):
        cfg = json.loads((CONFIGS / "table1.json").read_text())
        cfg["extra_section"] = {}
        bad = tmp_path / "extra.json"
        bad.write_text(json.dumps(cfg))
        assert main(["synthesize", "--config", str(bad), "--out", str(tmp_path)]) == 1

    def test_infeasible_exit_2(self, tmp_path):
        cfg = json.loads((CONFIGS / "table1.json").read_text())
        cfg["synthesis"]["alpha"] = 1000.0
        path = tmp_path / "hard.json"
        path.write_text(json.dumps(cfg))
        assert main(["synthesize", "--config", str(path), "--out", str(tmp_path)]) == 2


class TestSimulate:
    def test_adaptive_sweep_and_reproducibility(self, table1_design_dir, tmp_path):
        design = str(table1_design_dir / "design.json")
        cfg = str(CONFIGS / "table1.json")
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["simulate", "--config", cfg, "--design", design, "--out", str(out1)]) == 0
        assert main(["simulate", "--config", cfg, "--design", design, "--out", str(out2)]) == 0
        metrics = json.loads((out1 / "metrics.json").read_text())
        finals = [s["metrics"]["final_gamma"] for s in metrics["scenarios"]]
        assert finals == sorted(finals)
        for s in metrics["scenarios"]:
            assert s["metrics"]["final_gamma"] <= s["gamma_bound"] + 1e-6
        for name in ("sweep-mu0", "sweep-mu5"):
            assert (out1 / f"{name}.csv").read_bytes() == (out2 / f"{name}.csv").read_bytes()

    def test_digest_mismatch_warns(self, table1_design_dir, tmp_path, capsys):
        design = str(table1_design_dir / "design.json")
        code = main(
            [
                "simulate",
                "--config",
                str(CONFIGS / "track_swap.json"),
                "--design",
                design,
                "--out",
                str(tmp_path),
            ]
        )
        assert code == 0
        assert "different config" in capsys.readouterr().err
        metrics = json.loads((tmp_path / "metrics.json").read_text())
        for s in metrics["scenarios"]:
            assert s["metrics"]["rms_error"] < 0.05


class TestVerify:
    def test_lmi_suite_passes(self, table1_design_dir):
        design = str(table1_design_dir / "design.json")
        assert main(["verify", "--design", design, "--suite", "lmi-margins"]) == 0

    def test_corrupted_design_fails_with_named_check(self, table1_design_dir, tmp_path, capsys):
        report = json.loads((table1_design_dir / "design.json").read_text())
        # flip the sign of one off-diagonal coupling entry of Q (and keep symmetry)
        data = report["matrices"]["q"]["data"]
        data[3] = -data[3]
        data[18] = -data[18]
        bad = tmp_path / "bad_design.json"
        bad.write_text(json.dumps(report))
        assert main(["verify", "--design", str(bad), "--suite", "lmi-margins"]) == 4
        out = capsys.readouterr().out
        assert "[FAIL]" in out and "decay-lmi-max-eig" in out

    def test_terminal_conditions_suite(self, tmp_path):
        out = tmp_path / "term"
        assert main(["terminal", "--config", str(CONFIGS / "terminal.json"), "--out", str(out)]) == 0
        assert main(
            ["verify", "--design", str(out / "design.json"), "--suite", "terminal-conditions"]
        ) == 0

    def test_terminal_subcommand_needs_terminal_mode(self, tmp_path):
        assert main(["terminal", "--config", str(CONFIGS / "table1.json"), "--out", str(tmp_path)]) == 1


class TestExport:
    def test_matrices_dumped(self, table1_design_dir, tmp_path):
        design = str(table1_design_dir / "design.json")
        assert main(["export", "--design", design, "--out", str(tmp_path)]) == 0
        q = np.loadtxt(tmp_path / "q.csv", delimiter=",")
        report = json.loads((table1_design_dir / "design.json").read_text())
        np.testing.assert_allclose(
            q.ravel(), report["matrices"]["q"]["data"], rtol=1e-15
        )
        assert (tmp_path / "scalars.json").exists()
