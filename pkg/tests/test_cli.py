import json

import pytest

from warptrap.cli import ExperimentConfig, ConfigError, main


def run_cli(args):
    return main(args)


class TestConfig:
    def test_unknown_field_rejected(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"nonsense": 1}))
        with pytest.raises(ConfigError, match="nonsense"):
            ExperimentConfig.load(str(cfg), {})

    def test_flags_override_file(self, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"m": 2, "T_max": 50.0}))
        out = ExperimentConfig.load(str(cfg), {"T_max": 80.0})
        assert out.m == 2 and out.T_max == 80.0

    def test_field_validation_messages(self):
        with pytest.raises(ConfigError, match="T_max"):
            ExperimentConfig.load(None, {"T_max": -1.0})
        with pytest.raises(ConfigError, match="causal"):
            ExperimentConfig.load(None, {"causal": "maybe"})


class TestExitCodes:
    def test_wrong_side_is_validation_error(self, tmp_path, capsys):
        code = run_cli(["quasimode", "--x0", "1.0", "--out", str(tmp_path / "o")])
        assert code == 1
        assert "x0" in capsys.readouterr().err

    def test_empty_l_list_is_validation_error(self, tmp_path, capsys):
        code = run_cli(["quasimode", "--x0", "-1.0", "--l", "--out", str(tmp_path / "o")])
        assert code == 1
        assert "l_list" in capsys.readouterr().err

    def test_causality_budget_rejected(self, tmp_path, capsys):
        code = run_cli([
            "bifurcation", "--x0-plus", "1.0", "--x0-minus", "-1.0", "--R", "3.5",
            "--l", "15", "--T", "100", "--x-max", "40", "--out", str(tmp_path / "o"),
        ])
        assert code == 1
        assert "causality" in capsys.readouterr().err

    def test_failed_check_is_exit_two(self, tmp_path, capsys):
        # horizon too short for the open side to empty the near region
        code = run_cli([
            "bifurcation", "--x0-plus", "1.0", "--x0-minus", "-1.0", "--R", "3.5",
            "--l", "15", "--T", "0.5", "--x-max", "40", "--out", str(tmp_path / "o"),
        ])
        assert code == 2


@pytest.fixture(scope="module")
def quasimode_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("qm")
    code = run_cli(["quasimode", "--x0", "-1.0",
                    "--l", "15", "20", "25", "30", "35",
                    "--out", str(out)])
    assert code == 0
    return out


class TestQuasimodeCommand:
    def test_outputs_and_manifest(self, quasimode_run):
        manifest = json.loads((quasimode_run / "manifest.json").read_text())
        assert manifest["all_pass"]
        for name in manifest["files"]:
            p = quasimode_run / name
            assert p.exists() and p.stat().st_size > 0
        listed = set(manifest["files"])
        on_disk = {p.name for p in quasimode_run.iterdir()} - {"manifest.json"}
        assert listed == on_disk

    def test_csv_schema(self, quasimode_run):
        lines = (quasimode_run / "quasimodes.csv").read_text().splitlines()
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header.split(",") == [
            "l", "sigma", "tau_sq", "bracket_lo", "bracket_hi",
            "residual_h0", "residual_h1", "residual_h2", "agmon_ratio",
        ]
        assert any(ln.startswith("# config=") for ln in lines)

    def test_fit_summary_negative_slopes(self, quasimode_run):
        fits = json.loads((quasimode_run / "decay_fits.json").read_text())["fits"]
        for key, fit in fits.items():
            assert fit["slope"] < 0, key

    def test_config_echo_regenerates(self, quasimode_run, tmp_path):
        lines = (quasimode_run / "quasimodes.csv").read_text().splitlines()
        echo = next(ln for ln in lines if ln.startswith("# config="))
        cfg = json.loads(echo.removeprefix("# config="))
        cfg["out_dir"] = str(tmp_path / "regen")
        cfg_path = tmp_path / "cfg.json"
        cfg_path.write_text(json.dumps(cfg))
        assert run_cli(["quasimode", "--config", str(cfg_path)]) == 0
        a = (quasimode_run / "quasimodes.csv").read_text().splitlines()
        b = (tmp_path / "regen" / "quasimodes.csv").read_text().splitlines()
        # identical numbers; only the embedded out_dir differs
        assert [ln for ln in a if not ln.startswith("#")] == \
               [ln for ln in b if not ln.startswith("#")]


class TestDeterminism:
    def test_identical_config_identical_bytes(self, tmp_path):
        out = tmp_path / "d"
        args = ["quasimode", "--x0", "-1.0", "--l", "18", "22", "26", "30", "34",
                "--out", str(out)]
        assert run_cli(args) == 0
        first = {name: (out / name).read_bytes()
                 for name in ("quasimodes.csv", "decay_curves.dat")}
        assert run_cli(args) == 0
        for name, blob in first.items():
            assert (out / name).read_bytes() == blob


class TestConfinementCommand:
    def test_run_and_schema(self, tmp_path):
        out = tmp_path / "conf"
        code = run_cli(["confinement", "--x0", "-1.0", "--l", "20", "--T", "40",
                        "--x-max", "16", "--out", str(out)])
        assert code == 0
        lines = (out / "evolution_l20.csv").read_text().splitlines()
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header.split(",") == ["t", "E", "E_R", "ratio_E_R", "LE1_running",
                                     "duhamel_gap"]
        summary = json.loads((out / "confinement_summary.json").read_text())
        per_l = summary["per_l"]["20"]
        assert per_l["min_ratio_E_R"] > 0.9
        assert per_l["half_bound_ok"]


class TestGrowthCommand:
    def test_budget_exhaustion_reported(self, tmp_path):
        out = tmp_path / "g"
        code = run_cli(["le1-growth", "--x0", "-1.0", "--l", "14", "18",
                        "--T", "25", "--x-max", "12", "--A", "1e9", "--k", "1",
                        "--out", str(out)])
        assert code == 0
        summary = json.loads((out / "le1_growth_summary.json").read_text())
        assert summary["j_star"] is None
        assert summary["reason"] == "budget-exhausted"


class TestBifurcationCommand:
    def test_matched_split_with_frozen_thresholds(self, tmp_path):
        # near-region energy at t = 200: the open side drains below a tenth
        # while the trapped-side mode packet keeps over nine tenths
        out = tmp_path / "bif"
        code = run_cli([
            "bifurcation", "--x0-plus", "1.0", "--x0-minus", "-1.0", "--R", "3.5",
            "--l", "40", "--T", "200", "--x-max", "210", "--dt", "2.0",
            "--out", str(out),
        ])
        assert code == 0
        summary = json.loads((out / "bifurcation_summary.json").read_text())
        split = summary["split"]
        assert split["plus_bump_final_ratio"] < 0.1
        assert split["minus_quasimode_min_ratio"] > 0.9

    def test_needs_both_sides(self, tmp_path, capsys):
        code = run_cli(["bifurcation", "--x0-plus", "1.0", "--R", "3.5",
                        "--out", str(tmp_path / "b")])
        assert code == 1
        assert "x0_minus" in capsys.readouterr().err


class TestExceptionMapping:
    def test_convergence_failure_is_exit_three(self, tmp_path, capsys, monkeypatch):
        from warptrap import cli as cli_mod

        def boom(cfg):
            raise cli_mod.ConvergenceFailure("order estimate left the window")

        monkeypatch.setitem(cli_mod._COMMANDS, "multiplier-audit", boom)
        code = run_cli(["multiplier-audit", "--x0", "1.0",
                        "--out", str(tmp_path / "x")])
        assert code == 3
        assert "convergence" in capsys.readouterr().err


class TestMultiplierAuditCommand:
    def test_audit_passes(self, tmp_path):
        out = tmp_path / "mul"
        code = run_cli(["multiplier-audit", "--x0", "1.0", "--out", str(out)])
        assert code == 0
        lines = (out / "multiplier_checks.csv").read_text().splitlines()
        header = [ln for ln in lines if not ln.startswith("#")][0]
        assert header.split(",") == ["check", "params", "lhs", "rhs", "gap",
                                     "order", "passed"]
        rows = [ln for ln in lines if not ln.startswith(("#", "check"))]
        assert sum(1 for r in rows if r.startswith("ibp_")) >= 5

    def test_wrong_side_rejected(self, tmp_path, capsys):
        code = run_cli(["multiplier-audit", "--x0", "-1.0",
                        "--out", str(tmp_path / "m")])
        assert code == 1
        assert "x0" in capsys.readouterr().err
