import textwrap

import numpy as np
import pytest

from stochwave import cli, container
from stochwave import config as cfgmod
from stochwave.experiments import run_experiment

ORACLE = textwrap.dedent("""
    [run]
    kind = oracle-compare
    d = 2
    M = 8
    n = 16
    eps = 0.25
    seed = 3
    R = 2
    cfl = 0.1
    T = 0.5
    width = 1
    """)

LIFT = textwrap.dedent("""
    [run]
    kind = lift
    check = snapshot
    d = 2
    M = 8
    n = 32
    eps = 0.25
    seed = 4
    """)


def _with(text, **overrides):
    """Replace or append ``key = value`` lines in the ``[run]`` section."""
    lines = text.strip().splitlines()
    for key, value in overrides.items():
        hit = [i for i, ln in enumerate(lines) if ln.split("=")[0].strip() == key]
        if hit:
            lines[hit[0]] = f"{key} = {value}"
        else:
            lines.insert(1, f"{key} = {value}")
    return "\n".join(lines) + "\n"


def _write(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


class TestParsing:
    def test_well_formed_config_has_no_diagnostics(self):
        (cfg,) = cfgmod.loads(ORACLE)
        assert cfgmod.validate(cfg) == []
        assert cfg.check == "oracle" and cfg.M == 8.0 and cfg.n == 16

    def test_unknown_key(self):
        with pytest.raises(cfgmod.ConfigError) as exc:
            cfgmod.loads(ORACLE + "colour = red\n")
        assert exc.value.errors == ["colour: unknown key"]

    def test_unknown_section(self):
        with pytest.raises(cfgmod.ConfigError, match="unknown section"):
            cfgmod.loads(ORACLE + "[extra]\n")

    def test_dt_above_cfl(self):
        with pytest.raises(cfgmod.ConfigError, match="dt: .* exceeds the CFL limit"):
            cfgmod.loads(_with(ORACLE, dt=0.5))

    def test_cone_apex_too_late(self):
        text = _with(ORACLE, kind="cone", check="local-gronwall", T=2)
        with pytest.raises(cfgmod.ConfigError, match="cone apex"):
            cfgmod.loads(text)

    def test_cone_radius_order(self):
        text = _with(ORACLE, kind="cone", L=2, R=1)
        with pytest.raises(cfgmod.ConfigError, match="R >= L"):
            cfgmod.loads(text)

    def test_all_errors_reported_together(self):
        with pytest.raises(cfgmod.ConfigError) as exc:
            cfgmod.loads(_with(ORACLE, d=4, n=7))
        assert len(exc.value.errors) == 2

    def test_sub_runs_inherit_base(self):
        cfgs = cfgmod.loads(ORACLE + "[run.a]\n[run.b]\nseed = 9\n")
        assert [c.name for c in cfgs] == ["a", "b"]
        assert [c.seed for c in cfgs] == [3, 9]
        assert cfgs[0].digest() != cfgs[1].digest()

    def test_seed_override(self):
        (cfg,) = cfgmod.loads(ORACLE, seed=42)
        assert cfg.seed == 42

    @pytest.mark.parametrize("raw, value", [("true", True), ("off", False)])
    def test_booleans(self, raw, value):
        (cfg,) = cfgmod.loads(ORACLE + f"cubic = {raw}\n")
        assert cfg.cubic is value

    def test_data_file_checked(self, tmp_path):
        with pytest.raises(cfgmod.ConfigError, match="data:"):
            cfgmod.loads(ORACLE + f"data = {tmp_path / 'missing.swfc'}\n")
        snap = container.Snapshot(2, 8.0, 16, 0.25, 3, {"u0": np.zeros((16, 16))})
        container.save(tmp_path / "d.swfc", snap)
        with pytest.raises(cfgmod.ConfigError, match="missing fields"):
            cfgmod.loads(ORACLE + f"data = {tmp_path / 'd.swfc'}\n")


class TestCommandLine:
    def test_config_error_exit_code(self, tmp_path, capsys):
        path = _write(tmp_path, ORACLE + "colour = red\n")
        assert cli.main(["oracle-compare", "--config", path]) == cli.EXIT_CONFIG
        assert "colour: unknown key" in capsys.readouterr().err

    def test_kind_mismatch_is_config_error(self, tmp_path):
        path = _write(tmp_path, ORACLE)
        assert cli.main(["lift", "--config", path]) == cli.EXIT_CONFIG

    def test_failed_check_exit_code(self, tmp_path):
        path = _write(tmp_path, ORACLE + "tol = 1e-30\n")
        assert cli.main(["oracle-compare", "--config", path]) == cli.EXIT_FAIL

    def test_oracle_compare_passes(self, tmp_path, capsys):
        path = _write(tmp_path, ORACLE)
        out = tmp_path / "out"
        assert cli.main(["oracle-compare", "--config", path, "--out", str(out)]) == cli.EXIT_PASS
        summary = (out / "summary.txt").read_text()
        assert "passed = true" in summary and "version = " in summary
        assert (out / "report.txt").exists()

    def test_lift_container_is_reproducible(self, tmp_path):
        path = _write(tmp_path, LIFT)
        for sub in ("a", "b"):
            assert cli.main(["lift", "--config", path, "--out", str(tmp_path / sub)]) == cli.EXIT_PASS
        a = (tmp_path / "a" / "lift.swfc").read_bytes()
        assert a == (tmp_path / "b" / "lift.swfc").read_bytes()
        assert container.from_bytes(a).seed == 4

    def test_threads_do_not_change_results(self, tmp_path):
        path = _write(tmp_path, LIFT + "[run.x]\n[run.y]\nseed = 5\n")
        for sub, threads in (("serial", "1"), ("pool", "2")):
            cli.main(["lift", "--config", path, "--out", str(tmp_path / sub), "--threads", threads])
        for run in ("x", "y"):
            assert ((tmp_path / "serial" / run / "lift.swfc").read_bytes()
                    == (tmp_path / "pool" / run / "lift.swfc").read_bytes())


class TestExperiments:
    def test_equal_radii_cone_passes(self):
        text = textwrap.dedent("""
            [run]
            kind = cone
            check = agreement
            d = 2
            M = 8
            n = 32
            eps = 0.25
            seed = 2
            R = 1
            L = 1
            cfl = 0.2
            n_apexes = 2
            """)
        (cfg,) = cfgmod.loads(text)
        res = run_experiment(cfg)
        assert res.passed, res.lines
