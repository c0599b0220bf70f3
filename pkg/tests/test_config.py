import numpy as np
import pytest

from gpdopt.config import LONG_RUNNING, PRESETS, ConfigError, parse_config, preset_text, resolve

MINIMAL = "[run]\nobjective = example1\nmode = minimum\n"


class TestDefaults:
    def test_minimal(self):
        cfg = parse_config(MINIMAL)
        assert cfg.epsilon == 1.0 and cfg.S == 40 and cfg.M == 1000 and cfg.workers == 1
        assert cfg.hp.a == cfg.hp.b == 0.1
        assert np.array_equal(cfg.hp.beta0, np.zeros(2)) and np.array_equal(cfg.hp.Sigma0, np.eye(2))
        assert cfg.schedule(1) == pytest.approx(1 / 100)
        assert cfg.tmcmc.n_stored == 10_000
        _, obj, region, data = resolve(cfg)
        assert data.n == 10 and data.X[0, 0] == -10.0 and data.X[-1, 0] == 8.0
        assert region.lower.tolist() == [-10.0] and region.upper.tolist() == [10.0]

    def test_example5_d50(self):
        cfg = parse_config("[run]\nobjective = example5\nmode = gradient-only\n[objective]\nd = 50\n")
        assert cfg.epsilon == 100.0
        for k in (1, 2, 7):
            assert cfg.schedule(k) == pytest.approx(200 / np.log(10 + k - 1))

    def test_file_path(self, tmp_path):
        p = tmp_path / "c.ini"
        p.write_text(MINIMAL)
        assert parse_config(str(p)).objective == "example1"


class TestValidation:
    def test_negative_epsilon(self):
        with pytest.raises(ConfigError, match="epsilon"):
            parse_config(MINIMAL + "epsilon = -1\n")

    def test_all_problems_listed(self):
        text = MINIMAL + "epsilon = -1\nbogus = 3\n[tmcmc]\np = 1.5\n[extra]\nx = 1\n"
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        msg = "\n".join(info.value.problems)
        for frag in ("epsilon", "unknown key run.bogus", "tmcmc.p", "unknown section [extra]"):
            assert frag in msg

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            parse_config(str(tmp_path / "nope.ini"))

    @pytest.mark.parametrize("extra", ["workers = 0\n", "mode2 = x\n", "stages = -1\n"])
    def test_rejects(self, extra):
        with pytest.raises(ConfigError):
            parse_config(MINIMAL + extra)

    def test_dimension_mismatch(self):
        with pytest.raises(ConfigError, match="dimension"):
            parse_config(MINIMAL + "[objective]\nd = 3\n")


class TestPresets:
    @pytest.mark.parametrize("name", sorted(PRESETS))
    def test_round_trip(self, name):
        cfg = parse_config(preset_text(name))
        assert cfg.objective == PRESETS[name]["run"]["objective"]

    def test_long_running_flagged(self):
        assert set(LONG_RUNNING) <= set(PRESETS)
        assert "long-running" in preset_text("example5-d100").lower()

    def test_saddle_starts(self):
        a = parse_config(preset_text("example3-saddle-a"))
        b = parse_config(preset_text("example3-saddle-b"))
        assert a.tmcmc.init.tolist() == [0.1, -1.1] and b.tmcmc.init.tolist() == [1.1, -1.1]
