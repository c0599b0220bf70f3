import numpy as np
import pytest

from gpdopt import gp, objectives
from gpdopt.constraints import RegionSpec, in_region, in_region_batch
from gpdopt.errors import InitializationError
from gpdopt.optimizer import make_log_target
from gpdopt.tmcmc import TmcmcConfig, additive_step, find_initial_point, mixture_step, run_chain, write_trace


def std_normal(x):
    return -0.5 * float(x @ x)


class TestConfig:
    @pytest.mark.parametrize(
        "kw",
        [
            {"n_iter": 0, "burn_in": 0},
            {"n_iter": 10, "burn_in": 10},
            {"n_iter": 10, "burn_in": 0, "p": 1.0},
            {"n_iter": 10, "burn_in": 0, "scales1": 0.0},
            {"n_iter": 10, "burn_in": 0, "kernel": "gibbs"},
            {"n_iter": 10, "burn_in": 0, "init_strategy": "best"},
        ],
    )
    def test_invalid(self, kw):
        with pytest.raises(ValueError):
            TmcmcConfig(**kw)

    def test_all_problems_reported(self):
        with pytest.raises(ValueError, match="p and q.*scales"):
            TmcmcConfig(10, 0, p=2.0, scales1=-1.0)

    def test_stored_count(self):
        assert TmcmcConfig(n_iter=120_000, burn_in=20_000, thin=10).n_stored == 10_000


class TestMoves:
    def test_additive_shares_one_innovation(self):
        # every coordinate moves by the same magnitude
        rng = np.random.default_rng(0)
        x = np.zeros(4)
        y, acc, _ = additive_step(x, lambda z: 0.0, np.ones(4), rng)
        assert acc
        assert np.allclose(np.abs(y), np.abs(y[0]))

    def test_additive_rejects_off_support(self):
        rng = np.random.default_rng(0)
        x = np.zeros(2)
        y, acc, lp = additive_step(x, lambda z: 0.0 if np.all(z == 0) else -np.inf, np.ones(2), rng, 0.0)
        assert not acc and np.array_equal(y, x) and lp == 0.0

    def test_mixture_reports_kinds(self):
        rng = np.random.default_rng(1)
        cfg = TmcmcConfig(10, 0, kernel="mixture")
        kinds = set()
        x = np.ones(2)
        lp = std_normal(x)
        for _ in range(200):
            x, _, lp, k = mixture_step(x, std_normal, cfg, rng, lp)
            kinds.update(k)
        assert kinds == {"additive", "multiplicative"}
        assert lp == pytest.approx(std_normal(x))


class TestStationarity:
    @pytest.mark.parametrize("kernel,scale", [("mixture", 1.0), ("additive", 1.5)])
    def test_standard_normal(self, kernel, scale):
        cfg = TmcmcConfig(n_iter=200_000, burn_in=10_000, thin=5, kernel=kernel, scales1=scale, scales2=scale, init=np.zeros(2))
        ch = run_chain(cfg, std_normal)
        assert np.all(np.abs(ch.samples.mean(axis=0)) < 0.05)
        assert np.all(np.abs(ch.samples.var(axis=0) - 1.0) < 0.1)

    def test_multiplicative_jacobian_on_positive_target(self):
        # Exp(1) on (0, inf): the multiplicative moves only keep this right with the |eps| Jacobian
        lt = lambda x: -float(x[0]) if x[0] > 0 else -np.inf
        cfg = TmcmcConfig(n_iter=200_000, burn_in=10_000, thin=5, kernel="mixture", scales1=0.5, scales2=0.5, init=np.ones(1))
        ch = run_chain(cfg, lt)
        assert ch.samples.mean() == pytest.approx(1.0, abs=0.05)
        assert ch.acceptance_rates["multiplicative_1"] > 0


class TestConstrained:
    def test_zero_violations(self):
        obj = objectives.example3()
        region = RegionSpec.for_objective(obj, 1.0, "maximum")
        cache = gp.build_cache(gp.Dataset.from_objective(obj, gp.default_design(2)), gp.GpHyperParams.default(2))
        cfg = TmcmcConfig(n_iter=20_000, burn_in=2_000, thin=5, scales1=0.5)
        ch = run_chain(cfg, make_log_target(cache, region, obj), region.lower, region.upper, lambda X: in_region_batch(X, region, obj))
        assert in_region(ch.init, region, obj)
        assert in_region_batch(ch.samples, region, obj).all()


class TestInit:
    def test_configured_init_used(self):
        cfg = TmcmcConfig(10, 0, init=np.array([0.5]))
        x, _, n = find_initial_point(cfg, std_normal)
        assert x.tolist() == [0.5] and n == 1

    def test_bad_init_falls_back_to_search(self):
        lt = lambda x: 0.0 if 1 < x[0] < 2 else -np.inf
        cfg = TmcmcConfig(10, 0, init=np.array([5.0]))
        x, _, _ = find_initial_point(cfg, lt, [-10.0], [10.0], rng=np.random.default_rng(0))
        assert 1 < x[0] < 2

    def test_empty_support(self):
        cfg = TmcmcConfig(10, 0, max_init_tries=5000)
        with pytest.raises(InitializationError, match="no point"):
            find_initial_point(cfg, lambda x: -np.inf, [-1.0], [1.0], rng=np.random.default_rng(0))

    def test_min_score(self):
        lt = lambda x: 0.0
        cfg = TmcmcConfig(10, 0, init_strategy="min-score", max_init_tries=20_000)
        x, _, n = find_initial_point(cfg, lt, [-1.0], [1.0], rng=np.random.default_rng(0), score_batch=lambda X: np.abs(X[:, 0] - 0.3))
        assert abs(x[0] - 0.3) < 1e-3 and n == 20_000


class TestDeterminism:
    def test_same_seed_same_chain(self):
        cfg = TmcmcConfig(n_iter=3000, burn_in=100, kernel="mixture", init=np.ones(3), seed=9)
        a, b = run_chain(cfg, std_normal), run_chain(cfg, std_normal)
        assert a.samples.tobytes() == b.samples.tobytes()

    def test_trace_file(self, tmp_path):
        cfg = TmcmcConfig(n_iter=200, burn_in=100, thin=10, init=np.zeros(2))
        ch = run_chain(cfg, std_normal)
        write_trace(tmp_path / "t.csv", ch)
        lines = (tmp_path / "t.csv").read_text().splitlines()
        assert lines[0] == "iter,x_1,x_2,log_post,move_accepted"
        assert len(lines) == 11
        row = lines[1].split(",")
        assert int(row[0]) == 110 and float(row[1]) == ch.samples[0, 0]
