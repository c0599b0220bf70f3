import numpy as np
import pytest

from gpdopt import objectives as O
from gpdopt.constraints import (
    RegionSpec,
    classify_critical_2d,
    hessian_definite,
    in_region,
    in_region_batch,
)


@pytest.fixture
def ex3():
    return O.example3()


class TestRegionSpec:
    @pytest.mark.parametrize("eps", [0.0, -1.0])
    def test_epsilon_positive(self, eps):
        with pytest.raises(ValueError):
            RegionSpec(eps, "minimum", [-1.0], [1.0])

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            RegionSpec(1.0, "sideways", [-1.0], [1.0])

    def test_saddle_needs_2d(self):
        spec = RegionSpec(1.0, "saddle2d", [-10.0], [10.0])
        with pytest.raises(ValueError):
            in_region([0.0], spec, O.example1())


class TestMembership:
    def test_example1(self):
        obj = O.example1()
        mn = RegionSpec.for_objective(obj, 1.0, "minimum")
        mx = RegionSpec.for_objective(obj, 1.0, "maximum")
        assert in_region([2.0], mn, obj) and not in_region([2.0], mx, obj)
        assert in_region([-1.0], mx, obj) and not in_region([-1.0], mn, obj)
        assert not in_region([0.0], mn, obj)

    def test_open_box(self):
        obj = O.example2()
        spec = RegionSpec(2.0, "gradient-only", [-np.pi / 2], [np.pi / 2])
        assert not in_region([np.pi / 2], spec, obj)

    def test_example3_maximum(self, ex3):
        assert in_region([3 / 8, -3 / 4], RegionSpec.for_objective(ex3, 1.0, "maximum"), ex3)

    def test_batch_matches_scalar(self, ex3):
        X = np.random.default_rng(0).uniform(-2, 2, size=(2000, 2))
        for mode in ("maximum", "minimum", "saddle2d", "inconclusive2d", "gradient-only"):
            spec = RegionSpec.for_objective(ex3, 1.0, mode)
            np.testing.assert_array_equal(in_region_batch(X, spec, ex3), [in_region(x, spec, ex3) for x in X])

    def test_example3_minimum_region_empty(self, ex3):
        # full 0.01 grid over the box: nowhere is the gradient small with D > 0 and f11 > 0
        g = np.arange(-10, 10.0001, 0.01)
        spec = RegionSpec.for_objective(ex3, 1.0, "minimum")
        total = 0
        for rows in np.array_split(g, 20):
            X = np.stack(np.meshgrid(rows, g, indexing="ij"), axis=-1).reshape(-1, 2)
            total += int(in_region_batch(X, spec, ex3).sum())
        assert total == 0


class TestClassify:
    @pytest.mark.parametrize(
        "x,label", [((0.375, -0.75), "maximum"), ((1, -1), "saddle"), ((0, -1), "saddle"), ((0, 0), "inconclusive")]
    )
    def test_example3(self, ex3, x, label):
        assert classify_critical_2d(np.array(x, dtype=float), ex3) == label

    def test_minimum(self):
        obj = O.ObjectiveSpec("bowl", 2, -1, 1, lambda x: x @ x, lambda x: 2 * x, lambda x: 2 * np.eye(2))
        assert classify_critical_2d(np.zeros(2), obj) == "minimum"

    def test_det_tol(self, ex3):
        x = np.array([0.01, 0.0])
        assert classify_critical_2d(x, ex3, det_tol=1e-3) == "inconclusive"
        assert classify_critical_2d(x, ex3, det_tol=0.0) != "inconclusive"

    def test_definiteness(self):
        assert hessian_definite(np.eye(2)) and not hessian_definite(-np.eye(2))
        assert hessian_definite(-np.eye(2), "negative")
        assert not hessian_definite(np.diag([1.0, -1.0]))
