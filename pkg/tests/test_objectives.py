import numpy as np
import pytest

from gpdopt import objectives as O


def fd_grad(f, x, h=1e-6):
    return np.array([(f(x + h * e) - f(x - h * e)) / (2 * h) for e in np.eye(x.size)])


ALL = [
    ("example1", lambda: O.example1()),
    ("example2", lambda: O.example2()),
    ("example3", lambda: O.example3()),
    ("example4", lambda: O.example4()),
    ("example5-d2", lambda: O.example5(2)[0]),
    ("example5-d5", lambda: O.example5(5)[0]),
    ("example5-d10", lambda: O.example5(10)[0]),
]


class TestDerivatives:
    @pytest.mark.parametrize("name,make", ALL, ids=[a for a, _ in ALL])
    def test_finite_differences(self, name, make):
        obj = make()
        rng = np.random.default_rng(0)
        span = 0.5 if name == "example4" else 2.0
        for _ in range(5):
            x = rng.uniform(-span, span, size=obj.d)
            g = obj.grad(x)
            fd = fd_grad(obj.f, x, 1e-6 * max(1.0, np.max(np.abs(x))))
            np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5 * max(1.0, np.max(np.abs(g))))
            H = obj.hess(x)
            fdH = np.array([(obj.grad(x + 1e-6 * e) - obj.grad(x - 1e-6 * e)) / 2e-6 for e in np.eye(obj.d)])
            np.testing.assert_allclose(H, fdH, rtol=1e-5, atol=1e-5 * max(1.0, np.max(np.abs(H))))
            np.testing.assert_allclose(H, H.T, rtol=1e-12, atol=1e-12 * max(1.0, np.max(np.abs(H))))

    @pytest.mark.parametrize("name,make", ALL, ids=[a for a, _ in ALL])
    def test_vectorized_matches_pointwise(self, name, make):
        obj = make()
        X = np.random.default_rng(1).uniform(-1, 1, size=(6, obj.d))
        np.testing.assert_allclose(obj.grad_norms(X), [np.linalg.norm(obj.grad(x)) for x in X])
        np.testing.assert_allclose(obj.values(X), [obj.f(x) for x in X])


class TestKnownPoints:
    def test_example1(self):
        obj = O.example1()
        assert obj.grad_norm([-1.0]) == 0.0 and obj.grad_norm([2.0]) == 0.0
        assert obj.hess(np.array([2.0]))[0, 0] == 18.0

    def test_example2(self):
        obj = O.example2()
        for x in O.EXAMPLE2_MAXIMA + O.EXAMPLE2_MINIMA:
            assert obj.grad_norm([x]) < 1e-12

    @pytest.mark.parametrize("label", ["maximum", "saddle", "inconclusive"])
    def test_example3_critical(self, label):
        from gpdopt.constraints import classify_critical_2d

        obj = O.example3()
        for x in O.EXAMPLE3_CRITICAL[label]:
            assert obj.grad_norm(x) < 1e-12
            assert classify_critical_2d(np.array(x), obj) == label


class TestExample4:
    def test_data(self):
        y = O.load_aids_counts()
        assert y.size == 14 and y.min() >= 0

    def test_reference_mle_gradient(self):
        obj = O.example4()
        assert obj.grad_norm(O.EXAMPLE4_REFERENCE_MLE) == pytest.approx(0.755344, abs=1e-6)

    def test_published_estimate_gradient(self):
        # published estimate, printed to 6 digits
        assert O.example4().grad_norm([0.364422, 0.254428]) == pytest.approx(0.395978, abs=5e-3)

    def test_fisher_scoring_converges(self):
        obj = O.example4()
        it = O.fisher_scoring_iterates(obj, (np.log(obj.params["counts"].mean()), 0.0), 8)
        assert obj.grad_norm(it[-1]) < 1e-9
        np.testing.assert_allclose(it[-1], O.EXAMPLE4_REFERENCE_MLE, atol=1e-4)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            O.example4(tmp_path / "nope.txt")


class TestExample5:
    def test_splitmix_reference_vector(self):
        out = O.SplitMix64(1234567).next_u64(5).tolist()
        assert out == [6457827717110365317, 3203168211198807973, 9817491932198370423, 4593380528125082431, 16408922859458223821]

    @pytest.mark.parametrize("d", [2, 5, 10, 50, 100])
    def test_regeneration_bit_identical(self, d):
        a, b = O.generate_nls_instance(d, seed=3), O.generate_nls_instance(d, seed=3)
        assert a.Z.tobytes() == b.Z.tobytes() and a.y.tobytes() == b.y.tobytes()
        assert a.m == O.EXAMPLE5_M[d]
        assert np.all(np.abs(a.theta0) <= 1)

    def test_seeds_differ(self):
        assert not np.array_equal(O.generate_nls_instance(2, seed=0).y, O.generate_nls_instance(2, seed=1).y)

    def test_uniform_and_normal_moments(self):
        g = O.SplitMix64(11)
        u = g.uniform(200_000)
        z = g.normal(200_000)
        assert abs(u.mean() - 0.5) < 0.005 and abs(z.mean()) < 0.01 and abs(z.var() - 1) < 0.01

    def test_solver_iterates_reduce_gradient(self):
        obj, inst = O.example5(2)
        it = O.solver_iterates(inst, steps=10)
        assert obj.grad_norm(it[-1]) < obj.grad_norm(it[0])


class TestRegistry:
    def test_unknown(self):
        with pytest.raises(KeyError):
            O.get_objective("nope")

    def test_register_user_objective(self):
        spec = O.ObjectiveSpec("quad", 1, -1, 1, lambda x: x[0] ** 2, lambda x: 2 * x, lambda x: np.array([[2.0]]))
        name = "user-quad-test"
        if name not in O.registered():
            O.register(name, lambda: spec)
        assert O.get_objective(name).grad_norm([0.5]) == 1.0
        with pytest.raises(ValueError):
            O.register(name, lambda: spec)

    def test_bad_domain(self):
        with pytest.raises(ValueError):
            O.ObjectiveSpec("bad", 1, 1.0, 1.0, None, None, None)
