import numpy as np
import pytest

from gpdopt import _accel, gp, objectives
from gpdopt.kernel import gram

BACKENDS = [False, True] if _accel.HAVE_NUMBA else [False]


@pytest.fixture(params=BACKENDS, ids=lambda b: "numba" if b else "numpy")
def use_numba(request):
    return request.param


def random_instance(rng, n=None, d=None, max_cond=1e6):
    """Random smooth-objective dataset and hyperparameters.

    Inputs are redrawn (shrinking ``n`` after repeated misses) until the Gram
    matrix has condition number below ``max_cond``; beyond that a
    dense-inverse oracle is itself inaccurate.
    """
    d = int(rng.integers(1, 6)) if d is None else d
    n = int(rng.integers(max(4, d + 2), 31)) if n is None else n
    ls = gp.LengthScales(rng.uniform(0.5, 3.0, size=d))
    tries = 0
    while True:
        X = rng.uniform(-3, 3, size=(n, d))
        if np.linalg.cond(gram(X, ls)) < max_cond:
            break
        tries += 1
        if tries % 20 == 0 and n > d + 2:
            n -= 1
    w = rng.normal(size=d)
    f = np.sin(X @ w) + 0.3 * np.sum(X**2, axis=1)
    hp = gp.GpHyperParams(
        a=float(rng.uniform(0.05, 2.0)),
        b=float(rng.uniform(0.05, 2.0)),
        beta0=rng.normal(size=d + 1),
        Sigma0=np.diag(rng.uniform(0.5, 2.0, size=d + 1)),
        ls=ls,
        jitter=0.0,
    )
    return gp.Dataset(X, f), hp


@pytest.fixture
def example3():
    return objectives.example3()


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
