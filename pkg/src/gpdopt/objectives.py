"""Benchmark objectives with analytic gradients and Hessians.

Evaluators for the built-in objectives broadcast over leading axes, so
``obj.grad(X)`` with ``X`` of shape ``(k, d)`` returns ``(k, d)``. User
objectives only have to handle a single point; set ``vectorized=False``.
"""

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Callable

import numpy as np
from scipy.optimize import least_squares


@dataclass(frozen=True)
class ObjectiveSpec:
    name: str
    d: int
    lower: np.ndarray
    upper: np.ndarray
    f: Callable
    grad: Callable
    hess: Callable
    sense: str = "minimize"
    vectorized: bool = False
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        lower = np.broadcast_to(np.asarray(self.lower, dtype=float), (self.d,)).copy()
        upper = np.broadcast_to(np.asarray(self.upper, dtype=float), (self.d,)).copy()
        if np.any(lower >= upper):
            raise ValueError(f"empty domain: lower={lower}, upper={upper}")
        if self.sense not in ("minimize", "maximize"):
            raise ValueError(f"sense must be 'minimize' or 'maximize', got {self.sense!r}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def grad_norm(self, x):
        return float(np.linalg.norm(self.grad(np.asarray(x, dtype=float))))

    def grad_norms(self, X):
        """Gradient norms at every row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.vectorized:
            return np.linalg.norm(self.grad(X), axis=-1)
        return np.array([np.linalg.norm(self.grad(x)) for x in X])

    def values(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.vectorized:
            return np.asarray(self.f(X), dtype=float)
        return np.array([self.f(x) for x in X], dtype=float)

    def hessians(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.vectorized:
            return np.asarray(self.hess(X), dtype=float)
        return np.array([self.hess(x) for x in X], dtype=float)


# Example 1: cubic with a maximum at -1 and a minimum at 2

def _cubic_f(x):
    x = np.asarray(x)[..., 0]
    return 2 * x**3 - 3 * x**2 - 12 * x + 6


def _cubic_grad(x):
    x = np.asarray(x)[..., 0]
    return (6 * (x - 2) * (x + 1))[..., None]


def _cubic_hess(x):
    x = np.asarray(x)[..., 0]
    return (6 * (2 * x - 1))[..., None, None]


def example1():
    return ObjectiveSpec("example1", 1, -10.0, 10.0, _cubic_f, _cubic_grad, _cubic_hess, vectorized=True)


def example2():
    return ObjectiveSpec(
        "example2",
        1,
        -10.0,
        10.0,
        lambda x: np.sin(np.asarray(x)[..., 0]),
        lambda x: np.cos(np.asarray(x)[..., 0])[..., None],
        lambda x: (-np.sin(np.asarray(x)[..., 0]))[..., None, None],
        vectorized=True,
    )


EXAMPLE2_MAXIMA = (np.pi / 2 - 2 * np.pi, np.pi / 2, np.pi / 2 + 2 * np.pi)
EXAMPLE2_MINIMA = (-np.pi / 2 - 2 * np.pi, -np.pi / 2, -np.pi / 2 + 2 * np.pi)


# Example 3: x1 x2 (x1 + x2) (1 + x2), four critical points

def _ex3_f(x):
    x = np.asarray(x)
    x1, x2 = x[..., 0], x[..., 1]
    return x1 * x2 * (x1 + x2) * (1 + x2)


def _ex3_grad(x):
    x = np.asarray(x)
    x1, x2 = x[..., 0], x[..., 1]
    g1 = x2 * (2 * x1 + x2) * (x2 + 1)
    g2 = x1 * (3 * x2**2 + 2 * x2 * (x1 + 1) + x1)
    return np.stack([g1, g2], axis=-1)


def _ex3_hess(x):
    x = np.asarray(x)
    x1, x2 = x[..., 0], x[..., 1]
    h11 = 2 * x2 * (x2 + 1)
    h12 = 4 * x1 * x2 + 3 * x2**2 + 2 * (x1 + x2)
    h22 = 2 * x1 * (3 * x2 + x1 + 1)
    return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)


def example3():
    return ObjectiveSpec("example3", 2, -10.0, 10.0, _ex3_f, _ex3_grad, _ex3_hess, vectorized=True)


EXAMPLE3_CRITICAL = {
    "maximum": [(3 / 8, -3 / 4)],
    "saddle": [(0.0, -1.0), (1.0, -1.0)],
    "inconclusive": [(0.0, 0.0)],
}


# Example 4: Poisson regression log-likelihood on the AIDS death counts

DATA_FILE = "aids_deaths.txt"


def load_aids_counts(path=None):
    """Read the 14 quarterly counts; ``path=None`` uses the bundled copy."""
    if path is None:
        text = resources.files("gpdopt").joinpath("data").joinpath(DATA_FILE).read_text()
    else:
        p = Path(path)
        if not p.is_file():
            raise FileNotFoundError(f"Example 4 data file not found: {p}")
        text = p.read_text()
    counts = [int(tok) for tok in text.split()]
    if len(counts) != 14 or min(counts) < 0:
        raise ValueError(f"expected 14 nonnegative counts, got {counts}")
    return np.array(counts, dtype=float)


def example4(data_path=None):
    y = load_aids_counts(data_path)
    t = np.arange(1, y.size + 1, dtype=float)

    def eta(x):
        x = np.asarray(x)
        return x[..., 0, None] + t * x[..., 1, None]

    def f(x):
        e = eta(x)
        return np.sum(-np.exp(e) + y * e, axis=-1)

    def grad(x):
        r = y - np.exp(eta(x))
        return np.stack([np.sum(r, axis=-1), np.sum(t * r, axis=-1)], axis=-1)

    def hess(x):
        lam = np.exp(eta(x))
        h11 = -np.sum(lam, axis=-1)
        h12 = -np.sum(t * lam, axis=-1)
        h22 = -np.sum(t * t * lam, axis=-1)
        return np.stack([np.stack([h11, h12], -1), np.stack([h12, h22], -1)], -2)

    return ObjectiveSpec(
        "example4", 2, -10.0, 10.0, f, grad, hess, sense="maximize", vectorized=True, params={"counts": y}
    )


EXAMPLE4_REFERENCE_MLE = (0.3396, 0.2565)


def fisher_scoring_iterates(obj, x0=(0.0, 0.0), steps=10):
    """Newton/Fisher-scoring iterates for the (concave) Poisson objective."""
    x = np.asarray(x0, dtype=float)
    out = [x.copy()]
    for _ in range(steps):
        x = x - np.linalg.solve(obj.hess(x), obj.grad(x))
        out.append(x.copy())
    return out


# Portable counter-based generator (SplitMix64) so that Example 5 instances
# reproduce bit-for-bit in any language.

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)


class SplitMix64:
    """Counter-based SplitMix64.

    Output ``i`` (0-based) is ``mix(seed + (i + 1) * 0x9E3779B97F4A7C15)``
    modulo 2**64 with the standard finalizer (shifts 30/27/31, multipliers
    0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). Uniforms take the top 53
    bits; normals use Box-Muller on consecutive uniform pairs
    ``(u1, u2)`` as ``sqrt(-2 log(1 - u1)) * cos(2 pi u2)``.
    """

    def __init__(self, seed):
        self.seed = np.uint64(int(seed) % 2**64)
        self.counter = 0

    def next_u64(self, count):
        idx = np.arange(self.counter + 1, self.counter + 1 + count, dtype=np.uint64)
        self.counter += count
        with np.errstate(over="ignore"):
            z = self.seed + idx * _GOLDEN
            z = (z ^ (z >> np.uint64(30))) * _MIX1
            z = (z ^ (z >> np.uint64(27))) * _MIX2
        return z ^ (z >> np.uint64(31))

    def uniform(self, count):
        return (self.next_u64(count) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal(self, count):
        u = self.uniform(2 * count).reshape(count, 2)
        return np.sqrt(-2.0 * np.log1p(-u[:, 0])) * np.cos(2.0 * np.pi * u[:, 1])


@dataclass(frozen=True)
class NlsInstance:
    m: int
    Z: np.ndarray
    y: np.ndarray
    theta0: np.ndarray
    sigma0_sq: float

    @property
    def d(self):
        return self.Z.shape[1]


EXAMPLE5_M = {2: 10, 5: 10, 10: 20, 50: 75, 100: 200}


def nls_means(Z, x):
    """``mu_i = sum_j exp(-z_ij x_j^2) + z_ij x_{d-j+1}``; ``x`` may carry leading axes."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-Z * (x[..., None, :] ** 2))
    return np.sum(e + Z * x[..., None, ::-1], axis=-1)


def generate_nls_instance(d, m=None, seed=0, sigma0_sq=0.1):
    """Draw ``theta0 ~ U(-1,1)^d``, ``Z ~ N(0,1)``, ``y ~ N(mu(theta0), sigma0_sq)`` in that stream order."""
    m = EXAMPLE5_M.get(d, max(d, 10)) if m is None else int(m)
    if m < d:
        raise ValueError(f"need at least d={d} observations, got m={m}")
    gen = SplitMix64(seed)
    theta0 = 2.0 * gen.uniform(d) - 1.0
    Z = gen.normal(m * d).reshape(m, d)
    noise = gen.normal(m)
    y = nls_means(Z, theta0) + np.sqrt(sigma0_sq) * noise
    return NlsInstance(m=m, Z=Z, y=y, theta0=theta0, sigma0_sq=sigma0_sq)


def nls_objective(inst, name="example5"):
    Z, y = inst.Z, inst.y
    d = inst.d
    Zrev = Z[:, ::-1]

    def parts(x):
        x = np.asarray(x, dtype=float)
        xs = x[..., None, :]
        e = np.exp(-Z * xs**2)
        r = y - np.sum(e + Z * x[..., None, ::-1], axis=-1)
        # d mu_i / d x_k: the exp term in slot k plus the linear term whose
        # index reverses to k
        J = -2.0 * Z * xs * e + Zrev
        return x, e, r, J

    def f(x):
        _, _, r, _ = parts(x)
        return np.sum(r * r, axis=-1)

    def grad(x):
        _, _, r, J = parts(x)
        return -2.0 * np.einsum("...i,...ik->...k", r, J)

    def hess(x):
        x, e, r, J = parts(x)
        curv = (-2.0 * Z + 4.0 * Z**2 * x[..., None, :] ** 2) * e
        diag = np.einsum("...i,...ik->...k", r, curv)
        Hm = 2.0 * np.einsum("...ik,...il->...kl", J, J)
        idx = np.arange(d)
        Hm[..., idx, idx] -= 2.0 * diag
        return Hm

    return ObjectiveSpec(name, d, -10.0, 10.0, f, grad, hess, vectorized=True, params={"instance": inst})


def nls_jacobian(inst, x):
    """``d mu / d x`` (m x d) at a single point."""
    x = np.asarray(x, dtype=float)
    e = np.exp(-inst.Z * x**2)
    return -2.0 * inst.Z * x * e + inst.Z[:, ::-1]


def solver_iterates(inst, x0=None, steps=20):
    """Early iterates of a trust-region least-squares solve, one per evaluation budget ``1..steps``.

    Used to pick a sensible, unconverged chain start, the way Fisher-scoring
    iterates are used for Example 4.
    """
    x0 = np.zeros(inst.d) if x0 is None else np.asarray(x0, dtype=float)
    resid = lambda x: inst.y - nls_means(inst.Z, x)
    jac = lambda x: -nls_jacobian(inst, x)
    out = [x0.copy()]
    for k in range(1, steps + 1):
        sol = least_squares(resid, x0, jac=jac, method="trf", max_nfev=k)
        out.append(sol.x.copy())
    return out


def example5(d=2, m=None, seed=0):
    inst = generate_nls_instance(d, m, seed)
    return nls_objective(inst), inst


_REGISTRY = {
    "example1": example1,
    "example2": example2,
    "example3": example3,
    "example4": example4,
    "example5": lambda d=2, m=None, seed=0: example5(d, m, seed)[0],
}


def register(name, factory):
    """Make ``factory`` (returning an :class:`ObjectiveSpec`) available by name."""
    if name in _REGISTRY:
        raise ValueError(f"objective {name!r} is already registered")
    _REGISTRY[name] = factory


def get_objective(name, **params):
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown objective {name!r}; known: {sorted(_REGISTRY)}") from None
    return factory(**params)


def registered():
    return sorted(_REGISTRY)
