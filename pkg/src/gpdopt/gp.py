"""Posterior of the gradient process given function evaluations.

A :class:`PosteriorCache` holds every factorization needed to evaluate, at any
``x_star``, the marginal (Student-t) posterior of the gradient of the latent
process and in particular its log density at the zero vector. That density is
the target of all the sampling in this package.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular
from scipy.special import gammaln

from . import _accel, _kernels
from .errors import FactorizationError, PosteriorBreakdown
from .kernel import LengthScales, gram, mean_basis

log = logging.getLogger(__name__)

MIN_ROW_DISTANCE = 1e-9
DEDUP_DISTANCE = 1e-6
JITTER_CEILING = 1e-4


def default_design(d, n=10, start=-10.0, step=2.0):
    """Diagonal design ``x_ik = start + step * (i - 1)`` used by all the experiments."""
    col = start + step * np.arange(n)
    return np.repeat(col[:, None], d, axis=1)


def _min_pair(X):
    diff = X[:, None, :] - X[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    np.fill_diagonal(dist, np.inf)
    i, j = np.unravel_index(np.argmin(dist), dist.shape)
    return (int(min(i, j)), int(max(i, j))), float(dist[i, j])


@dataclass(frozen=True)
class Dataset:
    X: np.ndarray
    f: np.ndarray

    def __post_init__(self):
        X = np.atleast_2d(np.asarray(self.X, dtype=float)).copy()
        f = np.asarray(self.f, dtype=float).reshape(-1).copy()
        if X.shape[0] != f.size:
            raise ValueError(f"X has {X.shape[0]} rows but f has {f.size} values")
        if X.shape[0] < 2:
            raise ValueError("a dataset needs at least two points")
        if not np.all(np.isfinite(f)) or not np.all(np.isfinite(X)):
            raise ValueError("dataset contains non-finite entries")
        X.setflags(write=False)
        f.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "f", f)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @classmethod
    def from_objective(cls, objective, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return cls(X, np.array([objective.f(x) for x in X]))

    def augment(self, points, values, tol=DEDUP_DISTANCE, limit=None):
        """Append rows, silently dropping any within ``tol`` of an existing or earlier row.

        At most ``limit`` rows are appended, taken in order. Returns the new
        dataset and the indices (into ``points``) that were kept.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        values = np.asarray(values, dtype=float).reshape(-1)
        if points.size and points.shape[1] != self.d:
            raise ValueError("augmentation points have the wrong dimension")
        rows = list(self.X)
        kept = []
        for i, p in enumerate(points):
            if limit is not None and len(kept) >= limit:
                break
            if min(np.linalg.norm(p - r) for r in rows) < tol:
                continue
            rows.append(p)
            kept.append(i)
        if not kept:
            return self, kept
        return Dataset(np.vstack([self.X, points[kept]]), np.concatenate([self.f, values[kept]])), kept


@dataclass(frozen=True)
class GpHyperParams:
    """Conjugate priors: ``beta | sigma^2 ~ N(beta0, sigma^2 Sigma0)``, ``sigma^-2 ~ Gamma(a, b)``.

    ``jitter=None`` means the default policy (1e-8 times the mean Gram
    diagonal). ``corrected_shape`` switches the posterior gamma shape from
    ``a + d/2`` to ``a + n/2``.
    """

    a: float
    b: float
    beta0: np.ndarray
    Sigma0: np.ndarray
    ls: LengthScales
    jitter: float | None = None
    corrected_shape: bool = False

    def __post_init__(self):
        if not (self.a > 0 and self.b > 0):
            raise ValueError(f"gamma prior needs a > 0 and b > 0, got a={self.a}, b={self.b}")
        d = self.ls.d
        beta0 = np.asarray(self.beta0, dtype=float).reshape(-1)
        Sigma0 = np.atleast_2d(np.asarray(self.Sigma0, dtype=float))
        if beta0.size != d + 1 or Sigma0.shape != (d + 1, d + 1):
            raise ValueError(f"beta0/Sigma0 must have dimension d+1={d + 1}")
        if not np.allclose(Sigma0, Sigma0.T):
            raise ValueError("Sigma0 must be symmetric")
        try:
            np.linalg.cholesky(Sigma0)
        except np.linalg.LinAlgError:
            raise ValueError("Sigma0 must be positive definite") from None
        if self.jitter is not None and self.jitter < 0:
            raise ValueError("jitter must be nonnegative")
        object.__setattr__(self, "beta0", beta0)
        object.__setattr__(self, "Sigma0", Sigma0)

    @classmethod
    def default(cls, d, lengthscale=1.0, **kw):
        return cls(
            a=0.1,
            b=0.1,
            beta0=np.zeros(d + 1),
            Sigma0=np.eye(d + 1),
            ls=LengthScales.isotropic(d, lengthscale),
            **kw,
        )

    @property
    def d(self):
        return self.ls.d


@dataclass(frozen=True, eq=False)
class PosteriorCache:
    data: Dataset
    hp: GpHyperParams
    H: np.ndarray
    chol22: np.ndarray
    cholM: np.ndarray
    beta_hat: np.ndarray
    prec_beta: np.ndarray
    gamma_shape: float
    gamma_rate: float
    Q: float
    jitter: float
    # derived pieces consumed by the kernels
    W: np.ndarray = field(repr=False)
    WH: np.ndarray = field(repr=False)
    resid_w: np.ndarray = field(repr=False)
    Pinv: np.ndarray = field(repr=False)
    log_const: float = 0.0
    log_rate: float = 0.0

    @property
    def inv_scale(self):
        return float(np.exp(-0.5 * (np.log(2.0) + self.log_rate)))

    @property
    def d(self):
        return self.data.d

    @property
    def n(self):
        return self.data.n

    def kernel_args(self):
        return (
            self.data.X,
            self.hp.ls.inv,
            self.W,
            self.WH,
            self.resid_w,
            self.beta_hat[1:].copy(),
            self.Pinv,
        )


def _jitter_ladder(base):
    ladder = [base]
    j = base if base > 0 else 1e-10
    while j * 10.0 <= JITTER_CEILING * (1 + 1e-9):
        j *= 10.0
        ladder.append(j)
    return ladder


def _cholesky_with_jitter(K, base):
    eye = np.eye(K.shape[0])
    for jitter in _jitter_ladder(base):
        try:
            return np.linalg.cholesky(K + jitter * eye), jitter
        except np.linalg.LinAlgError:
            continue
    return None, jitter


def build_cache(data, hp):
    """Factorize everything the derivative posterior needs for ``data``."""
    if hp.d != data.d:
        raise ValueError(f"hyperparameters are for d={hp.d}, data has d={data.d}")
    n, d = data.n, data.d
    pair, dist = _min_pair(data.X)
    if dist <= MIN_ROW_DISTANCE:
        # jitter would mask an exactly singular Gram matrix, so refuse up front
        raise FactorizationError(
            f"inputs {pair} coincide (distance {dist:.3g}); Gram matrix is singular",
            pair=pair,
            distance=dist,
        )
    K = gram(data.X, hp.ls)
    base = hp.jitter if hp.jitter is not None else 1e-8 * float(np.mean(np.diag(K)))
    L22, jitter = _cholesky_with_jitter(K, base)
    if L22 is None:
        pair, dist = _min_pair(data.X)
        raise FactorizationError(
            f"Gram matrix not positive definite with jitter up to {JITTER_CEILING:g}; "
            f"closest inputs are rows {pair} at distance {dist:.3g}",
            pair=pair,
            distance=dist,
        )
    K = K + jitter * np.eye(n)
    H = mean_basis(data.X)
    M = H @ hp.Sigma0 @ H.T + K
    try:
        LM = np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        pair, dist = _min_pair(data.X)
        raise FactorizationError(
            "marginal covariance not positive definite", pair=pair, distance=dist
        ) from None

    r0 = data.f - H @ hp.beta0
    zq = solve_triangular(LM, r0, lower=True)
    # Q can exceed the float range when f is huge; keep its log exactly
    zmax = float(np.max(np.abs(zq)))
    if zmax > 0:
        log_Q = 2.0 * np.log(zmax) + np.log(float(np.sum((zq / zmax) ** 2)))
    else:
        log_Q = -np.inf
    with np.errstate(over="ignore"):
        Q = float(np.exp(log_Q))

    W = solve_triangular(L22, np.eye(n), lower=True)
    WH = W @ H
    Wf = W @ data.f
    S0_chol = np.linalg.cholesky(hp.Sigma0)
    S0_inv = cho_solve((S0_chol, True), np.eye(d + 1))
    P = WH.T @ WH + S0_inv
    P = 0.5 * (P + P.T)
    try:
        LP = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise FactorizationError("posterior precision of the trend coefficients is singular") from None
    beta_hat = cho_solve((LP, True), WH.T @ Wf + S0_inv @ hp.beta0)
    Pinv = cho_solve((LP, True), np.eye(d + 1))
    Pinv = 0.5 * (Pinv + Pinv.T)
    resid_w = Wf - WH @ beta_hat

    shape = hp.a + (n if hp.corrected_shape else d) / 2.0
    log_rate = float(np.logaddexp(np.log(hp.b), log_Q - np.log(2.0)))
    with np.errstate(over="ignore"):
        rate = float(np.exp(log_rate))
    log_const = float(gammaln(shape + 0.5 * d) - gammaln(shape) - 0.5 * d * (np.log(2.0 * np.pi) + log_rate))

    if jitter > base:
        log.debug("Gram jitter escalated to %g for n=%d", jitter, n)
    return PosteriorCache(
        data=data,
        hp=hp,
        H=H,
        chol22=L22,
        cholM=LM,
        beta_hat=beta_hat,
        prec_beta=LP,
        gamma_shape=float(shape),
        gamma_rate=float(rate),
        Q=Q,
        jitter=float(jitter),
        W=np.ascontiguousarray(W),
        WH=np.ascontiguousarray(WH),
        resid_w=np.ascontiguousarray(resid_w),
        Pinv=np.ascontiguousarray(Pinv),
        log_const=log_const,
        log_rate=log_rate,
    )


def derivative_posterior_params(cache, x_star):
    """Location ``mu_hat`` and scale matrix ``Sigma_hat`` of the gradient posterior at ``x_star``.

    Raises :class:`PosteriorBreakdown` if ``Sigma_hat`` is not positive
    definite even after the jitter ladder.
    """
    x = np.asarray(x_star, dtype=float).reshape(1, -1)
    if x.shape[1] != cache.d:
        raise ValueError(f"x_star has dimension {x.shape[1]}, expected {cache.d}")
    mu, S = _kernels.moments_numpy(x, *cache.kernel_args())
    L, _ = _kernels._chol_ladder(S[0], _kernels.SCALE_JITTER)
    if L is None:
        raise PosteriorBreakdown(x[0])
    return mu[0], S[0]


_LADDER = np.asarray(_kernels.SCALE_JITTER)
# Points per kernel call; fixed so results never depend on the worker count.
CHUNK = 512


def _eval_chunk(cache, P, out, status, use_numba):
    fn = _kernels.logdens_numba if use_numba else _kernels.logdens_numpy
    fn(
        np.ascontiguousarray(P),
        *cache.kernel_args(),
        cache.log_const,
        cache.gamma_shape,
        cache.inv_scale,
        _LADDER,
        out,
        status,
    )


def log_density_batch(cache, points, workers=1, use_numba=None):
    """Log density of a zero gradient at every row of ``points``.

    Returns ``(values, status)``; failed points get ``nan`` and status 2.
    With ``workers > 1`` chunks run on a thread pool (the numba kernels
    release the GIL); each chunk writes its own slice so the result does not
    depend on scheduling.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.shape[1] != cache.d:
        raise ValueError(f"points have dimension {P.shape[1]}, expected {cache.d}")
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    N = P.shape[0]
    out = np.empty(N)
    status = np.empty(N, dtype=np.int64)
    bounds = [(s, min(s + CHUNK, N)) for s in range(0, N, CHUNK)]

    def run(b):
        s, e = b
        _eval_chunk(cache, P[s:e], out[s:e], status[s:e], use_numba)

    if workers <= 1 or len(bounds) <= 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, bounds))
    return out, status


def log_density_grad_zero(cache, x_star, use_numba=None):
    """Log posterior density of ``g'(x_star) = 0``, including the full t normalizer."""
    vals, status = log_density_batch(cache, np.reshape(x_star, (1, -1)), use_numba=use_numba)
    if status[0] == _kernels.STATUS_FAILED:
        raise PosteriorBreakdown(np.ravel(x_star))
    return float(vals[0])


def point_evaluator(cache, use_numba=None):
    """Scalar ``x -> log density`` with minimal per-call overhead, for use inside a chain."""
    use_numba = _accel.USE_NUMBA if use_numba is None else use_numba
    args = cache.kernel_args()
    if not use_numba:
        return lambda x: log_density_grad_zero(cache, x, use_numba=False)
    fn = _kernels._point_logdens
    const, shape, inv_scale = cache.log_const, cache.gamma_shape, cache.inv_scale

    def evaluate(x):
        val, status = fn(np.asarray(x, dtype=float), *args, const, shape, inv_scale, _LADDER)
        if status == _kernels.STATUS_FAILED:
            raise PosteriorBreakdown(np.ravel(x))
        return val

    return evaluate


def log_marginal_likelihood(data, hp):
    """``log p(f_n)`` with ``beta`` and ``sigma^-2`` integrated out (an n-variate t)."""
    cache = build_cache(data, hp)
    n = data.n
    logdet_M = 2.0 * np.sum(np.log(np.diag(cache.cholM)))
    return float(
        gammaln(hp.a + n / 2.0)
        - gammaln(hp.a)
        - 0.5 * n * np.log(2.0 * np.pi * hp.b)
        - 0.5 * logdet_M
        - (hp.a + n / 2.0) * (cache.log_rate - np.log(hp.b))
    )


LENGTHSCALE_GRID = (0.1, 0.5, 1.0, 5.0, 10.0, 50.0)


def select_lengthscale(data, hp, grid=LENGTHSCALE_GRID):
    """Shared length scale from ``grid`` maximizing the marginal likelihood; returns new hyperparameters."""
    best, best_val = None, -np.inf
    for lam in grid:
        trial = GpHyperParams(
            hp.a, hp.b, hp.beta0, hp.Sigma0, LengthScales.isotropic(data.d, lam), hp.jitter, hp.corrected_shape
        )
        try:
            val = log_marginal_likelihood(data, trial)
        except FactorizationError:
            continue
        if val > best_val:
            best, best_val = trial, val
    if best is None:
        raise FactorizationError("no length scale in the grid gave a factorizable Gram matrix")
    return best
