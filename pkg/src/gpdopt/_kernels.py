"""Hot loops: derivative-posterior log density at a zero gradient, many points at once.

Both implementations take the same precomputed pieces of a posterior cache:

    X        (n, d)    training inputs
    inv_lam  (d,)      reciprocal length scales
    W        (n, n)    inverse of the lower Cholesky factor of the Gram matrix
    WH       (n, d+1)  W @ H
    resid_w  (n,)      W @ (f - H beta_hat)
    slope    (d,)      beta_hat[1:]
    Pinv     (d+1, d+1) inverse of H^T K^{-1} H + Sigma0^{-1}

The scalar ``inv_scale`` is ``1 / sqrt(2 * rate)`` with ``rate`` the posterior
gamma rate; ``mu`` is multiplied by it before squaring so that very large
objective values (rates beyond the float range) cannot overflow.

The kernels write, per point, the log Student-t density of the gradient evaluated at
zero plus a status code (0 clean, 1 needed jitter, 2 failed).
"""

import numpy as np

from ._accel import njit

# Relative jitter ladder tried on the d x d posterior scale matrix.
SCALE_JITTER = (0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6)

STATUS_OK = 0
STATUS_JITTERED = 1
STATUS_FAILED = 2


@njit
def _chol_inplace(A, L):
    """Lower Cholesky of a small dense matrix; False when not positive definite."""
    d = A.shape[0]
    for j in range(d):
        s = A[j, j]
        for k in range(j):
            s -= L[j, k] * L[j, k]
        if not s > 0.0:
            return False
        ljj = np.sqrt(s)
        L[j, j] = ljj
        for i in range(j + 1, d):
            t = A[i, j]
            for k in range(j):
                t -= L[i, k] * L[j, k]
            L[i, j] = t / ljj
        for i in range(j):
            L[i, j] = 0.0
    return True


@njit
def _point_moments(x, X, inv_lam, W, WH, resid_w, slope, Pinv):
    n, d = X.shape
    S21 = np.empty((n, d))
    for j in range(n):
        q = 0.0
        for k in range(d):
            diff = x[k] - X[j, k]
            q += diff * diff * inv_lam[k]
        c = np.exp(-0.5 * q)
        for k in range(d):
            S21[j, k] = -inv_lam[k] * (x[k] - X[j, k]) * c
    V = np.dot(W, S21)
    Vt = np.ascontiguousarray(V.T)
    mu = slope + np.dot(Vt, resid_w)
    R = -np.dot(Vt, WH)
    for k in range(d):
        R[k, k + 1] += 1.0
    Rt = np.ascontiguousarray(R.T)
    S = np.dot(np.dot(R, Pinv), Rt) - np.dot(Vt, V)
    for k in range(d):
        S[k, k] += inv_lam[k]
    for i in range(d):
        for j in range(i + 1, d):
            s = 0.5 * (S[i, j] + S[j, i])
            S[i, j] = s
            S[j, i] = s
    return mu, S


@njit
def _point_logdens(x, X, inv_lam, W, WH, resid_w, slope, Pinv, log_const, shape, inv_scale, ladder):
    d = X.shape[1]
    mu, S = _point_moments(x, X, inv_lam, W, WH, resid_w, slope, Pinv)
    mean_diag = 0.0
    for k in range(d):
        mean_diag += S[k, k]
    mean_diag /= d
    L = np.zeros((d, d))
    A = np.empty((d, d))
    for level in range(ladder.shape[0]):
        for i in range(d):
            for j in range(d):
                A[i, j] = S[i, j]
            A[i, i] += ladder[level] * abs(mean_diag)
        if _chol_inplace(A, L):
            logdet = 0.0
            for k in range(d):
                logdet += 2.0 * np.log(L[k, k])
            # forward substitution L z = mu
            quad = 0.0
            z = np.empty(d)
            for i in range(d):
                t = mu[i] * inv_scale
                for k in range(i):
                    t -= L[i, k] * z[k]
                z[i] = t / L[i, i]
                quad += z[i] * z[i]
            val = log_const - 0.5 * logdet - (shape + 0.5 * d) * np.log1p(quad)
            status = 0 if level == 0 else 1
            return val, status
    return np.nan, 2


@njit
def logdens_numba(P, X, inv_lam, W, WH, resid_w, slope, Pinv, log_const, shape, inv_scale, ladder, out, status):
    for p in range(P.shape[0]):
        val, st = _point_logdens(
            P[p], X, inv_lam, W, WH, resid_w, slope, Pinv, log_const, shape, inv_scale, ladder
        )
        out[p] = val
        status[p] = st


def moments_numpy(P, X, inv_lam, W, WH, resid_w, slope, Pinv):
    """Posterior mean and scale matrix of the gradient at every row of ``P``."""
    B, d = P.shape
    n = X.shape[0]
    diff = P[:, None, :] - X[None, :, :]
    c = np.exp(-0.5 * np.einsum("bnk,bnk,k->bn", diff, diff, inv_lam))
    S21 = -diff * inv_lam * c[:, :, None]
    # one GEMM for the whole chunk
    V = (W @ S21.transpose(1, 0, 2).reshape(n, B * d)).reshape(n, B, d).transpose(1, 0, 2)
    Vt = V.transpose(0, 2, 1)
    mu = slope + Vt @ resid_w
    R = -(Vt @ WH)
    R[:, np.arange(d), np.arange(d) + 1] += 1.0
    S = R @ Pinv @ R.transpose(0, 2, 1) - Vt @ V
    S[:, np.arange(d), np.arange(d)] += inv_lam
    S = 0.5 * (S + S.transpose(0, 2, 1))
    return mu, S


def _chol_ladder(S, ladder):
    mean_diag = abs(np.trace(S) / S.shape[0])
    for level, rel in enumerate(ladder):
        try:
            L = np.linalg.cholesky(S + rel * mean_diag * np.eye(S.shape[0]))
        except np.linalg.LinAlgError:
            continue
        return L, level
    return None, -1


def logdens_numpy(P, X, inv_lam, W, WH, resid_w, slope, Pinv, log_const, shape, inv_scale, ladder, out, status):
    d = P.shape[1]
    mu, S = moments_numpy(P, X, inv_lam, W, WH, resid_w, slope, Pinv)
    try:
        L = np.linalg.cholesky(S)
        levels = np.zeros(P.shape[0], dtype=np.int64)
    except np.linalg.LinAlgError:
        L = np.empty_like(S)
        levels = np.empty(P.shape[0], dtype=np.int64)
        for p in range(P.shape[0]):
            Lp, lev = _chol_ladder(S[p], ladder)
            levels[p] = lev
            L[p] = np.eye(d) if Lp is None else Lp
    z = np.linalg.solve(L, (mu * inv_scale)[:, :, None])[:, :, 0]
    quad = np.sum(z * z, axis=1)
    logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=1, axis2=2)), axis=1)
    vals = log_const - 0.5 * logdet - (shape + 0.5 * d) * np.log1p(quad)
    failed = levels < 0
    vals[failed] = np.nan
    out[:] = vals
    status[:] = np.where(failed, STATUS_FAILED, np.where(levels > 0, STATUS_JITTERED, STATUS_OK))
