"""Squared-exponential correlation and its derivative covariances.

Everything here is expressed in correlation units (the process variance is
factored out), with a diagonal length-scale matrix ``Lambda``.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LengthScales:
    """Diagonal of ``Lambda``; squared input length units."""

    lam: np.ndarray

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lam, dtype=float)).copy()
        if lam.ndim != 1 or lam.size == 0:
            raise ValueError("length scales must be a non-empty 1-d array")
        if not np.all(np.isfinite(lam)) or np.any(lam <= 0):
            raise ValueError(f"length scales must be finite and positive, got {lam}")
        lam.setflags(write=False)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def isotropic(cls, d, value=1.0):
        return cls(np.full(d, float(value)))

    @property
    def d(self):
        return self.lam.size

    @property
    def inv(self):
        return 1.0 / self.lam


def _check_pair(x, y, ls):
    x = np.asarray(x, dtype=float).reshape(-1)
    y = np.asarray(y, dtype=float).reshape(-1)
    if x.shape != y.shape or x.size != ls.d:
        raise ValueError(
            f"dimension mismatch: x has {x.size}, y has {y.size}, length scales have {ls.d}"
        )
    return x, y


def correlation(x, y, ls):
    """``exp(-0.5 (x-y)^T Lambda^{-1} (x-y))``."""
    x, y = _check_pair(x, y, ls)
    diff = x - y
    return float(np.exp(-0.5 * np.sum(diff * diff * ls.inv)))


def cross_cov_column(x_star, x_j, ls):
    """Correlation-scale covariance between the gradient at ``x_star`` and the value at ``x_j``.

    This is the derivative of :func:`correlation` in its first argument.
    """
    x_star, x_j = _check_pair(x_star, x_j, ls)
    diff = x_star - x_j
    c = np.exp(-0.5 * np.sum(diff * diff * ls.inv))
    return -ls.inv * diff * c


def grad_grad_cov(ls):
    """Correlation-scale covariance of the gradient with itself at a single point."""
    return np.diag(ls.inv)


def mean_basis(x):
    """Linear trend basis ``(1, x_1, ..., x_d)``; accepts one point or a stack of rows."""
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        return np.concatenate(([1.0], x))
    return np.hstack([np.ones((x.shape[0], 1)), x])


def gram(X, ls, Y=None):
    """Correlation matrix between the rows of ``X`` and the rows of ``Y`` (default ``X``)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    symmetric = Y is None
    Y = X if symmetric else np.atleast_2d(np.asarray(Y, dtype=float))
    # explicit differences: the expanded |x|^2 + |y|^2 - 2xy form cancels
    # badly for the near-coincident rows that augmentation produces
    diff = X[:, None, :] - Y[None, :, :]
    K = np.exp(-0.5 * np.einsum("ijk,ijk,k->ij", diff, diff, ls.inv))
    if symmetric:
        K = 0.5 * (K + K.T)
    return K
