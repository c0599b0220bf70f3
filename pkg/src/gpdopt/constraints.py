"""Prior support ``B(eps)`` for stationary points and the 2-d determinant test."""

from dataclasses import dataclass

import numpy as np

MODES = ("minimum", "maximum", "saddle2d", "inconclusive2d", "gradient-only")
DEFAULT_DET_TOL = 1e-3


@dataclass(frozen=True)
class RegionSpec:
    epsilon: float
    mode: str
    lower: np.ndarray
    upper: np.ndarray
    det_tol: float = DEFAULT_DET_TOL

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.det_tol < 0:
            raise ValueError("det_tol must be nonnegative")
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float)).copy()
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float)).copy()
        if lower.shape != upper.shape or np.any(lower >= upper):
            raise ValueError(f"invalid box: lower={lower}, upper={upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def for_objective(cls, obj, epsilon, mode, det_tol=DEFAULT_DET_TOL):
        return cls(epsilon, mode, obj.lower, obj.upper, det_tol)

    def with_epsilon(self, epsilon):
        return RegionSpec(epsilon, self.mode, self.lower, self.upper, self.det_tol)

    def describe(self):
        return (
            f"mode={self.mode}, epsilon={self.epsilon:g}, box=[{self.lower.tolist()}, {self.upper.tolist()}]"
            + (f", det_tol={self.det_tol:g}" if self.mode == "inconclusive2d" else "")
        )


def hessian_definite(hess, sense="positive"):
    """True iff ``hess`` (or ``-hess`` for ``sense='negative'``) has a Cholesky factor."""
    H = np.atleast_2d(np.asarray(hess, dtype=float))
    H = 0.5 * (H + H.T)
    if sense == "negative":
        H = -H
    elif sense != "positive":
        raise ValueError(f"sense must be 'positive' or 'negative', got {sense!r}")
    if H.shape == (1, 1):
        return bool(H[0, 0] > 0)
    try:
        np.linalg.cholesky(H)
    except np.linalg.LinAlgError:
        return False
    return True


def hessian_determinant_2d(hess):
    return float(hess[0, 0] * hess[1, 1] - hess[0, 1] * hess[1, 0])


def _check_2d(spec, d):
    if spec.mode in ("saddle2d", "inconclusive2d") and d != 2:
        raise ValueError(f"mode {spec.mode!r} is only defined for d=2, got d={d}")


def second_order_ok(hess, spec):
    """The mode's curvature condition alone (no gradient or domain check)."""
    if spec.mode == "minimum":
        return hessian_definite(hess, "positive")
    if spec.mode == "maximum":
        return hessian_definite(hess, "negative")
    if spec.mode == "saddle2d":
        return hessian_determinant_2d(hess) < 0
    if spec.mode == "inconclusive2d":
        return abs(hessian_determinant_2d(hess)) < spec.det_tol
    return True


def in_domain(x, spec):
    x = np.asarray(x, dtype=float)
    return bool(np.all(x > spec.lower) and np.all(x < spec.upper))


def in_region(x, spec, obj):
    """Membership of ``x`` in ``B(eps)``: open box, small gradient, and the mode's curvature condition."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.size != obj.d or spec.lower.size != obj.d:
        raise ValueError(f"dimension mismatch: x has {x.size}, objective has d={obj.d}")
    _check_2d(spec, obj.d)
    if not in_domain(x, spec):
        return False
    if not np.linalg.norm(obj.grad(x)) < spec.epsilon:
        return False
    if spec.mode == "gradient-only":
        return True
    return second_order_ok(np.asarray(obj.hess(x), dtype=float).reshape(obj.d, obj.d), spec)


def second_order_mask(X, spec, obj):
    """Curvature condition at every row of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_2d(spec, obj.d)
    if spec.mode == "gradient-only":
        return np.ones(X.shape[0], dtype=bool)
    Hs = obj.hessians(X)
    if spec.mode in ("saddle2d", "inconclusive2d"):
        det = Hs[:, 0, 0] * Hs[:, 1, 1] - Hs[:, 0, 1] * Hs[:, 1, 0]
        return det < 0 if spec.mode == "saddle2d" else np.abs(det) < spec.det_tol
    sense = "positive" if spec.mode == "minimum" else "negative"
    return np.array([hessian_definite(H, sense) for H in Hs], dtype=bool)


def in_region_batch(X, spec, obj):
    """Vectorised :func:`in_region` over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    inside = np.all((X > spec.lower) & (X < spec.upper), axis=1)
    inside &= obj.grad_norms(X) < spec.epsilon
    if spec.mode != "gradient-only" and np.any(inside):
        idx = np.flatnonzero(inside)
        inside[idx] = second_order_mask(X[idx], spec, obj)
    return inside


def classify_critical_2d(x, obj, det_tol=DEFAULT_DET_TOL):
    """Second-derivative test in two dimensions.

    Returns one of ``"inconclusive"`` (``|D| < det_tol``, checked first),
    ``"saddle"`` (``D < 0``), ``"maximum"`` or ``"minimum"`` (``D > 0`` with
    ``f''_11`` negative or positive).
    """
    if obj.d != 2:
        raise ValueError(f"determinant test needs d=2, objective has d={obj.d}")
    H = np.asarray(obj.hess(np.asarray(x, dtype=float)), dtype=float)
    D = hessian_determinant_2d(H)
    if abs(D) < det_tol:
        return "inconclusive"
    if D < 0:
        return "saddle"
    return "maximum" if H[0, 0] < 0 else "minimum"
