"""Recursive Dirichlet-process posterior for the number of local optima.

Each stage ``j`` contributes a count ``Y_j``. The base measure puts mass
``2**-m`` on ``m = 1, 2, ...`` and none on ``m = 0``; stage ``j`` enters the
concentration with weight ``1/j**2``. The marginal posterior of ``p_m`` after
``k`` stages is then Beta with parameters

    alpha = G(m) * S + c_m,    beta = (1 - G(m)) * S + k - c_m,

where ``S = sum_j 1/j**2`` and ``c_m`` is the number of stages with ``Y_j = m``.
"""

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class CountRecord:
    y: tuple = field(default_factory=tuple)
    M: int | None = None

    def __post_init__(self):
        y = tuple(int(v) for v in self.y)
        if any(v < 0 for v in y):
            raise ValueError("counts must be nonnegative")
        if self.M is not None and any(v > self.M for v in y):
            raise ValueError(f"counts cannot exceed M={self.M}")
        object.__setattr__(self, "y", y)

    @property
    def k(self):
        return len(self.y)

    def append(self, count):
        return CountRecord(self.y + (int(count),), self.M)


@dataclass(frozen=True)
class DpPosteriorSummary:
    m: int
    mean: float
    variance: float


def base_measure(m):
    """``G(Y = m)``: ``2**-m`` for ``m >= 1``, zero at ``m = 0``."""
    if m < 0:
        raise ValueError("m must be nonnegative")
    return 0.0 if m == 0 else math.ldexp(1.0, -int(m))


def concentration(k):
    """``sum_{j<=k} 1/j**2``, summed smallest terms first."""
    return math.fsum(1.0 / (j * j) for j in range(k, 0, -1))


def _pieces(m, record):
    if record.k < 1:
        raise ValueError("record must contain at least one stage")
    S = concentration(record.k)
    c = sum(1 for v in record.y if v == m)
    return S, c, base_measure(m)


def dp_mean_var(m, record):
    """Posterior mean and variance of ``p_m`` after ``record.k`` stages."""
    S, c, g = _pieces(m, record)
    k = record.k
    tot = S + k
    alpha = g * S + c
    beta = (1.0 - g) * S + k - c
    mean = alpha / tot
    var = alpha * beta / (tot * tot * (tot + 1.0))
    return DpPosteriorSummary(int(m), mean, var)


def literal_variance(m, record):
    """The variance expression with ``S`` in place of ``G(m) * S`` in the first factor.

    Kept for comparison only; it is not a Beta variance unless ``G(m) = 1``.
    """
    S, c, g = _pieces(m, record)
    k = record.k
    tot = S + k
    return (S + c) * ((1.0 - g) * S + k - c) / (tot * tot * (tot + 1.0))


def converged_count(record, threshold=0.95):
    """The unique ``m`` in ``0..max(y)`` with posterior mean at least ``threshold``, else ``None``."""
    if not 0.5 < threshold < 1.0:
        raise ValueError("threshold must lie in (0.5, 1)")
    if record.k == 0:
        return None
    hits = [m for m in range(max(record.y) + 1) if dp_mean_var(m, record).mean >= threshold]
    return hits[0] if len(hits) == 1 else None


def summary_table(record, m_max=None):
    """Per-``m`` summaries for ``m = 0..m_max`` (default ``max(y)``)."""
    if record.k == 0:
        return []
    m_max = max(record.y) if m_max is None else m_max
    return [dp_mean_var(m, record) for m in range(m_max + 1)]


def to_json_dict(record, threshold=0.95, variant="resampled"):
    table = summary_table(record)
    return {
        "variant": variant,
        "y": list(record.y),
        "M": record.M,
        "k": record.k,
        "threshold": threshold,
        "table": [{"m": s.m, "mean": s.mean, "variance": s.variance} for s in table],
        "converged_count": converged_count(record, threshold),
    }


def beta_moments(alpha, beta):
    """Mean and variance of ``Beta(alpha, beta)``."""
    tot = alpha + beta
    return alpha / tot, alpha * beta / (tot * tot * (tot + 1.0))


def mean_mass(record, m_max=64):
    """``sum_m mean(p_m)`` over ``m = 0..m_max``."""
    return float(np.sum([dp_mean_var(m, record).mean for m in range(m_max + 1)]))
