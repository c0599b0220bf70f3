"""Transformation-based MCMC.

Two kernels are provided. ``additive`` moves every coordinate by the same
half-normal innovation with independent random signs. ``mixture`` runs two
sub-moves per iteration: an additive-or-multiplicative move with
per-coordinate directions, then a specialised move that shifts or scales all
coordinates together. Multiplicative moves carry the Jacobian
``|eps|**sum(b)`` in the acceptance ratio.

Random numbers come from a numpy ``Generator`` (PCG64) seeded per chain.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InitializationError

log = logging.getLogger(__name__)

EPS_GUARD = 1e-12
INIT_STRATEGIES = ("first-hit", "min-score")
TINY_COORD = 1e-300


@dataclass
class TmcmcConfig:
    n_iter: int
    burn_in: int
    thin: int = 10
    p: float = 0.5
    q: float = 0.5
    scales1: np.ndarray | float = 0.05
    scales2: np.ndarray | float = 0.05
    kernel: str = "additive"
    init: np.ndarray | None = None
    seed: int = 0
    max_init_tries: int = 10**6
    init_strategy: str = "first-hit"

    def __post_init__(self):
        problems = []
        if self.n_iter <= 0:
            problems.append("n_iter must be positive")
        if not 0 <= self.burn_in < self.n_iter:
            problems.append("burn_in must satisfy 0 <= burn_in < n_iter")
        if self.thin < 1:
            problems.append("thin must be >= 1")
        if not (0 < self.p < 1 and 0 < self.q < 1):
            problems.append("p and q must lie in (0, 1)")
        if np.any(np.asarray(self.scales1) <= 0) or np.any(np.asarray(self.scales2) <= 0):
            problems.append("scales must be strictly positive")
        if self.init_strategy not in INIT_STRATEGIES:
            problems.append(f"unknown init_strategy {self.init_strategy!r}")
        if self.kernel not in ("additive", "mixture"):
            problems.append(f"unknown kernel {self.kernel!r}")
        if problems:
            raise ValueError("; ".join(problems))

    @property
    def n_stored(self):
        return (self.n_iter - self.burn_in) // self.thin


@dataclass
class ChainOutput:
    samples: np.ndarray
    log_densities: np.ndarray
    iterations: np.ndarray
    move_accepted: np.ndarray
    acceptance_rates: dict
    n_target_evals: int
    init: np.ndarray = field(default=None)


def _accept(log_ratio, rng):
    if log_ratio >= 0:
        return True
    return math.log(rng.random()) < log_ratio


def additive_step(x, log_target, scales, rng, log_px=None):
    """One additive move; returns ``(x_next, accepted, log_target(x_next))``.

    With ``d = 1`` this is random-walk Metropolis with a half-normal step of
    random sign.
    """
    if log_px is None:
        log_px = log_target(x)
    eps = abs(rng.standard_normal())
    b = rng.integers(0, 2, size=x.size) * 2 - 1
    y = x + b * scales * eps
    log_py = log_target(y)
    if log_py > -np.inf and _accept(log_py - log_px, rng):
        return y, True, log_py
    return x, False, log_px


def _multiplicative_move(x, rng):
    """Per-coordinate scale/unscale/keep; returns ``(y, log|J|)`` or ``None`` for an auto-reject."""
    eps = rng.uniform(-1.0, 1.0)
    b = rng.integers(-1, 2, size=x.size)
    if abs(eps) < EPS_GUARD:
        return None
    y = x.copy()
    up = b == 1
    down = b == -1
    y[up] = x[up] * eps
    if np.any(down):
        if np.any(np.abs(x[down]) < TINY_COORD):
            return None
        y[down] = x[down] / eps
    return y, float(b.sum()) * math.log(abs(eps))


def _try(x, log_px, y, log_jac, log_target, rng):
    log_py = log_target(y)
    if log_py > -np.inf and _accept(log_py - log_px + log_jac, rng):
        return y, True, log_py
    return x, False, log_px


def mixture_step(x, log_target, cfg, rng, log_px=None):
    """Both sub-moves of the mixture kernel.

    Returns ``(x_next, (accepted_a, accepted_b), log_target(x_next), (kind_a, kind_b))``
    where each kind is ``"additive"`` or ``"multiplicative"``.
    """
    if log_px is None:
        log_px = log_target(x)
    d = x.size
    scales1 = np.broadcast_to(np.asarray(cfg.scales1, dtype=float), (d,))
    scales2 = np.broadcast_to(np.asarray(cfg.scales2, dtype=float), (d,))

    # first move: per-coordinate directions
    if rng.random() < cfg.p:
        kind_a = "additive"
        x, acc_a, log_px = additive_step(x, log_target, scales1, rng, log_px)
    else:
        kind_a = "multiplicative"
        prop = _multiplicative_move(x, rng)
        if prop is None:
            acc_a = False
        else:
            x, acc_a, log_px = _try(x, log_px, prop[0], prop[1], log_target, rng)

    # second move: all coordinates together, one shared direction
    if rng.random() < cfg.q:
        kind_b = "additive"
        u = rng.random()
        eps = abs(rng.standard_normal())
        sign = 1.0 if u < 0.5 else -1.0
        x, acc_b, log_px = _try(x, log_px, x + sign * scales2 * eps, 0.0, log_target, rng)
    else:
        kind_b = "multiplicative"
        eps = rng.uniform(-1.0, 1.0)
        u = rng.random()
        if abs(eps) < EPS_GUARD or (u >= 0.5 and np.any(np.abs(x) < TINY_COORD)):
            acc_b = False
        elif u < 0.5:
            x, acc_b, log_px = _try(x, log_px, x * eps, d * math.log(abs(eps)), log_target, rng)
        else:
            x, acc_b, log_px = _try(x, log_px, x / eps, -d * math.log(abs(eps)), log_target, rng)
    return x, (acc_a, acc_b), log_px, (kind_a, kind_b)


def find_initial_point(
    cfg, log_target, lower=None, upper=None, support_batch=None, rng=None, region_desc="", score_batch=None
):
    """Starting point with finite target; returns ``(x0, log_target(x0), n_draws)``.

    The configured ``init`` is used when it lies in the support. Otherwise
    uniform draws over the box are tried: ``first-hit`` takes the first
    support point, ``min-score`` scans all ``max_init_tries`` draws and takes
    the support point with the smallest ``score_batch`` value.
    """
    if cfg.init is not None:
        x0 = np.asarray(cfg.init, dtype=float).reshape(-1)
        lp = log_target(x0)
        if lp > -np.inf:
            return x0, lp, 1
        log.info("configured init %s is outside the support; searching the box", x0.tolist())
    if lower is None or upper is None:
        raise InitializationError(f"no valid starting point and no box to search ({region_desc})")
    rng = np.random.default_rng(cfg.seed) if rng is None else rng
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    best = (np.inf, None, None)
    scan = cfg.init_strategy == "min-score" and score_batch is not None
    tries = 0
    batch = 4096
    while tries < cfg.max_init_tries:
        k = min(batch, cfg.max_init_tries - tries)
        cand = lower + (upper - lower) * rng.random((k, lower.size))
        tries += k
        idx = np.flatnonzero(support_batch(cand)) if support_batch is not None else np.arange(k)
        if scan:
            if idx.size:
                scores = score_batch(cand[idx])
                j = int(np.argmin(scores))
                if scores[j] < best[0]:
                    lp = log_target(cand[idx[j]])
                    if lp > -np.inf:
                        best = (scores[j], cand[idx[j]].copy(), lp)
            continue
        for i in idx:
            lp = log_target(cand[i])
            if lp > -np.inf:
                return cand[i].copy(), lp, tries
    if best[1] is not None:
        return best[1], best[2], tries
    raise InitializationError(
        f"no point of the prior support found in {cfg.max_init_tries} uniform draws ({region_desc})"
    )


def run_chain(cfg, log_target, lower=None, upper=None, support_batch=None, region_desc="", score_batch=None):
    """Run one chain and keep every ``thin``-th state after ``burn_in``.

    ``support_batch`` (optional) is a vectorised support indicator used to
    speed up the initial-point search; ``score_batch`` ranks candidates
    under the ``min-score`` strategy.
    """
    rng = np.random.default_rng(cfg.seed)
    x, log_px, n_evals = find_initial_point(
        cfg, log_target, lower, upper, support_batch, rng, region_desc, score_batch
    )
    x0 = x.copy()
    d = x.size
    scales1 = np.broadcast_to(np.asarray(cfg.scales1, dtype=float), (d,)).copy()
    n_keep = cfg.n_stored
    samples = np.empty((n_keep, d))
    logs = np.empty(n_keep)
    iters = np.empty(n_keep, dtype=np.int64)
    moved = np.zeros(n_keep, dtype=bool)
    attempts = {"additive": 0, "multiplicative": 0}
    accepts = {"additive": 0, "multiplicative": 0}
    attempts_b = {"additive": 0, "multiplicative": 0}
    accepts_b = {"additive": 0, "multiplicative": 0}
    slot = 0
    evals_per_iter = 1 if cfg.kernel == "additive" else 2
    for t in range(1, cfg.n_iter + 1):
        if cfg.kernel == "additive":
            x, acc, log_px = additive_step(x, log_target, scales1, rng, log_px)
            attempts["additive"] += 1
            accepts["additive"] += acc
            any_acc = acc
        else:
            x, (acc_a, acc_b), log_px, (ka, kb) = mixture_step(x, log_target, cfg, rng, log_px)
            attempts[ka] += 1
            accepts[ka] += acc_a
            attempts_b[kb] += 1
            accepts_b[kb] += acc_b
            any_acc = acc_a or acc_b
        if t > cfg.burn_in and (t - cfg.burn_in) % cfg.thin == 0 and slot < n_keep:
            samples[slot] = x
            logs[slot] = log_px
            iters[slot] = t
            moved[slot] = any_acc
            slot += 1
    n_evals += cfg.n_iter * evals_per_iter
    rates = {}
    for name in ("additive", "multiplicative"):
        if attempts[name]:
            rates[name if cfg.kernel == "additive" else f"{name}_1"] = accepts[name] / attempts[name]
        if attempts_b[name]:
            rates[f"{name}_2"] = accepts_b[name] / attempts_b[name]
    return ChainOutput(samples, logs, iters, moved, rates, n_evals, x0)


def write_trace(path, chain):
    """CSV trace: ``iter,x_1..x_d,log_post,move_accepted``; one row per stored state."""
    d = chain.samples.shape[1]
    header = ["iter"] + [f"x_{j + 1}" for j in range(d)] + ["log_post", "move_accepted"]
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for it, x, lp, acc in zip(chain.iterations, chain.samples, chain.log_densities, chain.move_accepted):
            fh.write(",".join([str(int(it))] + [repr(float(v)) for v in x] + [repr(float(lp)), str(int(acc))]) + "\n")
