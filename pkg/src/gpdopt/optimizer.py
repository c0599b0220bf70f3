"""Staged importance resampling over stationary-point samples.

Stage 0 runs TMCMC on the constrained posterior of a zero gradient. Each
later stage reweights those same particles by the density ratio between the
current and previous datasets, resamples ``M`` of them, keeps the ones whose
true gradient norm is below ``eta_k``, and appends up to five of those (with
their objective values) to the dataset.
"""

import dataclasses
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import gp
from .constraints import hessian_definite, in_region, in_region_batch, second_order_mask
from .counting import CountRecord
from .errors import FactorizationError, InitializationError, PosteriorBreakdown, StageFailure
from .tmcmc import ChainOutput, run_chain

log = logging.getLogger(__name__)

SCHEDULE_FORMS = ("inverse-square", "inverse", "scaled-inverse-log", "constant")
MAX_AUGMENT = 5
CLUSTER_FRACTION = 0.02


@dataclass(frozen=True)
class EtaSchedule:
    """Acceptance thresholds ``eta_k`` for stages ``k = 1, 2, ...``.

    ``inverse-square``: ``scale / (offset + k - 1)**2``;
    ``inverse``: ``scale / (offset + k - 1)``;
    ``scaled-inverse-log``: ``scale / log(offset + k - 1)``;
    ``constant``: ``scale``.
    """

    form: str = "inverse-square"
    scale: float = 1.0
    offset: float = 10.0

    def __post_init__(self):
        if self.form not in SCHEDULE_FORMS:
            raise ValueError(f"unknown schedule form {self.form!r}; expected one of {SCHEDULE_FORMS}")
        if not self.scale > 0:
            raise ValueError("schedule scale must be positive")
        if not self.offset > 0:
            raise ValueError("schedule offset must be positive")
        if self.form == "scaled-inverse-log" and not self.offset > 1:
            raise ValueError("scaled-inverse-log needs offset > 1 so that log(offset + k - 1) > 0")

    def __call__(self, k):
        if k < 1:
            raise ValueError("stages are numbered from 1")
        t = self.offset + k - 1
        if self.form == "inverse-square":
            return self.scale / (t * t)
        if self.form == "inverse":
            return self.scale / t
        if self.form == "scaled-inverse-log":
            return self.scale / math.log(t)
        return self.scale


@dataclass
class ParticleSet:
    points: np.ndarray
    log_weights: np.ndarray
    stage: int = 0
    log_dens: np.ndarray | None = None  # log density under the current cache
    grad_norms: np.ndarray | None = None
    n_degenerate: int = 0

    @property
    def N(self):
        return self.points.shape[0]


@dataclass
class StageReport:
    k: int
    eta_k: float
    n_k: int
    accepted_points: np.ndarray
    dataset_size: int
    n_passing_distinct: int = 0
    n_degenerate: int = 0


@dataclass(frozen=True)
class Estimate:
    x_hat: tuple
    grad_norm: float
    f_value: float
    cluster_size: int
    classification: str | None = None

    def to_dict(self):
        return {
            "x_hat": list(self.x_hat),
            "grad_norm": self.grad_norm,
            "f_value": self.f_value,
            "cluster_size": self.cluster_size,
            "classification": self.classification,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["x_hat"]), d["grad_norm"], d["f_value"], d["cluster_size"], d["classification"])


@dataclass
class RunResult:
    stages: list
    estimates: list
    count: CountRecord
    chain: ChainOutput | None
    status: str = "ok"
    diagnostics: list = field(default_factory=list)
    data: gp.Dataset | None = None
    particles: ParticleSet | None = None
    distinct_count: CountRecord | None = None


def classify_point(x, obj, det_tol=1e-3):
    """Second-order label at ``x``: determinant test for ``d = 2``, definiteness otherwise."""
    from .constraints import classify_critical_2d

    if obj.d == 2:
        return classify_critical_2d(x, obj, det_tol)
    H = np.asarray(obj.hess(np.asarray(x, dtype=float)), dtype=float).reshape(obj.d, obj.d)
    if hessian_definite(H, "positive"):
        return "minimum"
    if hessian_definite(H, "negative"):
        return "maximum"
    return None


def make_estimate(x, obj, cluster_size=1, det_tol=1e-3):
    x = np.asarray(x, dtype=float)
    return Estimate(
        tuple(float(v) for v in x),
        float(obj.grad_norm(x)),
        float(obj.f(x)),
        int(cluster_size),
        classify_point(x, obj, det_tol),
    )


def make_log_target(cache, region, obj, use_numba=None):
    """``x -> log prior indicator + log density of a zero gradient``; ``-inf`` off the support."""
    dens = gp.point_evaluator(cache, use_numba)

    def log_target(x):
        if not in_region(x, region, obj):
            return -np.inf
        try:
            return dens(x)
        except PosteriorBreakdown:
            return -np.inf

    return log_target


def stage_zero(obj, region, cfg, hp, init_data, inits=None, seed=0, workers=1, use_numba=None):
    """Run one chain per entry of ``inits`` (default: ``[cfg.init]``) and pool the samples.

    Returns ``(particles, cache, chains)``.
    """
    cache = gp.build_cache(init_data, hp)
    target = make_log_target(cache, region, obj, use_numba)
    inits = [cfg.init] if inits is None else list(inits)
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    seeds = ss.spawn(len(inits))
    chains = []
    for init, ss in zip(inits, seeds):
        ccfg = dataclasses.replace(cfg, init=None if init is None else np.asarray(init, dtype=float), seed=ss)
        chains.append(
            run_chain(
                ccfg,
                target,
                region.lower,
                region.upper,
                support_batch=lambda X: in_region_batch(X, region, obj),
                region_desc=region.describe(),
                score_batch=obj.grad_norms,
            )
        )
    points = np.vstack([c.samples for c in chains])
    log_dens, status = gp.log_density_batch(cache, points, workers=workers, use_numba=use_numba)
    particles = ParticleSet(
        points=points,
        log_weights=np.zeros(points.shape[0]),
        stage=0,
        log_dens=log_dens,
        grad_norms=obj.grad_norms(points),
    )
    return particles, cache, chains


def update_weights(particles, cache_new, cache_old=None, workers=1, use_numba=None):
    """Add ``log pi(. | D_new) - log pi(. | D_old)`` to every log weight.

    The previous per-particle densities are taken from ``particles.log_dens``
    when present, otherwise computed from ``cache_old``. Non-finite updates
    set the weight to ``-inf`` and are counted in ``n_degenerate``.
    """
    if cache_old is cache_new:
        return dataclasses.replace(particles, stage=particles.stage + 1)
    old = particles.log_dens
    if old is None:
        old, _ = gp.log_density_batch(cache_old, particles.points, workers=workers, use_numba=use_numba)
    new, _ = gp.log_density_batch(cache_new, particles.points, workers=workers, use_numba=use_numba)
    delta = new - old
    lw = particles.log_weights + delta
    bad = ~np.isfinite(lw)
    newly_bad = int(np.count_nonzero(bad & np.isfinite(particles.log_weights)))
    lw[bad] = -np.inf
    return dataclasses.replace(
        particles,
        log_weights=lw,
        log_dens=new,
        stage=particles.stage + 1,
        n_degenerate=particles.n_degenerate + newly_bad,
    )


def resample(particles, M, rng):
    """Multinomial draw of ``M`` particle indices with probability proportional to the weights."""
    lw = particles.log_weights
    top = np.max(lw)
    if not np.isfinite(top):
        raise StageFailure("all particle weights are zero")
    w = np.exp(lw - top)
    w /= w.sum()
    return rng.choice(particles.N, size=M, replace=True, p=w)


def cluster_points(X, scores, lower, upper, fraction=CLUSTER_FRACTION):
    """Greedy radius clustering.

    Points are visited in increasing ``scores``; each joins the first seed
    within normalized distance 1 (coordinates divided by
    ``fraction * (upper - lower)``), otherwise it becomes a new seed. Returns
    ``(seed_indices, sizes)``; each seed is the lowest-score member of its
    cluster.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        return [], []
    scale = fraction * (np.asarray(upper, dtype=float) - np.asarray(lower, dtype=float))
    order = np.argsort(scores, kind="stable")
    seeds, sizes = [], []
    Z = X / scale
    for i in order:
        if seeds:
            dist = np.linalg.norm(Z[seeds] - Z[i], axis=1)
            j = int(np.argmin(dist))
            if dist[j] < 1.0:
                sizes[j] += 1
                continue
        seeds.append(int(i))
        sizes.append(1)
    return seeds, sizes


def shortcut_estimate(particles, obj, reducer="min-grad-norm", det_tol=1e-3):
    """Single estimate from the particle cloud: best objective value or smallest gradient norm."""
    P = particles.points if isinstance(particles, ParticleSet) else np.atleast_2d(particles)
    if P.shape[0] == 0:
        raise ValueError("empty particle set")
    if reducer == "min-grad-norm":
        i = int(np.argmin(obj.grad_norms(P)))
    elif reducer == "best-f":
        vals = obj.values(P)
        i = int(np.argmax(vals) if obj.sense == "maximize" else np.argmin(vals))
    else:
        raise ValueError(f"unknown reducer {reducer!r}")
    return make_estimate(P[i], obj, 1, det_tol)


def run(
    obj,
    region,
    schedule,
    S,
    cfg,
    hp,
    init_data=None,
    M=1000,
    seed=0,
    workers=1,
    inits=None,
    shortcut=None,
    max_augment=MAX_AUGMENT,
    cluster_fraction=CLUSTER_FRACTION,
    use_numba=None,
):
    """Full pipeline; never raises on stage failures, which are reported in ``diagnostics``."""
    if init_data is None:
        init_data = gp.Dataset.from_objective(obj, gp.default_design(obj.d))
    ss_chain, ss_resample = np.random.SeedSequence(seed).spawn(2)
    diagnostics = []
    try:
        particles, cache, chains = stage_zero(
            obj, region, cfg, hp, init_data, inits=inits, seed=ss_chain, workers=workers, use_numba=use_numba
        )
    except InitializationError as exc:
        diagnostics.append(f"no critical point in region: {exc}")
        return RunResult([], [], CountRecord((), M), None, "empty-region", diagnostics, init_data)

    chain = chains[0] if len(chains) == 1 else _merge_chains(chains)
    rng = np.random.default_rng(ss_resample)
    data = init_data
    cache_prev = cache
    stages = []
    count = CountRecord((), M)
    distinct = CountRecord((), M)
    passing_idx = []
    seen = set()
    for k in range(1, S + 1):
        eta = schedule(k)
        try:
            particles = update_weights(particles, cache, cache_prev, workers=workers, use_numba=use_numba)
            idx = resample(particles, M, rng)
        except StageFailure as exc:
            diagnostics.append(f"stage {k}: {exc}")
            break
        cand = idx[particles.grad_norms[idx] < eta]
        if cand.size:
            ok = second_order_mask(particles.points[cand], region, obj)
            cand = cand[ok]
        n_k = int(cand.size)
        uniq = list(dict.fromkeys(int(i) for i in cand))
        for i in uniq:
            if i not in seen:
                seen.add(i)
                passing_idx.append(i)
        pts = particles.points[uniq] if uniq else np.empty((0, obj.d))
        new_data, kept = data.augment(pts, obj.values(pts) if len(uniq) else [], limit=max_augment)
        cache_prev = cache
        if kept:
            try:
                cache = gp.build_cache(new_data, hp)
                data = new_data
            except FactorizationError as exc:
                diagnostics.append(f"stage {k}: augmentation skipped ({exc})")
                kept = []
        n_clusters = len(cluster_points(pts, particles.grad_norms[uniq], region.lower, region.upper, cluster_fraction)[0]) if uniq else 0
        count = count.append(n_k)
        distinct = distinct.append(n_clusters)
        stages.append(
            StageReport(k, eta, n_k, pts[kept] if kept else np.empty((0, obj.d)), data.n, len(uniq), particles.n_degenerate)
        )
        log.debug("stage %d eta=%.3g n_k=%d n=%d", k, eta, n_k, data.n)

    if shortcut is not None:
        estimates = [shortcut_estimate(particles, obj, shortcut, region.det_tol)]
    elif passing_idx:
        P = particles.points[passing_idx]
        g = particles.grad_norms[passing_idx]
        seeds, sizes = cluster_points(P, g, region.lower, region.upper, cluster_fraction)
        estimates = [make_estimate(P[s], obj, n, region.det_tol) for s, n in zip(seeds, sizes)]
    else:
        diagnostics.append("no stage accepted a point; using the smallest gradient norm among stage-0 particles")
        estimates = [shortcut_estimate(particles, obj, "min-grad-norm", region.det_tol)]
    return RunResult(stages, estimates, count, chain, "ok", diagnostics, data, particles, distinct)


def _merge_chains(chains):
    return ChainOutput(
        samples=np.vstack([c.samples for c in chains]),
        log_densities=np.concatenate([c.log_densities for c in chains]),
        iterations=np.concatenate([c.iterations for c in chains]),
        move_accepted=np.concatenate([c.move_accepted for c in chains]),
        acceptance_rates={
            f"chain{i}_{k}": v for i, c in enumerate(chains) for k, v in c.acceptance_rates.items()
        },
        n_target_evals=sum(c.n_target_evals for c in chains),
        init=np.vstack([c.init for c in chains]),
    )
