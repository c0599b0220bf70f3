"""Run configuration: INI parsing, validation, defaults and presets.

Grammar (``configparser`` INI, ``#`` or ``;`` comments, ``key = value``):

``[run]``
    objective (required), mode (required), epsilon, stages, resample_size,
    seed, workers, output_dir, shortcut (``none``, ``min-grad-norm``,
    ``best-f``), counting (``resampled`` or ``distinct-clusters``),
    corrected_shape, det_tol, inits (``x,y; x,y`` for one pooled chain per
    start, or ``none``)
``[objective]``
    d, m, instance_seed, data_path, lower, upper
``[schedule]``
    form, scale, offset
``[tmcmc]``
    kernel, burn_in, keep, thin, p, q, scales1, scales2, init (comma list,
    ``none`` or ``auto``), init_strategy, max_init_tries
``[gp]``
    a, b, beta0, sigma0, lengthscale (number or ``grid``), jitter,
    design_n, design_start, design_step

Vectors are comma separated; a single number is broadcast. Unknown sections
or keys and out-of-range values are all collected and reported together in a
:class:`ConfigError`.
"""

import configparser
import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import gp, objectives
from .constraints import MODES, RegionSpec
from .kernel import LengthScales
from .optimizer import SCHEDULE_FORMS, EtaSchedule
from .tmcmc import INIT_STRATEGIES, TmcmcConfig

SHORTCUTS = ("none", "min-grad-norm", "best-f")
COUNTING = ("resampled", "distinct-clusters")

DESK = {"burn_in": 20_000, "keep": 100_000, "thin": 10, "resample_size": 1000, "stages": 40}
PAPER = {"burn_in": 100_000, "keep": 500_000, "thin": 10, "resample_size": 1000, "stages": 40}

SCHEMA = {
    "run": {
        "objective", "mode", "epsilon", "stages", "resample_size", "seed", "workers", "output_dir",
        "shortcut", "counting", "corrected_shape", "det_tol", "inits",
    },
    "objective": {"d", "m", "instance_seed", "data_path", "lower", "upper"},
    "schedule": {"form", "scale", "offset"},
    "tmcmc": {
        "kernel", "burn_in", "keep", "thin", "p", "q", "scales1", "scales2", "init", "init_strategy",
        "max_init_tries",
    },
    "gp": {"a", "b", "beta0", "sigma0", "lengthscale", "jitter", "design_n", "design_start", "design_step"},
}


class ConfigError(ValueError):
    """Validation failure; ``problems`` lists every violation found."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


@dataclass
class RunConfig:
    objective: str
    mode: str
    epsilon: float
    schedule: EtaSchedule
    S: int
    tmcmc: TmcmcConfig
    hp: gp.GpHyperParams
    M: int = 1000
    workers: int = 1
    seed: int = 0
    output_dir: str = "out"
    corrected_shape: bool = False
    counting: str = "resampled"
    shortcut: str | None = None
    det_tol: float = 1e-3
    inits: list | None = None
    objective_params: dict = field(default_factory=dict)
    design: dict = field(default_factory=dict)
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    lengthscale_grid: bool = False

    def build_objective(self):
        obj = objectives.get_objective(self.objective, **self.objective_params)
        if self.lower is not None or self.upper is not None:
            lower = obj.lower if self.lower is None else self.lower
            upper = obj.upper if self.upper is None else self.upper
            obj = dataclasses.replace(obj, lower=lower, upper=upper)
        return obj

    def region(self, obj):
        return RegionSpec.for_objective(obj, self.epsilon, self.mode, self.det_tol)

    def initial_data(self, obj):
        return gp.Dataset.from_objective(obj, gp.default_design(obj.d, **self.design))


# per-objective defaults; example5 depends on d
def _objective_defaults(name, d):
    if name == "example4":
        return {"epsilon": 1.0, "kernel": "mixture", "schedule": ("inverse-square", 1.0, 10.0), "d": 2}
    if name == "example5":
        table = {
            2: (1.0, ("inverse", 1.0, 10.0)),
            5: (3.0, ("scaled-inverse-log", 1.5, 11.0)),
            10: (6.0, ("scaled-inverse-log", 7.0, 10.0)),
            50: (100.0, ("scaled-inverse-log", 200.0, 10.0)),
            100: (400.0, ("scaled-inverse-log", 850.0, 10.0)),
        }
        eps, sched = table.get(d, (1.0, ("inverse", 1.0, 10.0)))
        return {"epsilon": eps, "kernel": "mixture", "schedule": sched, "stages": 100 if d >= 50 else 40}
    dims = {"example1": 1, "example2": 1, "example3": 2}
    return {"epsilon": 1.0, "kernel": "additive", "schedule": ("inverse-square", 1.0, 10.0), "d": dims.get(name)}


def _floats(text):
    return [float(t) for t in text.replace(" ", "").split(",") if t]


def _bool(text):
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def auto_init(name, obj, region):
    """Start from the first iterate of a standard solver that lies in the prior support, if any.

    ``example4`` uses the textbook reference MLE; ``example5`` uses truncated
    trust-region least-squares iterates from the origin. Other objectives
    return ``None`` (uniform search over the box).
    """
    from .constraints import in_region

    if name == "example4":
        return np.asarray(objectives.EXAMPLE4_REFERENCE_MLE, dtype=float)
    if name == "example5":
        for x in objectives.solver_iterates(obj.params["instance"], steps=15):
            if in_region(x, region, obj):
                return x
    return None


def parse_config(source):
    """Parse an INI file (path) or INI text into a validated :class:`RunConfig`."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    text = source
    if isinstance(source, Path) or ("\n" not in str(source) and "[" not in str(source)):
        path = Path(source)
        if not path.is_file():
            raise ConfigError([f"config file not found: {path}"])
        text = path.read_text()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError([f"syntax error: {exc}"]) from None
    return config_from_mapping({s: dict(cp[s]) for s in cp.sections()})


def config_from_mapping(sections):
    problems = []
    for sec, keys in sections.items():
        if sec not in SCHEMA:
            problems.append(f"unknown section [{sec}]")
            continue
        for k in keys:
            if k not in SCHEMA[sec]:
                problems.append(f"unknown key {sec}.{k}")
    get = lambda sec, key, default=None: sections.get(sec, {}).get(key, default)

    def conv(sec, key, fn, default, check=None, why=""):
        raw = get(sec, key)
        if raw is None:
            return default
        try:
            val = fn(raw)
        except (TypeError, ValueError):
            problems.append(f"{sec}.{key}: cannot parse {raw!r}")
            return default
        if check is not None and not check(val):
            problems.append(f"{sec}.{key} = {raw}: {why}")
            return default
        return val

    name = get("run", "objective")
    mode = get("run", "mode")
    if name is None:
        problems.append("run.objective is required")
    elif name not in objectives.registered():
        problems.append(f"run.objective: unknown objective {name!r}; known: {objectives.registered()}")
        name = None
    if mode is None:
        problems.append("run.mode is required")
    elif mode not in MODES:
        problems.append(f"run.mode: {mode!r} is not one of {MODES}")

    d = conv("objective", "d", int, None, lambda v: v >= 1, "must be >= 1")
    dflt = _objective_defaults(name, d if d is not None else 2) if name else _objective_defaults("", None)
    if d is None:
        d = dflt.get("d") or 2
    if name in ("example1", "example2", "example3", "example4") and d != dflt["d"]:
        problems.append(f"objective.d = {d}: {name} has dimension {dflt['d']}")
        d = dflt["d"]
    if mode in ("saddle2d", "inconclusive2d") and d != 2:
        problems.append(f"run.mode {mode} needs a 2-dimensional objective")

    epsilon = conv("run", "epsilon", float, dflt["epsilon"], lambda v: v > 0, "must be positive")
    S = conv("run", "stages", int, dflt.get("stages", DESK["stages"]), lambda v: v >= 0, "must be >= 0")
    M = conv("run", "resample_size", int, DESK["resample_size"], lambda v: v >= 1, "must be >= 1")
    seed = conv("run", "seed", int, 0, lambda v: v >= 0, "must be >= 0")
    workers = conv("run", "workers", int, 1, lambda v: v >= 1, "must be a positive integer")
    output_dir = get("run", "output_dir", "out")
    shortcut = conv("run", "shortcut", str.strip, "none", lambda v: v in SHORTCUTS, f"must be one of {SHORTCUTS}")
    counting = conv("run", "counting", str.strip, "resampled", lambda v: v in COUNTING, f"must be one of {COUNTING}")
    corrected = conv("run", "corrected_shape", _bool, False)
    det_tol = conv("run", "det_tol", float, 1e-3, lambda v: v >= 0, "must be >= 0")
    inits = None
    raw_inits = get("run", "inits")
    if raw_inits is not None and raw_inits.strip().lower() != "none":
        try:
            inits = [np.asarray(_floats(p)) for p in raw_inits.split(";") if p.strip()]
            if any(v.size != d for v in inits):
                problems.append(f"run.inits: every start needs {d} coordinates")
        except ValueError:
            problems.append(f"run.inits: cannot parse {raw_inits!r}")

    oparams = {}
    if name == "example5":
        oparams["d"] = d
        m = conv("objective", "m", int, None, lambda v: v >= d, "must be >= d")
        if m is not None:
            oparams["m"] = m
        oparams["seed"] = conv("objective", "instance_seed", int, 0, lambda v: v >= 0, "must be >= 0")
    if name == "example4" and get("objective", "data_path") is not None:
        oparams["data_path"] = get("objective", "data_path")
    lower = conv("objective", "lower", lambda s: np.broadcast_to(_floats(s), (d,)).copy(), None)
    upper = conv("objective", "upper", lambda s: np.broadcast_to(_floats(s), (d,)).copy(), None)
    if lower is not None and upper is not None and np.any(lower >= upper):
        problems.append("objective.lower must be below objective.upper")

    form, sscale, soff = dflt["schedule"]
    form = conv("schedule", "form", str.strip, form, lambda v: v in SCHEDULE_FORMS, f"must be one of {SCHEDULE_FORMS}")
    sscale = conv("schedule", "scale", float, sscale, lambda v: v > 0, "must be positive")
    soff = conv("schedule", "offset", float, soff, lambda v: v > 0, "must be positive")
    schedule = None
    try:
        schedule = EtaSchedule(form, sscale, soff)
    except ValueError as exc:
        problems.append(f"schedule: {exc}")

    vec = lambda s: np.broadcast_to(_floats(s), (d,)).copy()
    kernel = conv("tmcmc", "kernel", str.strip, dflt["kernel"], lambda v: v in ("additive", "mixture"), "must be additive or mixture")
    burn_in = conv("tmcmc", "burn_in", int, DESK["burn_in"], lambda v: v >= 0, "must be >= 0")
    keep = conv("tmcmc", "keep", int, DESK["keep"], lambda v: v >= 1, "must be >= 1")
    thin = conv("tmcmc", "thin", int, DESK["thin"], lambda v: v >= 1, "must be >= 1")
    if keep < thin:
        problems.append("tmcmc.keep must be at least tmcmc.thin")
    p = conv("tmcmc", "p", float, 0.5, lambda v: 0 < v < 1, "must lie in (0, 1)")
    q = conv("tmcmc", "q", float, 0.5, lambda v: 0 < v < 1, "must lie in (0, 1)")
    dscale = 1.0 if kernel == "additive" else 0.05
    scales1 = conv("tmcmc", "scales1", vec, np.full(d, dscale), lambda v: np.all(v > 0), "must be positive")
    scales2 = conv("tmcmc", "scales2", vec, np.full(d, 0.05), lambda v: np.all(v > 0), "must be positive")
    init_raw = (get("tmcmc", "init") or "none").strip().lower()
    init = None
    if init_raw not in ("none", "auto"):
        init = conv("tmcmc", "init", lambda s: np.asarray(_floats(s)), None, lambda v: v.size == d, f"needs {d} coordinates")
    strategy = conv("tmcmc", "init_strategy", str.strip, "first-hit", lambda v: v in INIT_STRATEGIES, f"must be one of {INIT_STRATEGIES}")
    max_tries = conv("tmcmc", "max_init_tries", int, 10**6, lambda v: v >= 1, "must be >= 1")

    a = conv("gp", "a", float, 0.1, lambda v: v > 0, "must be positive")
    b = conv("gp", "b", float, 0.1, lambda v: v > 0, "must be positive")
    beta0 = conv("gp", "beta0", lambda s: np.broadcast_to(_floats(s), (d + 1,)).copy(), np.zeros(d + 1))
    sigma0 = conv("gp", "sigma0", float, 1.0, lambda v: v > 0, "must be positive")
    ls_raw = (get("gp", "lengthscale") or "1.0").strip().lower()
    grid = ls_raw == "grid"
    ls = 1.0 if grid else conv("gp", "lengthscale", vec, np.ones(d), lambda v: np.all(v > 0), "must be positive")
    jitter = conv("gp", "jitter", float, None, lambda v: v >= 0, "must be >= 0")
    design = {
        "n": conv("gp", "design_n", int, 10, lambda v: v >= 2, "must be >= 2"),
        "start": conv("gp", "design_start", float, -10.0),
        "step": conv("gp", "design_step", float, 2.0, lambda v: v != 0, "must be nonzero"),
    }

    if problems:
        raise ConfigError(problems)

    tm = TmcmcConfig(
        n_iter=burn_in + keep, burn_in=burn_in, thin=thin, p=p, q=q, scales1=scales1, scales2=scales2,
        kernel=kernel, init=init, seed=seed, max_init_tries=max_tries, init_strategy=strategy,
    )
    hp = gp.GpHyperParams(
        a, b, beta0, sigma0 * np.eye(d + 1), LengthScales(np.broadcast_to(ls, (d,)).copy()), jitter, corrected
    )
    cfg = RunConfig(
        objective=name, mode=mode, epsilon=epsilon, schedule=schedule, S=S, tmcmc=tm, hp=hp, M=M,
        workers=workers, seed=seed, output_dir=output_dir, corrected_shape=corrected, counting=counting,
        shortcut=None if shortcut == "none" else shortcut, det_tol=det_tol, inits=inits,
        objective_params=oparams, design=design, lower=lower, upper=upper, lengthscale_grid=grid,
    )
    cfg._auto_init = init_raw == "auto"
    return cfg


def resolve(cfg):
    """Build the objective, region and initial data; apply ``init = auto`` and the lengthscale grid.

    Returns ``(cfg, obj, region, init_data)`` with ``cfg`` updated in place.
    """
    obj = cfg.build_objective()
    region = cfg.region(obj)
    data = cfg.initial_data(obj)
    if getattr(cfg, "_auto_init", False):
        cfg.tmcmc = dataclasses.replace(cfg.tmcmc, init=auto_init(cfg.objective, obj, region))
    if cfg.lengthscale_grid:
        cfg.hp = gp.select_lengthscale(data, cfg.hp)
    return cfg, obj, region, data


# Reproductions of the worked examples at desk scale. Values not stated for
# an example (chain start, step scale) are documented choices.
PRESETS = {
    "example1-min": {"run": {"objective": "example1", "mode": "minimum"}},
    "example1-max": {"run": {"objective": "example1", "mode": "maximum"}},
    "example2-min": {"run": {"objective": "example2", "mode": "minimum"}, "tmcmc": {"scales1": "3.0"}},
    "example2-max": {"run": {"objective": "example2", "mode": "maximum"}, "tmcmc": {"scales1": "3.0"}},
    "example3-max": {"run": {"objective": "example3", "mode": "maximum"}},
    "example3-saddle-a": {"run": {"objective": "example3", "mode": "saddle2d"}, "tmcmc": {"init": "0.1, -1.1"}},
    "example3-saddle-b": {"run": {"objective": "example3", "mode": "saddle2d"}, "tmcmc": {"init": "1.1, -1.1"}},
    "example3-inconclusive": {
        "run": {"objective": "example3", "mode": "inconclusive2d"},
        "tmcmc": {"init_strategy": "min-score"},
    },
    "example3-min": {"run": {"objective": "example3", "mode": "minimum"}},
    "example4": {
        "run": {"objective": "example4", "mode": "gradient-only", "shortcut": "min-grad-norm", "stages": "0"},
        "tmcmc": {"kernel": "mixture", "init": "auto"},
    },
}
for _d in (2, 5, 10, 50, 100):
    PRESETS[f"example5-d{_d}"] = {
        "run": {"objective": "example5", "mode": "gradient-only", "shortcut": "min-grad-norm"},
        "objective": {"d": str(_d), "instance_seed": "0"},
        "tmcmc": {"kernel": "mixture", "init": "auto"},
    }
LONG_RUNNING = ("example5-d50", "example5-d100")


def preset_sections(name):
    if name not in PRESETS:
        raise KeyError(f"unknown example {name!r}; known: {sorted(PRESETS)}")
    base = {"run": {"seed": "0", "workers": "1", "output_dir": f"out/{name}"}}
    for sec, kv in PRESETS[name].items():
        base.setdefault(sec, {}).update(kv)
    return base


def preset_text(name):
    """INI text for a preset with every default written out."""
    cfg = config_from_mapping(preset_sections(name))
    sec = preset_sections(name)
    def fmt(v):
        v = np.atleast_1d(v)
        return repr(float(v[0])) if np.all(v == v[0]) else ", ".join(repr(float(x)) for x in v)

    t = cfg.tmcmc
    init = sec.get("tmcmc", {}).get("init", "none")
    lines = [
        f"# {name}" + ("  (long-running: hours)" if name in LONG_RUNNING else ""),
        "[run]",
        f"objective = {cfg.objective}",
        f"mode = {cfg.mode}",
        f"epsilon = {cfg.epsilon!r}",
        f"stages = {cfg.S}",
        f"resample_size = {cfg.M}",
        f"seed = {cfg.seed}",
        f"workers = {cfg.workers}",
        f"output_dir = {cfg.output_dir}",
        f"shortcut = {cfg.shortcut or 'none'}",
        f"counting = {cfg.counting}",
        f"corrected_shape = {str(cfg.corrected_shape).lower()}",
        f"det_tol = {cfg.det_tol!r}",
        "",
    ]
    if sec.get("objective"):
        lines += ["[objective]"] + [f"{k} = {v}" for k, v in sec["objective"].items()] + [""]
    lines += [
        "[schedule]",
        f"form = {cfg.schedule.form}",
        f"scale = {cfg.schedule.scale!r}",
        f"offset = {cfg.schedule.offset!r}",
        "",
        "[tmcmc]",
        f"kernel = {t.kernel}",
        f"burn_in = {t.burn_in}",
        f"keep = {t.n_iter - t.burn_in}",
        f"thin = {t.thin}",
        f"p = {t.p!r}",
        f"q = {t.q!r}",
        f"scales1 = {fmt(t.scales1)}",
        f"scales2 = {fmt(t.scales2)}",
        f"init = {init}",
        f"init_strategy = {t.init_strategy}",
        f"max_init_tries = {t.max_init_tries}",
        "",
        "[gp]",
        f"a = {cfg.hp.a!r}",
        f"b = {cfg.hp.b!r}",
        f"beta0 = {fmt(cfg.hp.beta0)}",
        "sigma0 = 1.0",
        f"lengthscale = {fmt(cfg.hp.ls.lam)}",
        f"design_n = {cfg.design['n']}",
        f"design_start = {cfg.design['start']!r}",
        f"design_step = {cfg.design['step']!r}",
        "",
    ]
    return "\n".join(lines)
