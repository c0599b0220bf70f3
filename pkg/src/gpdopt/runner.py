"""Drive a configured run and write its output directory.

Files written:

``trace.csv``
    stored chain states, ``iter,x_1..x_d,log_post,move_accepted``
``stages.csv``
    ``k,eta_k,n_k,dataset_size``
``estimates.json``
    ``{"status", "estimates", "diagnostics"}``; no timings, so reruns are
    byte-identical
``count.json``
    Dirichlet-process summaries for the configured counting variant, plus
    the other variant under ``"alternate"``
"""

import csv
import json
import logging
from pathlib import Path

from . import counting, optimizer
from .config import resolve
from .optimizer import Estimate
from .tmcmc import write_trace

log = logging.getLogger(__name__)


def execute(cfg, use_numba=None):
    """Resolve ``cfg`` and run the optimizer; returns ``(result, obj)``."""
    cfg, obj, region, data = resolve(cfg)
    result = optimizer.run(
        obj,
        region,
        cfg.schedule,
        cfg.S,
        cfg.tmcmc,
        cfg.hp,
        init_data=data,
        M=cfg.M,
        seed=cfg.seed,
        workers=cfg.workers,
        inits=cfg.inits,
        shortcut=cfg.shortcut,
        use_numba=use_numba,
    )
    return result, obj


def estimates_payload(result):
    return {
        "status": result.status,
        "estimates": [e.to_dict() for e in result.estimates],
        "diagnostics": list(result.diagnostics),
    }


def dumps(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=True) + "\n"


def read_estimates(path):
    """Parse ``estimates.json`` back into ``(status, [Estimate], diagnostics)``."""
    payload = json.loads(Path(path).read_text())
    return payload["status"], [Estimate.from_dict(e) for e in payload["estimates"]], payload["diagnostics"]


def write_outputs(result, out_dir, counting_variant="resampled"):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if result.chain is not None:
        write_trace(out / "trace.csv", result.chain)
    with open(out / "stages.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "eta_k", "n_k", "dataset_size"])
        for s in result.stages:
            w.writerow([s.k, repr(float(s.eta_k)), s.n_k, s.dataset_size])
    (out / "estimates.json").write_text(dumps(estimates_payload(result)))
    records = {"resampled": result.count, "distinct-clusters": result.distinct_count}
    other = "distinct-clusters" if counting_variant == "resampled" else "resampled"
    payload = _count_dict(records[counting_variant], counting_variant)
    payload["alternate"] = _count_dict(records[other], other)
    (out / "count.json").write_text(dumps(payload))
    return out


def _count_dict(record, variant):
    if record is None or record.k == 0:
        return {"variant": variant, "y": [], "k": 0, "table": [], "converged_count": None}
    return counting.to_json_dict(record, variant=variant)
