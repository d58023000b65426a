"""Long Monte Carlo runs behind the size and power acceptance checks.

Results are cached under ``tests/.cache``. The cache key combines the run
settings with a fingerprint: the exact output of a small bootstrap and
study computed by the current code. Any change that alters numbers
therefore invalidates the cache, while pure refactors keep it.
``scripts/run_slow_acceptance.py`` fills the cache in the background.
"""
import functools
import hashlib
import json
from pathlib import Path

import numpy as np

from vinegof import bootstrap, io, models, rvine

CACHE = Path(__file__).resolve().parent / ".cache"
STUDY_CONFIG = Path(__file__).resolve().parents[1] / "models" / "study_d5.json"

SIZE_TESTS = ["ir", "white", "ecp-cvm", "ecp2-cvm", "breymann-ad"]
SIZE_SETTINGS = {"n": 500, "B": 200, "R": 200, "seed": 20240501, "alpha": 0.05}


@functools.cache
def _fingerprint():
    spec = models.five_dim_model()
    u = rvine.simulate(spec, 150, 11)
    reps = bootstrap.bootstrap_pvalues(SIZE_TESTS + ["berg-cvm", "berg2-cvm"], spec, u, 3, 5)
    out = {t: [r.statistic, r.p_value, r.reference.tolist()] for t, r in reps.items()}
    cfg = study_config()
    out["alternatives"] = [a.to_dict() for a in bootstrap.prepare_alternatives(cfg)]
    return out


def _key(name, settings):
    blob = json.dumps({"name": name, "settings": settings, "fp": _fingerprint()},
                      sort_keys=True, default=float)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _cached(name, settings, compute):
    path = CACHE / f"{name}-{_key(name, settings)}.json"
    if path.exists():
        return json.loads(path.read_text())
    result = compute()
    CACHE.mkdir(exist_ok=True)
    path.write_text(json.dumps(result, sort_keys=True))
    return result


def study_config():
    return bootstrap.StudyConfig.from_dict(io.read_json(STUDY_CONFIG))


def size_run(workers=1):
    """Double-bootstrap size of the five tests; ``{"sizes": ..., "p_values": ...}``."""
    s = SIZE_SETTINGS

    def compute():
        sizes, pvals = bootstrap.bootstrap_size(SIZE_TESTS, models.five_dim_model(), s["n"],
                                                s["B"], s["R"], s["seed"], s["alpha"], workers)
        return {"sizes": sizes,
                "p_values": {t: [None if np.isnan(x) else float(x) for x in p]
                             for t, p in pvals.items()}}

    return _cached("size", s, compute)


def power_run(workers=1):
    """The study of ``models/study_d5.json``; returns ``StudyResult.to_dict()``."""
    cfg = study_config()
    return _cached("power", cfg.to_dict(),
                   lambda: bootstrap.size_power_study(cfg, workers).to_dict())


def pooled_power(result):
    """Rejection rate per test, averaged over the alternatives."""
    res = result["results"]
    return {t: float(np.mean([v["estimate"] for m, v in res[t].items() if m != "true"]))
            for t in res}
