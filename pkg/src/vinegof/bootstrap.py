"""Parametric-bootstrap p-values, the size/power study and Monte Carlo KLIC."""
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _rng
from . import battery, rvine
from .errors import DomainError, StudyError, VineError

log = logging.getLogger(__name__)

MIN_SUCCESS_FRACTION = 0.95
TAG_PRERUN = 7


# ---------------------------------------------------------------------------
# fitting helper shared by all Monte Carlo loops
# ---------------------------------------------------------------------------

def fit(spec, data):
    """Sequential start followed by joint maximum likelihood."""
    start = rvine.fit_sequential(spec, data, clip_tau=True)
    fitted, _ = rvine.fit_mle(start, data)
    return fitted


def _safe_stats(test_ids, spec, data, seed, approx_n):
    """Fit ``spec`` to ``data`` and evaluate the tests; failures become NaN."""
    out = {t: np.nan for t in test_ids}
    try:
        fitted = fit(spec, data)
    except (VineError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.debug("fit failed: %s", exc)
        return out
    ctx = battery.StatContext(fitted, data, seed, approx_n)
    for t in test_ids:
        try:
            val = float(ctx.statistic(t))
            out[t] = val if np.isfinite(val) else np.nan
        except (VineError, FloatingPointError, np.linalg.LinAlgError) as exc:
            log.debug("statistic %s failed: %s", t, exc)
    return out


def _run(tasks, fn, workers):
    """Map ``fn`` over ``tasks`` in order; the worker count never changes results."""
    if workers is None or workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def empirical_pvalue(t_obs, reference):
    """``#{t_r >= t_obs} / B`` over the finite reference values, floored at ``1/B``."""
    ref = np.asarray(reference, dtype=float)
    ref = ref[np.isfinite(ref)]
    B = ref.size
    if B == 0:
        raise StudyError("no successful bootstrap replication")
    return max(1.0 / B, float(np.count_nonzero(ref >= t_obs)) / B)


def _require_success(values, B, what):
    ok = int(np.count_nonzero(np.isfinite(values)))
    if ok < MIN_SUCCESS_FRACTION * B:
        raise StudyError(f"{what}: only {ok} of {B} replications succeeded")
    if ok < B:
        log.warning("%s: %d of %d replications failed", what, B - ok, B)
    return ok


# ---------------------------------------------------------------------------
# bootstrap p-values
# ---------------------------------------------------------------------------

@dataclass
class TestReport:
    """Outcome of one bootstrap test."""

    test: str
    statistic: float
    p_value: float
    B: int
    seed: int
    n: int
    d: int
    reference: np.ndarray = field(default=None, repr=False)
    failures: int = 0

    def to_dict(self):
        return {"test": self.test, "statistic": float(self.statistic),
                "p_value": float(self.p_value), "B": int(self.B), "seed": int(self.seed),
                "n": int(self.n), "d": int(self.d)}


def _boot_task(args):
    test_ids, fitted, n, seed, r, approx_n = args
    u = rvine.simulate(fitted, n, seed, stream=(_rng.TAG_BOOT, r))
    stats = _safe_stats(test_ids, fitted, u, _rng.child_seed(seed, _rng.TAG_SURROGATE, r),
                        approx_n)
    return [stats[t] for t in test_ids]


def bootstrap_pvalues(test_ids, spec_h0, data, B, seed, workers=1, approx_n=None):
    """Parametric-bootstrap p-values for several tests sharing the refits.

    The parameters of ``spec_h0`` are re-estimated on ``data``; each of the
    ``B`` replications simulates ``n`` rows from that fit, refits and
    recomputes every statistic.

    Returns
    -------
    dict mapping test id to :class:`TestReport`
    """
    test_ids = battery.check_test_ids(test_ids)
    B = int(B)
    if B < 2:
        raise DomainError("B must be at least 2")
    data = np.asarray(data, dtype=float)
    n, d = data.shape
    fitted = fit(spec_h0, data)
    ctx = battery.StatContext(fitted, data, _rng.child_seed(seed, _rng.TAG_SURROGATE, 0),
                              approx_n)
    observed = {t: float(ctx.statistic(t)) for t in test_ids}
    tasks = [(test_ids, fitted, n, seed, r, approx_n) for r in range(1, B + 1)]
    ref = np.array(_run(tasks, _boot_task, workers), dtype=float).reshape(B, len(test_ids))
    reports = {}
    for j, t in enumerate(test_ids):
        ok = _require_success(ref[:, j], B, f"bootstrap of {t}")
        reports[t] = TestReport(t, observed[t], empirical_pvalue(observed[t], ref[:, j]),
                                B, int(seed), n, d, ref[:, j].copy(), B - ok)
    return reports


def bootstrap_pvalue(test_id, spec_h0, data, B, seed, workers=1, approx_n=None):
    """Parametric-bootstrap p-value of one test; see :func:`bootstrap_pvalues`."""
    return bootstrap_pvalues([test_id], spec_h0, data, B, seed, workers, approx_n)[test_id]


def _outer_task(args):
    test_ids, spec, n, B, seed, r, approx_n = args
    u = rvine.simulate(spec, n, seed, stream=(_rng.TAG_OUTER, r))
    try:
        reports = bootstrap_pvalues(test_ids, spec, u, B, _rng.child_seed(seed, _rng.TAG_OUTER, r),
                                    approx_n=approx_n)
    except (VineError, FloatingPointError, np.linalg.LinAlgError) as exc:
        log.debug("outer replication %d failed: %s", r, exc)
        return [np.nan] * len(test_ids)
    return [reports[t].p_value for t in test_ids]


def bootstrap_size(test_ids, spec, n, B, R, seed, alpha=0.05, workers=1, approx_n=None):
    """Monte Carlo size of the full bootstrap tests.

    ``R`` samples of size ``n`` are drawn from ``spec``; each gets its own
    ``B``-replication parametric bootstrap with refits.

    Returns
    -------
    sizes : dict
        Test id to rejection rate at ``alpha`` over the successful samples.
    p_values : dict
        Test id to the array of ``R`` p-values (NaN where a sample failed).
    """
    test_ids = battery.check_test_ids(test_ids)
    tasks = [(test_ids, spec, int(n), int(B), seed, r, approx_n) for r in range(1, int(R) + 1)]
    flat = np.array(_run(tasks, _outer_task, workers), dtype=float).reshape(int(R), len(test_ids))
    sizes, pvals = {}, {}
    for j, t in enumerate(test_ids):
        p = flat[:, j]
        _require_success(p, int(R), f"size of {t}")
        sizes[t] = float(np.mean(p[np.isfinite(p)] <= alpha))
        pvals[t] = p
    return sizes, pvals


# ---------------------------------------------------------------------------
# size / power study
# ---------------------------------------------------------------------------

@dataclass
class StudyConfig:
    """Settings of a size/power study.

    ``alternatives`` are used as given unless ``prerun_n`` is set, in which
    case their parameters are estimated on one sample of size ``prerun_n``
    from the true model. ``select_families`` (one flag, or one per
    alternative) additionally re-selects their pair-copula families by AIC.
    """

    true_model: rvine.RVineSpec
    alternatives: list
    n: int
    B: int
    alpha: float = 0.05
    seed: int = 0
    tests: list = field(default_factory=lambda: list(battery.TEST_IDS))
    alternative_names: list = None
    prerun_n: int = None
    select_families: object = False
    approx_n: int = None

    def __post_init__(self):
        self.tests = battery.check_test_ids(self.tests)
        if self.B < 2:
            raise DomainError("B must be at least 2")
        if not 0.0 < self.alpha < 1.0:
            raise DomainError("alpha must lie in (0, 1)")
        if self.n < 1:
            raise DomainError("n must be positive")
        for s in [self.true_model] + list(self.alternatives):
            s.require_valid()
            if s.d != self.true_model.d:
                raise DomainError("all models must have the same dimension")
        if self.alternative_names is None:
            self.alternative_names = [f"alternative_{j + 1}" for j in range(len(self.alternatives))]
        if len(self.alternative_names) != len(self.alternatives):
            raise DomainError("one name per alternative is required")
        if not isinstance(self.select_families, (list, tuple)):
            self.select_families = [bool(self.select_families)] * len(self.alternatives)
        self.select_families = [bool(x) for x in self.select_families]
        if len(self.select_families) != len(self.alternatives):
            raise DomainError("one select_families flag per alternative is required")
        if "true" in self.alternative_names or len(set(self.alternative_names)) != len(
                self.alternative_names):
            raise DomainError("alternative names must be unique and differ from 'true'")

    def to_dict(self):
        out = {"true_model": self.true_model.to_dict(),
               "alternatives": [a.to_dict() for a in self.alternatives],
               "n": int(self.n), "B": int(self.B), "alpha": float(self.alpha),
               "seed": int(self.seed), "tests": list(self.tests),
               "names": list(self.alternative_names)}
        if self.prerun_n:
            out["prerun"] = {"n": int(self.prerun_n), "select_families": list(self.select_families)}
        if self.approx_n:
            out["approx_n"] = int(self.approx_n)
        return out

    @classmethod
    def from_dict(cls, obj):
        try:
            pre = obj.get("prerun") or {}
            return cls(true_model=rvine.RVineSpec.from_dict(obj["true_model"]),
                       alternatives=[rvine.RVineSpec.from_dict(a) for a in obj["alternatives"]],
                       n=int(obj["n"]), B=int(obj["B"]), alpha=float(obj["alpha"]),
                       seed=int(obj["seed"]), tests=list(obj["tests"]),
                       alternative_names=obj.get("names"),
                       prerun_n=int(pre["n"]) if pre.get("n") else None,
                       select_families=pre.get("select_families", False),
                       approx_n=int(obj["approx_n"]) if obj.get("approx_n") else None)
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed study configuration: {exc}") from exc


@dataclass
class StudyResult:
    """Per test and model: the estimated rejection rate and all p-values."""

    alpha: float
    models: list
    estimates: dict
    p_values: dict
    statistics: dict
    alternatives: list = None

    def to_dict(self):
        return {"alpha": float(self.alpha),
                "results": {t: {m: {"estimate": float(self.estimates[t][m]),
                                    "p_values": [float(p) for p in self.p_values[t][m]]}
                                for m in self.models}
                            for t in self.estimates}}

    def estimate_at(self, test, model, alpha):
        """Rejection rate at another level, from the stored p-values."""
        p = np.asarray(self.p_values[test][model])
        return float(np.mean(p <= alpha))


def prepare_alternatives(config):
    """Estimate the alternatives on a pre-run sample if the config asks for it."""
    if not config.prerun_n:
        return list(config.alternatives)
    u0 = rvine.simulate(config.true_model, config.prerun_n, config.seed, stream=(TAG_PRERUN,))
    out = []
    for alt, select in zip(config.alternatives, config.select_families):
        if select:
            start = rvine.select_families(alt.matrix, u0)
            if start.nparams:
                start, _ = rvine.fit_mle(start, u0)
            out.append(start)
        else:
            out.append(fit(alt, u0))
    return out


def _study_task(args):
    test_ids, true_model, model, tag, idx, n, seed, r, approx_n = args
    key = (tag, r) if idx is None else (tag, idx, r)
    u = rvine.simulate(model, n, seed, stream=key)
    surrogate_seed = _rng.child_seed(seed, _rng.TAG_SURROGATE, *key)
    stats = _safe_stats(test_ids, true_model, u, surrogate_seed, approx_n)
    return [stats[t] for t in test_ids]


def size_power_study(config, workers=1):
    """Size and power of every configured test.

    For ``r = 1..B`` a sample is drawn from the true model and from every
    alternative; the true model's parameters are re-estimated on each and the
    statistics computed. p-values of all samples are taken against the
    reference sample of statistics under the true model.
    """
    alts = prepare_alternatives(config)
    names = ["true"] + list(config.alternative_names)
    tests = config.tests
    tasks = []
    for r in range(1, config.B + 1):
        tasks.append((tests, config.true_model, config.true_model, _rng.TAG_NULL, None,
                      config.n, config.seed, r, config.approx_n))
        for j, alt in enumerate(alts):
            tasks.append((tests, config.true_model, alt, _rng.TAG_ALT, j,
                          config.n, config.seed, r, config.approx_n))
    flat = np.array(_run(tasks, _study_task, workers), dtype=float)
    flat = flat.reshape(config.B, len(names), len(tests))
    estimates, pvals, tstats = {}, {}, {}
    for k, t in enumerate(tests):
        ref = flat[:, 0, k]
        _require_success(ref, config.B, f"study reference of {t}")
        estimates[t], pvals[t], tstats[t] = {}, {}, {}
        for m, name in enumerate(names):
            vals = flat[:, m, k]
            _require_success(vals, config.B, f"study of {t} under {name}")
            p = np.array([empirical_pvalue(v, ref) for v in vals[np.isfinite(vals)]])
            estimates[t][name] = float(np.mean(p <= config.alpha))
            pvals[t][name] = p
            tstats[t][name] = vals
    return StudyResult(config.alpha, names, estimates, pvals, tstats, alts)


# ---------------------------------------------------------------------------
# KLIC
# ---------------------------------------------------------------------------

def klic_mc(true_spec, alt_spec, N, seed):
    """Monte Carlo Kullback-Leibler divergence of ``alt_spec`` from ``true_spec``.

    Returns
    -------
    estimate : float
    standard_error : float
    """
    if true_spec.d != alt_spec.d:
        raise DomainError("models must have the same dimension")
    N = int(N)
    if N < 2:
        raise DomainError("N must be at least 2")
    u = rvine.simulate(true_spec, N, seed, stream=(_rng.TAG_KLIC,))
    diff = rvine.loglik(true_spec, u)[1] - rvine.loglik(alt_spec, u)[1]
    return float(diff.mean()), float(diff.std(ddof=1) / np.sqrt(N))
