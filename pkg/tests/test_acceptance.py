"""Acceptance checks, one test per criterion, each printing a PASS/FAIL line.

Criteria 5 and 6 are long Monte Carlo runs; their results are cached by
``acceptance_runs`` and produced ahead of time with
``scripts/run_slow_acceptance.py``.
"""
import time

import numpy as np
import pytest
from scipy import stats

from vinegof import _rng, bootstrap, cli, infomatrix, models, rvine, transforms
from vinegof import pair_copulas as pc
from vinegof import statistics as st
from vinegof.pair_copulas import Family

import acceptance_runs
import oracles


def bivariate(family, par):
    code = pc.PairCopulaSpec(family, 0, par).code
    return rvine.RVineSpec([[2], [1, 1]], [[0], [code, 0]], [[0], [par, 0]])


def test_criterion_1_density_oracle(criterion):
    spec = models.five_dim_model()
    u = np.random.default_rng(2024).uniform(0.0, 1.0, size=(100, 5))
    start = time.perf_counter()
    ll = rvine.loglik(spec, u)[1]
    elapsed = time.perf_counter() - start
    err = float(np.max(np.abs(ll - oracles.five_dim_logdensity(u))))
    ok = err < 1e-10 and elapsed < 1.0
    assert criterion(1, ok, f"max |diff| = {err:.2e} (< 1e-10), {elapsed:.3f} s (< 1 s)")


def test_criterion_2_pit(criterion):
    start = time.perf_counter()
    errs = {}
    specs = {2: bivariate(Family.CLAYTON, 2.0), 5: models.five_dim_model(),
             8: models.eight_dim_model()}
    for d, spec in specs.items():
        u = rvine.simulate(spec, 2000, 77)
        w = np.clip(_rng.generator(77, _rng.TAG_SIMULATE).random((2000, d)), pc.UMIN, pc.UMAX)
        errs[d] = float(np.max(np.abs(transforms.rosenblatt(spec, u) - w)))
    five = specs[5]
    y = transforms.rosenblatt(five, rvine.simulate(five, 2000, 78))
    ks = min(stats.kstest(y[:, j], "uniform").pvalue for j in range(5))
    rho = oracles.spearman_matrix(y)
    sp = float(np.max(np.abs(rho[np.triu_indices(5, 1)])))
    elapsed = time.perf_counter() - start
    ok = max(errs.values()) < 1e-8 and ks > 0.01 and sp < 0.08 and elapsed < 10
    detail = (f"roundtrip {', '.join(f'd={d}: {e:.1e}' for d, e in errs.items())} (< 1e-8); "
              f"min KS p = {ks:.3f} (> 0.01); max |Spearman| = {sp:.3f} (< 0.08); "
              f"{elapsed:.1f} s (< 10 s)")
    assert criterion(2, ok, detail)


def test_criterion_3_bartlett(criterion):
    spec = bivariate(Family.CLAYTON, 2.0)
    u = rvine.simulate(spec, 10_000, 3)
    d = infomatrix.info_matrices(spec, u).per_obs_d
    z = float(np.max(np.abs(d.mean(axis=0)) / (d.std(axis=0, ddof=1) / np.sqrt(d.shape[0]))))
    ir = []
    for r in range(50):
        x = rvine.simulate(spec, 1000, 1000 + r)
        ir.append(infomatrix.ir_statistic(infomatrix.info_matrices(bootstrap.fit(spec, x), x)).IR_n)
    mean_ir = float(np.mean(ir))
    ok = z < 3 and abs(mean_ir - 1) <= 0.05
    assert criterion(3, ok, f"max |mean vech(H+C)| / SE = {z:.2f} (< 3); "
                            f"mean IR over 50 fits = {mean_ir:.4f} (1 +/- 0.05)")


def test_criterion_4_breymann_null(criterion):
    spec = models.five_dim_model()
    s = transforms.aggregate(transforms.rosenblatt(spec, rvine.simulate(spec, 5000, 4)),
                             transforms.BREYMANN)
    se = s.std(ddof=1) / np.sqrt(s.size)
    gap = abs(s.mean() - 5)
    ks = stats.kstest(st.null_cdf(transforms.BREYMANN, 5)(s), "uniform").pvalue
    ok = gap < 3 * se and ks > 0.01
    assert criterion(4, ok, f"mean s = {s.mean():.4f} (5 +/- {3 * se:.4f}); KS p = {ks:.3f} (> 0.01)")


@pytest.mark.slow
def test_criterion_5_size(criterion):
    res = acceptance_runs.size_run()
    sizes = res["sizes"]
    ok = all(0.02 <= v <= 0.09 for v in sizes.values())
    s = acceptance_runs.SIZE_SETTINGS
    detail = (f"n={s['n']}, B={s['B']}, R={s['R']}: "
              + ", ".join(f"{t} {v:.3f}" for t, v in sizes.items()) + " (in [0.02, 0.09])")
    assert criterion(5, ok, detail)


@pytest.mark.slow
def test_criterion_6_power_ordering(criterion):
    power = acceptance_runs.pooled_power(acceptance_runs.power_run())
    weak = max(power["berg-cvm"], power["berg2-cvm"])
    ok = power["ecp2-cvm"] > weak and power["ir"] > weak
    detail = ("power pooled over C-vine, D-vine, Gauss: "
              + ", ".join(f"{t} {v:.3f}" for t, v in power.items())
              + " (ecp2-cvm and ir above both Berg tests)")
    assert criterion(6, ok, detail)


def test_criterion_7_klic(criterion):
    truth = models.five_dim_model()
    self_est, self_se = bootstrap.klic_mc(truth, truth, 10_000, 1)
    prerun = rvine.simulate(truth, 1000, 20131, stream=(bootstrap.TAG_PRERUN,))
    gauss = bootstrap.fit(models.gauss_alternative(truth), prerun)
    est, se = bootstrap.klic_mc(truth, gauss, 100_000, 2)
    ok = abs(self_est) <= 3 * self_se and abs(est - 0.72) <= 0.15
    assert criterion(7, ok, f"self = {self_est:.2e} (0 +/- 3 SE); "
                            f"Gauss = {est:.4f} +/- {se:.4f} (0.72 +/- 0.15)")


def test_criterion_8_statistic_oracles(criterion):
    ks = st.uni_stat("ks", [0.25, 0.5, 0.75]).value
    emp = st.empirical_copula([[0.2, 0.3], [0.5, 0.6], [0.8, 0.9]], [0.5, 0.6])
    worst = 0.0
    for n in (1, 2, 10, 25, 50):
        y = np.random.default_rng(n).random((n, 4))
        worst = max(worst, abs(st.ecp2_stat("ecp2-cvm", y).value
                               - oracles.ecp2_cvm_bruteforce(y.tolist())))
    ok = abs(ks - 0.25) < 1e-15 and emp == 0.5 and worst < 1e-12
    assert criterion(8, ok, f"KS = {ks} (0.25); empirical copula = {emp} (0.5); "
                            f"ECP2 vs double loop {worst:.1e} (< 1e-12)")


def test_criterion_9_determinism(criterion, tmp_path):
    model = acceptance_runs.STUDY_CONFIG.parent / "five_dim.json"
    outputs = []
    for k, workers in enumerate((1, 2, 3)):
        d = tmp_path / str(k)
        d.mkdir()
        codes = [cli.run(["simulate", "--model", str(model), "--n", "150", "--seed", "5",
                          "--out", str(d / "u.csv")]),
                 cli.run(["fit", "--model", str(model), "--data", str(d / "u.csv"),
                          "--out", str(d / "f.json")]),
                 cli.run(["gof", "--model", str(d / "f.json"), "--data", str(d / "u.csv"),
                          "--test", "all", "--B", "3", "--seed", "6", "--out",
                          str(d / "r.json"), "--workers", str(workers)]),
                 cli.run(["klic", "--true", str(model), "--alt", str(d / "f.json"),
                          "--N", "2000", "--seed", "7", "--out", str(d / "k.json")])]
        assert codes == [0, 0, 0, 0]
        outputs.append(tuple((d / f).read_bytes() for f in ("u.csv", "f.json", "r.json", "k.json")))
    ok = outputs[0] == outputs[1] == outputs[2]
    assert criterion(9, ok, "simulate, fit, gof (all 15 tests) and klic byte-identical "
                            "across 3 runs with --workers 1, 2, 3")
