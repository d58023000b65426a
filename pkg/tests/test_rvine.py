import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as hst
from numpy.testing import assert_allclose, assert_array_equal

from vinegof import models, rvine
from vinegof import pair_copulas as pc
from vinegof.errors import ConvergenceError, DomainError, NumericalError
from vinegof.pair_copulas import Family, PairCopulaSpec
from vinegof.rvine import RVineMatrix, RVineSpec

import oracles

F = Family


def bivariate(family, params, rotation=0):
    code = PairCopulaSpec(family, rotation, params).code
    p = list(np.atleast_1d(params)) + [0.0]
    return RVineSpec([[2], [1, 1]], [[0], [code, 0]], [[0], [p[0], 0]], [[0], [p[1], 0]])


def independence(d):
    m = models.dvine_matrix(tuple(range(1, d + 1)))
    return RVineSpec(m, np.zeros((d, d), dtype=int))


@pytest.fixture(scope="module")
def five():
    return models.five_dim_model()


@pytest.fixture(scope="module")
def eight():
    return models.eight_dim_model()


# -- structure -----------------------------------------------------------------

def test_printed_normalized_matrix_is_valid():
    assert models.normalized_matrix().violations() == []


def test_duplicate_entry_in_column():
    m = [[5], [4, 4], [3, 3, 3], [1, 2, 2, 2], [1, 1, 1, 1, 1]]
    bad = RVineMatrix(m).violations()
    assert any(b.startswith("column not a set") for b in bad)


def test_one_by_one_matrix():
    assert RVineMatrix([[1]]).violations() == ["dimension < 2"]


def test_proximity_violation_reported_with_cell():
    # the edge 5,4|3,1 needs a tree-2 edge 4,3|1, but column 2 only provides 4,2|1
    m = [[5], [2, 4], [4, 3, 3], [3, 2, 2, 2], [1, 1, 1, 1, 1]]
    bad = RVineMatrix(m).violations()
    assert bad and all("proximity" in b for b in bad)
    assert "cell (" in bad[0]


def test_invalid_matrix_rejected_by_loglik():
    m = [[5], [2, 4], [4, 3, 3], [3, 2, 2, 2], [1, 1, 1, 1, 1]]
    spec = RVineSpec(m, np.zeros((5, 5), dtype=int))
    with pytest.raises(DomainError):
        rvine.loglik(spec, np.full((1, 5), 0.5))


def test_five_dim_edges_match_table(five):
    labels = {e.label() for e in five.matrix.edges()}
    expected = set()
    for a, b, cond, _, _ in models.FIVE_DIM_EDGES:
        expected.add((frozenset((a, b)), frozenset(cond)))
    got = {(frozenset(e.conditioned), frozenset(e.conditioning)) for e in five.matrix.edges()}
    assert got == expected
    assert len(labels) == 10


def test_eight_dim_edges_match_table(eight):
    got = {(frozenset(e.conditioned), frozenset(e.conditioning)) for e in eight.matrix.edges()}
    expected = {(frozenset((a, b)), frozenset(c)) for a, b, c, _, _ in models.EIGHT_DIM_EDGES}
    assert got == expected
    for e in eight.matrix.edges():
        assert e.tree == len(e.conditioning) + 1


def test_normalized_relabelling_preserves_density(five):
    renamed = models.five_dim_model_normalized()
    assert_array_equal(renamed.matrix.diagonal, [5, 4, 3, 2, 1])
    u = rvine.simulate(five, 50, 3)
    perm = np.empty_like(u)
    for old, new in models.NORMALIZED_RELABEL.items():
        perm[:, new - 1] = u[:, old - 1]
    assert_allclose(rvine.loglik(renamed, perm)[1], rvine.loglik(five, u)[1], atol=1e-12)


def test_normalized_method(five):
    m, relabel = five.matrix.normalized()
    assert_array_equal(m.diagonal, [5, 4, 3, 2, 1])
    assert m.violations() == []
    assert sorted(relabel) == [1, 2, 3, 4, 5]


def test_cvine_and_dvine_matrices():
    for m in (models.cvine_matrix(), models.dvine_matrix()):
        assert m.violations() == []
    roots = {e.conditioned for e in models.cvine_matrix().edges() if e.tree == 1}
    assert all(2 in pair for pair in roots)


# -- likelihood ----------------------------------------------------------------

def test_independence_loglik_zero():
    spec = independence(4)
    u = np.random.default_rng(1).random((20, 4))
    total, per = rvine.loglik(spec, u)
    assert total == 0.0
    assert_array_equal(per, 0.0)


def test_bivariate_gauss_loglik():
    rho = math.sin(math.pi * 0.71 / 2)
    total, _ = rvine.loglik(bivariate(F.GAUSS, rho), [[0.5, 0.5]])
    assert total == pytest.approx(0.8212, abs=1e-3)
    assert total == pytest.approx(-0.5 * math.log(1 - rho ** 2), abs=1e-13)


def test_loglik_matches_hand_chained_factorization(five):
    u = np.random.default_rng(2013).uniform(0.01, 0.99, size=(100, 5))
    _, per = rvine.loglik(five, u)
    assert np.max(np.abs(per - oracles.five_dim_logdensity(u))) < 1e-10


def test_loglik_row_permutation_invariant(five):
    u = rvine.simulate(five, 300, 8)
    perm = np.random.default_rng(0).permutation(300)
    a, per_a = rvine.loglik(five, u)
    b, per_b = rvine.loglik(five, u[perm])
    assert_array_equal(per_a[perm], per_b)
    assert abs(a - b) <= 1e-9 * abs(a)


def test_loglik_rejects_bad_data(five):
    with pytest.raises(DomainError):
        rvine.loglik(five, np.full((2, 5), 1.0))
    with pytest.raises(DomainError):
        rvine.loglik(five, np.full((2, 4), 0.5))


def test_density_floor_strict_mode():
    spec = bivariate(F.CLAYTON, 60.0)
    u = np.array([[1e-10, 1 - 1e-10]])
    total, _ = rvine.loglik(spec, u)
    assert np.isfinite(total)
    with pytest.raises(NumericalError, match="tree 1"):
        rvine.loglik(spec, u, strict=True)


def test_loglik_batch_matches_single(five):
    u = rvine.simulate(five, 40, 5)
    th = five.theta()
    thetas = np.vstack([th, th * 1.01, th])
    batch = rvine.loglik_batch(five, u, thetas)
    for row, t in zip(batch, thetas):
        assert_allclose(row, rvine.loglik(five.with_theta(t), u)[1], rtol=1e-12, atol=1e-12)


# -- transforms ----------------------------------------------------------------

def test_independence_simulation_returns_raw_uniforms():
    spec = independence(3)
    u = rvine.simulate(spec, 4, 99)
    from vinegof import _rng

    raw = _rng.generator(99, _rng.TAG_SIMULATE).random((4, 3))
    assert_allclose(u, raw, atol=0)


@pytest.mark.parametrize("which", ["bivariate", "five", "eight", "normalized"])
def test_rosenblatt_inverts_simulation(which, five, eight):
    spec = {"bivariate": bivariate(F.GUMBEL, 2.5, 90), "five": five, "eight": eight,
            "normalized": models.five_dim_model_normalized()}[which]
    w = np.random.default_rng(4).uniform(0.001, 0.999, size=(200, spec.d))
    u = rvine.inverse_rosenblatt(spec, w)
    assert np.max(np.abs(rvine.rosenblatt(spec, u) - w)) < 1e-8


def test_simulate_deterministic(five):
    a = rvine.simulate(five, 50, 12345)
    b = rvine.simulate(five, 50, 12345)
    assert a.tobytes() == b.tobytes()
    assert not np.array_equal(a, rvine.simulate(five, 50, 12346))


def test_simulated_tau_matches_table(five):
    u = rvine.simulate(five, 2000, 31)
    assert oracles.kendall_tau(u[:, 0], u[:, 1]) == pytest.approx(0.71, abs=0.03)


def test_bivariate_pit_is_hfunc():
    spec = bivariate(F.CLAYTON, 2.0)
    u = np.random.default_rng(3).random((10, 2))
    y = rvine.rosenblatt(spec, u)
    # the diagonal variable 2 is transformed given variable 1
    assert_allclose(y[:, 0], u[:, 0])
    assert_allclose(y[:, 1], pc.hfunc(PairCopulaSpec(F.CLAYTON, 0, 2.0), u[:, 1], u[:, 0]))


# -- estimation ----------------------------------------------------------------

def test_sequential_fit_bivariate_clayton():
    spec = bivariate(F.CLAYTON, 2.0)
    u = rvine.simulate(spec, 5000, 17)
    fitted = rvine.fit_sequential(spec, u)
    assert fitted.params[1, 0] == pytest.approx(2.0, abs=0.15)


def test_sequential_fit_independence_unchanged():
    spec = independence(3)
    u = rvine.simulate(spec, 50, 1)
    assert rvine.fit_sequential(spec, u) == spec


def test_sequential_fit_five_dim_taus(five):
    u = rvine.simulate(five, 2000, 2024)
    fitted = rvine.fit_sequential(five, u)
    assert fitted.violations() == []
    for k, i in five.matrix.cells():
        assert pc.param_to_tau(fitted.pair(k, i)) == pytest.approx(
            pc.param_to_tau(five.pair(k, i)), abs=0.05)


def test_sequential_fit_unattainable_tau():
    spec = bivariate(F.CLAYTON, 2.0)
    u = rvine.simulate(bivariate(F.CLAYTON, 2.0, 90), 500, 1)
    with pytest.raises(DomainError, match="1,2|2,1"):
        rvine.fit_sequential(spec, u)
    clipped = rvine.fit_sequential(spec, u, clip_tau=True)
    assert clipped.params[1, 0] > 0


def test_sequential_fit_needs_enough_rows(five):
    with pytest.raises(DomainError):
        rvine.fit_sequential(five, rvine.simulate(five, 50, 1))


def test_mle_bivariate_gauss():
    spec = bivariate(F.GAUSS, 0.5)
    u = rvine.simulate(spec, 5000, 23)
    fitted, ll = rvine.fit_mle(rvine.fit_sequential(spec, u), u)
    assert fitted.params[1, 0] == pytest.approx(0.5, abs=0.03)
    assert ll == pytest.approx(rvine.loglik(fitted, u)[0])


def test_mle_dominates_truth(five):
    u = rvine.simulate(five, 2000, 77)
    fitted, ll = rvine.fit_mle(rvine.fit_sequential(five, u), u)
    assert ll >= rvine.loglik(five, u)[0]


def test_mle_fixed_point():
    spec = bivariate(F.FRANK, 4.0)
    u = rvine.simulate(spec, 1000, 5)
    fitted, ll = rvine.fit_mle(rvine.fit_sequential(spec, u), u)
    again, ll2 = rvine.fit_mle(fitted, u)
    assert_allclose(again.theta(), fitted.theta(), atol=1e-6)
    assert ll2 >= ll


def test_mle_student_t():
    spec = bivariate(F.STUDENT_T, (0.6, 5.0))
    u = rvine.simulate(spec, 3000, 9)
    fitted, _ = rvine.fit_mle(rvine.fit_sequential(spec, u), u)
    assert fitted.params[1, 0] == pytest.approx(0.6, abs=0.04)
    assert 3.0 < fitted.params2[1, 0] < 9.0


def test_mle_iteration_cap():
    spec = bivariate(F.GAUSS, 0.1)
    u = rvine.simulate(bivariate(F.GAUSS, 0.8), 500, 5)
    with pytest.raises(ConvergenceError) as info:
        rvine.fit_mle(spec, u, maxiter=1)
    best, ll = info.value.best
    assert ll >= rvine.loglik(spec, u)[0]


def test_scores_sum_to_zero_at_mle(five):
    u = rvine.simulate(five, 1000, 41)
    fitted, _ = rvine.fit_mle(rvine.fit_sequential(five, u), u)
    scores, hess = rvine.score_and_hessian(fitted, u)
    assert scores.shape == (1000, five.nparams)
    assert hess.shape == (1000, five.nparams, five.nparams)
    assert np.max(np.abs(scores.sum(axis=0))) < 1e-4 * 1000
    assert_array_equal(hess, np.swapaxes(hess, 1, 2))


def test_bivariate_gauss_score_analytic():
    spec = bivariate(F.GAUSS, 0.4)
    u = np.random.default_rng(8).uniform(0.02, 0.98, size=(50, 2))
    scores, _ = rvine.score_and_hessian(spec, u)
    ref = oracles.bivariate_gauss_score(0.4, u[:, 1], u[:, 0])
    assert_allclose(scores[:, 0], ref, atol=1e-5)


def test_score_near_boundary():
    with pytest.raises(NumericalError):
        rvine.score_and_hessian(bivariate(F.GUMBEL, 1.0), np.full((3, 2), 0.4))


# -- serialisation and helpers -----------------------------------------------------

def test_spec_dict_roundtrip(eight):
    again = RVineSpec.from_dict(eight.to_dict())
    assert again == eight
    d = eight.to_dict()
    assert d["matrix"][0][1] is None


def test_with_theta_roundtrip(five):
    th = five.theta()
    assert five.with_theta(th) == five
    with pytest.raises(DomainError):
        five.with_theta(th[:-1])


def test_bad_family_reported(five):
    d = five.to_dict()
    d["params"][4][0] = -2.0
    spec = RVineSpec.from_dict(d)
    assert any("cell (5,1)" in v for v in spec.violations())


@settings(max_examples=25, deadline=None)
@given(seed=hst.integers(0, 2 ** 32), perm=hst.permutations([1, 2, 3, 4]),
       cvine=hst.booleans(), fam=hst.sampled_from([F.GAUSS, F.CLAYTON, F.GUMBEL, F.FRANK, F.JOE]))
def test_random_structures_roundtrip(seed, perm, cvine, fam):
    edges = rvine.cvine_edges(perm) if cvine else rvine.dvine_edges(perm)
    pairs = [(a, b, c, PairCopulaSpec(fam, 0, pc.tau_to_param(fam, 0.4))) for a, b, c in edges]
    spec = rvine.spec_from_edges(4, pairs)
    assert spec.violations() == []
    u = rvine.simulate(spec, 30, seed)
    assert np.max(np.abs(rvine.inverse_rosenblatt(spec, rvine.rosenblatt(spec, u)) - u)) < 1e-8
