"""Reference models used by the tests, the study configs and the examples.

Parameters are given as Kendall's tau per edge and converted with
:func:`vinegof.pair_copulas.tau_to_param`.
"""
from .pair_copulas import Family, PairCopulaSpec, tau_to_param
from .rvine import (RVineMatrix, RVineSpec, cvine_edges, dvine_edges, matrix_from_edges,
                    spec_from_edges, spec_on_matrix)

G, C, GU, F, J = Family.GAUSS, Family.CLAYTON, Family.GUMBEL, Family.FRANK, Family.JOE

# (a, b, conditioning, family, tau)
FIVE_DIM_EDGES = [
    (1, 2, (), G, 0.71), (1, 3, (), G, 0.33), (1, 4, (), C, 0.71), (4, 5, (), GU, 0.74),
    (2, 4, (1,), GU, 0.38), (3, 4, (1,), GU, 0.47), (1, 5, (4,), GU, 0.33),
    (2, 3, (1, 4), C, 0.35), (3, 5, (1, 4), C, 0.31),
    (2, 5, (1, 3, 4), G, 0.13),
]

EIGHT_DIM_EDGES = [
    (1, 2, (), J, 0.41), (1, 4, (), G, 0.59), (1, 5, (), G, 0.59), (1, 6, (), F, 0.23),
    (3, 6, (), F, 0.19), (4, 7, (), C, 0.44), (7, 8, (), GU, 0.64),
    (2, 6, (1,), C, 0.58), (1, 3, (6,), GU, 0.44), (4, 6, (1,), F, 0.11),
    (4, 5, (1,), C, 0.53), (1, 7, (4,), C, 0.29), (4, 8, (7,), G, 0.53),
    (5, 6, (1, 4), G, 0.19), (6, 7, (1, 4), F, 0.03), (1, 8, (4, 7), GU, 0.22),
    (3, 4, (1, 6), G, 0.41), (2, 3, (1, 6), GU, 0.68),
    (6, 8, (1, 4, 7), C, 0.17), (5, 7, (1, 4, 6), G, 0.09), (3, 5, (1, 4, 6), F, 0.21),
    (2, 4, (1, 3, 6), GU, 0.57),
    (2, 5, (1, 3, 4, 6), J, 0.25), (3, 7, (1, 4, 5, 6), GU, 0.17),
    (5, 8, (1, 4, 6, 7), F, 0.02),
    (2, 7, (1, 3, 4, 5, 6), GU, 0.31), (3, 8, (1, 4, 5, 6, 7), C, 0.20),
    (2, 8, (1, 3, 4, 5, 6, 7), F, 0.03),
]

# the five-dimensional structure printed in normalized form (diagonal 5..1)
NORMALIZED_MATRIX = [
    [5, 0, 0, 0, 0],
    [4, 4, 0, 0, 0],
    [3, 3, 3, 0, 0],
    [1, 2, 2, 2, 0],
    [2, 1, 1, 1, 1],
]

CVINE_ORDER = (2, 1, 4, 3, 5)
DVINE_ORDER = (2, 1, 5, 4, 3)


def _build(d, table):
    edges = [(a, b, cond, PairCopulaSpec(fam, 0, tau_to_param(fam, tau)))
             for a, b, cond, fam, tau in table]
    return spec_from_edges(d, edges)


def five_dim_model():
    """Five-dimensional R-vine used as the true model of the size/power study."""
    return _build(5, FIVE_DIM_EDGES)


def eight_dim_model():
    """Eight-dimensional R-vine used as the true model in eight dimensions."""
    return _build(8, EIGHT_DIM_EDGES)


# relabelling that maps the five-dimensional model onto the normalized matrix
NORMALIZED_RELABEL = {1: 1, 2: 4, 3: 3, 4: 2, 5: 5}


def normalized_matrix():
    return RVineMatrix(NORMALIZED_MATRIX)


def five_dim_model_normalized():
    """The five-dimensional model relabelled onto :data:`NORMALIZED_MATRIX`."""
    r = NORMALIZED_RELABEL
    edges = [(r[a], r[b], tuple(r[c] for c in cond), PairCopulaSpec(fam, 0, tau_to_param(fam, tau)))
             for a, b, cond, fam, tau in FIVE_DIM_EDGES]
    return spec_on_matrix(normalized_matrix(), edges)


def cvine_matrix(order=CVINE_ORDER):
    return matrix_from_edges(len(order), cvine_edges(order))


def dvine_matrix(order=DVINE_ORDER):
    return matrix_from_edges(len(order), dvine_edges(order))


def gauss_alternative(spec):
    """The structure of ``spec`` with every pair replaced by a Gaussian copula.

    Each rho is set from the tau of the original pair, which is a sensible
    starting point for a maximum-likelihood refit.
    """
    from .pair_copulas import param_to_tau

    pairs = {}
    for k, i in spec.matrix.cells():
        tau = param_to_tau(spec.pair(k, i))
        pairs[(k, i)] = PairCopulaSpec(G, 0, tau_to_param(G, tau))
    return RVineSpec(spec.matrix, spec.families).with_pairs(pairs)
