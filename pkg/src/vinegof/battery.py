"""The registered battery of goodness-of-fit statistics.

Every statistic is oriented so that large values speak against the null model.
"""
from functools import cached_property

import numpy as np

from . import _rng
from . import infomatrix, transforms
from . import statistics as st
from .errors import DomainError

TEST_IDS = (
    "ir", "white",
    "breymann-ad", "breymann-cvm", "breymann-ks",
    "berg-ad", "berg-cvm", "berg-ks",
    "berg2-ad", "berg2-cvm", "berg2-ks",
    "ecp-cvm", "ecp-ks",
    "ecp2-cvm", "ecp2-ks",
)


class UnknownTestError(DomainError):
    """A test identifier outside the registered battery."""


_RULES = {"breymann": transforms.BREYMANN, "berg": transforms.BERG, "berg2": transforms.BERG2}


def check_test_ids(test_ids):
    """Expand ``"all"`` and reject unknown identifiers."""
    if isinstance(test_ids, str):
        test_ids = [test_ids]
    out = []
    for t in test_ids:
        if t == "all":
            out.extend(TEST_IDS)
        elif t in TEST_IDS:
            out.append(t)
        else:
            raise UnknownTestError(f"unknown test {t!r}; registered tests: {', '.join(TEST_IDS)}")
    return list(dict.fromkeys(out))


class StatContext:
    """Lazily computed intermediates shared by the statistics of one fit.

    Parameters
    ----------
    spec : RVineSpec
        Model fitted to ``data``.
    data : ndarray, shape (n, d)
    seed : int
        Seed of the surrogate sample used by the ECP statistics.
    approx_n : int, optional
        Surrogate sample size; ``10 n`` by default.
    """

    def __init__(self, spec, data, seed=0, approx_n=None):
        self.spec = spec
        self.data = np.asarray(data, dtype=float)
        self.seed = int(seed)
        self.approx_n = approx_n

    @cached_property
    def pit(self):
        return transforms.rosenblatt(self.spec, self.data)

    @cached_property
    def info(self):
        return infomatrix.info_matrices(self.spec, self.data)

    @cached_property
    def surrogate(self):
        from . import rvine

        n = self.data.shape[0]
        approx_n = 10 * n if self.approx_n is None else int(self.approx_n)
        return rvine.simulate(self.spec, approx_n, self.seed, stream=(_rng.TAG_SURROGATE,))

    def statistic(self, test_id):
        if test_id == "ir":
            return infomatrix.ir_statistic(self.info).IR_n
        if test_id == "white":
            return infomatrix.white_statistic(self.info, self.spec, self.data).T_n
        family, kind = test_id.rsplit("-", 1)
        if family in _RULES:
            rule = _RULES[family]
            s = transforms.aggregate(self.pit, rule)
            return st.uni_stat(kind, s, st.null_cdf(rule, self.spec.d)).value
        if family == "ecp":
            return st.ecp_stat(test_id, self.data, self.spec, surrogate=self.surrogate).value
        if family == "ecp2":
            return st.ecp2_stat(test_id, self.pit).value
        raise DomainError(f"unknown test {test_id!r}")


def compute(test_ids, spec, data, seed=0, approx_n=None):
    """Evaluate several statistics on one fitted model; returns ``{id: value}``."""
    ctx = StatContext(spec, data, seed, approx_n)
    return {t: float(ctx.statistic(t)) for t in check_test_ids(test_ids)}
