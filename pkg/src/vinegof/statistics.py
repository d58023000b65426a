"""Goodness-of-fit statistics: univariate EDF tests, empirical-copula distances."""
import enum
from dataclasses import dataclass

import numpy as np
from scipy import stats

from . import _rng
from . import rvine
from .errors import DomainError
from .transforms import Gamma

# bytes of prefix bitsets accumulated per block in dominance counts
_BLOCK_ELEMENTS = 4_000_000


class UniKind(enum.Enum):
    AD = "ad"
    CVM = "cvm"
    KS = "ks"


class EcpKind(enum.Enum):
    ECP_MCVM = "ecp-cvm"
    ECP_MKS = "ecp-ks"
    ECP2_MCVM = "ecp2-cvm"
    ECP2_MKS = "ecp2-ks"


@dataclass(frozen=True)
class UniTestStat:
    kind: UniKind
    value: float

    def __float__(self):
        return float(self.value)


@dataclass(frozen=True)
class EcpStat:
    kind: EcpKind
    value: float

    def __float__(self):
        return float(self.value)


def _dominance_counts(sample, points):
    """``#{t: sample_t <= point}`` componentwise, for every row of ``points``.

    Per coordinate, the rows at or below a threshold form a prefix of the
    sorted order; prefixes are stored as bitsets, intersected across
    coordinates and counted with a popcount.
    """
    sample = np.asarray(sample, dtype=float)
    points = np.atleast_2d(np.asarray(points, dtype=float))
    N, d = sample.shape
    m = points.shape[0]
    words = (N + 63) // 64
    acc = None
    step = max(1, _BLOCK_ELEMENTS // (8 * words))
    for j in range(d):
        order = np.argsort(sample[:, j], kind="stable")
        r = np.searchsorted(sample[order, j], points[:, j], side="right")
        bits = np.zeros((N + 1, words), dtype=np.uint64)
        rows = np.arange(1, N + 1)
        bits[rows, order // 64] = np.left_shift(np.uint64(1), (order % 64).astype(np.uint64))
        prefix = np.empty_like(bits)
        # cumulative OR in blocks keeps memory bounded for large samples
        carry = np.zeros(words, dtype=np.uint64)
        for a in range(0, N + 1, step):
            blk = np.bitwise_or.accumulate(bits[a:a + step], axis=0) | carry
            prefix[a:a + step] = blk
            carry = blk[-1]
        sel = prefix[r]
        acc = sel if acc is None else acc & sel
    return np.bitwise_count(acc).sum(axis=1).astype(np.int64) if m else np.zeros(0, np.int64)


def empirical_copula(sample, point):
    """Empirical copula ``(1/(n+1)) #{t: u_t <= point}``.

    ``point`` may be a single vector or an array of points (one per row).
    """
    sample = np.atleast_2d(np.asarray(sample, dtype=float))
    point = np.asarray(point, dtype=float)
    counts = _dominance_counts(sample, point)
    vals = counts / (sample.shape[0] + 1.0)
    return float(vals[0]) if point.ndim == 1 else vals


def _as_uni(kind):
    return kind if isinstance(kind, UniKind) else UniKind(str(kind).lower())


def _as_ecp(kind):
    return kind if isinstance(kind, EcpKind) else EcpKind(str(kind).lower())


def uni_stat(kind, s, null_cdf=None):
    """Univariate goodness-of-fit statistic of ``s`` against a continuous null.

    Parameters
    ----------
    kind : UniKind or {"ad", "cvm", "ks"}
    s : array_like, shape (n,)
    null_cdf : callable, optional
        Null distribution function; identity if omitted.

    Notes
    -----
    KS uses the empirical distribution with ``1/(n+1)`` steps and checks both
    one-sided gaps at every jump as well as the gap at the right end. CvM and
    AD use the usual sorted-sample closed forms.
    """
    kind = _as_uni(kind)
    z = np.asarray(s, dtype=float) if null_cdf is None else np.asarray(null_cdf(np.asarray(s)))
    z = np.sort(z.ravel())
    n = z.size
    if n == 0:
        raise DomainError("empty sample")
    i = np.arange(1, n + 1)
    if kind is UniKind.KS:
        upper = i / (n + 1.0) - z
        lower = z - (i - 1) / (n + 1.0)
        val = max(np.abs(upper).max(), np.abs(lower).max(), 1.0 - n / (n + 1.0))
    elif kind is UniKind.CVM:
        val = 1.0 / (12.0 * n) + np.sum((z - (2 * i - 1) / (2.0 * n)) ** 2)
    else:
        if np.any(z <= 0.0) or np.any(z >= 1.0):
            raise DomainError("Anderson-Darling needs transformed values strictly in (0, 1)")
        val = -n - np.sum((2 * i - 1) * (np.log(z) + np.log1p(-z[::-1]))) / n
    return UniTestStat(kind, float(val))


# keep Anderson-Darling finite when the null cdf saturates
_Z_CLIP = 1e-12


def null_cdf(rule, d):
    """Fixed monotone map of aggregated values into (0, 1).

    The Breymann rule uses the chi-square distribution with ``d`` degrees of
    freedom. Other rules have no known null and are scaled by the largest
    attainable value of ``s`` so that the map lands in the unit interval.
    """
    if rule.gamma_y is Gamma.NORMAL_QUANTILE_SQUARED and rule.gamma_v is Gamma.ONE:
        def cdf(s):
            return np.clip(stats.chi2.cdf(s, d), _Z_CLIP, 1.0 - _Z_CLIP)
        return cdf
    if rule.gamma_y is Gamma.ONE and rule.gamma_v is Gamma.ABS_CENTERED:
        smax = d * 0.5
    elif rule.gamma_y is Gamma.ONE and rule.gamma_v is Gamma.CENTERED_POWER:
        smax = d * 0.5 ** rule.alpha
    elif rule.gamma_y is Gamma.NORMAL_QUANTILE and rule.gamma_v is Gamma.ONE:
        def cdf(s):
            return np.clip(stats.norm.cdf(s, scale=np.sqrt(d)), _Z_CLIP, 1.0 - _Z_CLIP)
        return cdf
    else:
        def cdf(s):
            return np.clip(0.5 + np.arctan(s) / np.pi, _Z_CLIP, 1.0 - _Z_CLIP)
        return cdf

    def scaled(s):
        return np.clip(np.asarray(s) / smax, _Z_CLIP, 1.0 - _Z_CLIP)
    return scaled


def _ecp_value(kind_is_cvm, emp, ref):
    diff = emp - ref
    # summing in sorted order makes the value independent of the row order
    return float(np.sum(np.sort(diff * diff))) if kind_is_cvm else float(np.max(np.abs(diff)))


def ecp_stat(kind, data, fitted, approx_n=None, seed=0, surrogate=None):
    """Distance between the empirical copula and the fitted vine copula.

    The fitted copula has no closed form, so it is replaced by the empirical
    copula of a simulated sample of size ``approx_n`` (default ``10 n``).
    Both are evaluated at the data points; mCvM sums squared differences,
    mKS takes the largest absolute difference.

    Parameters
    ----------
    surrogate : array_like, optional
        Use this sample instead of simulating one.
    """
    kind = _as_ecp(kind)
    if kind not in (EcpKind.ECP_MCVM, EcpKind.ECP_MKS):
        raise DomainError(f"{kind.value} is not an ECP statistic")
    data = np.atleast_2d(np.asarray(data, dtype=float))
    n = data.shape[0]
    if surrogate is None:
        approx_n = 10 * n if approx_n is None else int(approx_n)
        surrogate = rvine.simulate(fitted, approx_n, seed, stream=(_rng.TAG_SURROGATE,))
    surrogate = np.asarray(surrogate, dtype=float)
    emp = empirical_copula(data, data)
    ref = empirical_copula(surrogate, data)
    return EcpStat(kind, _ecp_value(kind is EcpKind.ECP_MCVM, emp, ref))


def ecp2_stat(kind, y):
    """Distance between the empirical copula of PIT output and independence."""
    kind = _as_ecp(kind)
    if kind not in (EcpKind.ECP2_MCVM, EcpKind.ECP2_MKS):
        raise DomainError(f"{kind.value} is not an ECP2 statistic")
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise DomainError("PIT values must lie strictly inside (0, 1)")
    emp = empirical_copula(y, y)
    ref = np.prod(y, axis=1)
    return EcpStat(kind, _ecp_value(kind is EcpKind.ECP2_MCVM, emp, ref))


def hybrid_pvalue(pvals):
    """Bonferroni-type combination ``min(1, m * min(p))``."""
    p = np.asarray(pvals, dtype=float).ravel()
    if p.size == 0:
        raise DomainError("need at least one p-value")
    if np.any((p < 0) | (p > 1)):
        raise DomainError("p-values must lie in [0, 1]")
    return float(min(1.0, p.size * p.min()))
