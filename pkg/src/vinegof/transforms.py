"""Rosenblatt transform, order-statistics PIT and aggregation to univariate data."""
import enum
from dataclasses import dataclass

import numpy as np
from scipy import special

from . import rvine
from .errors import DomainError


def rosenblatt(spec, data):
    """Rosenblatt transform of ``data`` under ``spec``.

    Column ``j`` of the result is the conditional distribution of variable
    ``j+1`` given the variables that precede it in the vine's ordering.
    """
    return rvine.rosenblatt(spec, data)


def inverse_rosenblatt(spec, w):
    """Map independent uniforms ``w`` to a sample of ``spec``."""
    return rvine.inverse_rosenblatt(spec, w)


def order_stat_pit(y):
    """Transform sorted PIT output into i.i.d. uniforms.

    With ``y_(1) <= ... <= y_(d)`` the sorted row and ``y_(0) = 0``,
    ``v_i = 1 - ((1 - y_(i)) / (1 - y_(i-1)))**(d - i + 1)``.

    Parameters
    ----------
    y : array_like, shape (d,) or (n, d)

    Returns
    -------
    ndarray of the same shape as ``y``
    """
    y = np.asarray(y, dtype=float)
    if np.any(y >= 1.0) or np.any(y < 0.0):
        raise DomainError("order_stat_pit needs entries in [0, 1)")
    ys = np.sort(np.atleast_2d(y), axis=-1)
    d = ys.shape[-1]
    prev = np.concatenate([np.zeros(ys.shape[:-1] + (1,)), ys[..., :-1]], axis=-1)
    expo = d - np.arange(d)
    # log form keeps precision for entries near 1
    v = -np.expm1(expo * (np.log1p(-ys) - np.log1p(-prev)))
    return v.reshape(y.shape)


class Gamma(enum.Enum):
    """Weight functions applied to PIT values before summation."""

    ONE = "one"
    NORMAL_QUANTILE_SQUARED = "normal_quantile_squared"
    NORMAL_QUANTILE = "normal_quantile"
    ABS_CENTERED = "abs_centered"
    CENTERED_POWER = "centered_power"


def _apply(gamma, x, alpha):
    if gamma is Gamma.ONE:
        return np.ones_like(x)
    if gamma is Gamma.NORMAL_QUANTILE_SQUARED:
        return special.ndtri(x) ** 2
    if gamma is Gamma.NORMAL_QUANTILE:
        return special.ndtri(x)
    if gamma is Gamma.ABS_CENTERED:
        return np.abs(x - 0.5)
    return (x - 0.5) ** alpha


@dataclass(frozen=True)
class AggregationRule:
    """``s_t = sum_i gamma_y(y_ti) * gamma_v(v_ti)``.

    ``alpha`` is the exponent used by :attr:`Gamma.CENTERED_POWER`.
    """

    gamma_y: Gamma
    gamma_v: Gamma
    alpha: int = 2

    def __post_init__(self):
        if self.gamma_y is Gamma.ONE and self.gamma_v is Gamma.ONE:
            raise DomainError("at least one weight function must differ from ONE")
        if Gamma.CENTERED_POWER in (self.gamma_y, self.gamma_v) and self.alpha not in (2, 4):
            raise DomainError("centered power exponent must be 2 or 4")


BREYMANN = AggregationRule(Gamma.NORMAL_QUANTILE_SQUARED, Gamma.ONE)
# variant with the unsquared normal quantile
BREYMANN_UNSQUARED = AggregationRule(Gamma.NORMAL_QUANTILE, Gamma.ONE)
BERG = AggregationRule(Gamma.ONE, Gamma.ABS_CENTERED)
BERG2 = AggregationRule(Gamma.ONE, Gamma.CENTERED_POWER, 2)


def centered_power_rule(alpha):
    return AggregationRule(Gamma.ONE, Gamma.CENTERED_POWER, alpha)


def aggregate(y, rule):
    """Aggregate PIT output ``y`` (shape ``(n, d)``) into one value per row."""
    y = np.atleast_2d(np.asarray(y, dtype=float))
    wy = _apply(rule.gamma_y, y, rule.alpha)
    if rule.gamma_v is Gamma.ONE:
        return wy.sum(axis=1)
    v = order_stat_pit(y)
    # v is computed from the sorted row, so pair it with the sorted y weights
    if rule.gamma_y is not Gamma.ONE:
        wy = _apply(rule.gamma_y, np.sort(y, axis=1), rule.alpha)
    return (wy * _apply(rule.gamma_v, v, rule.alpha)).sum(axis=1)
