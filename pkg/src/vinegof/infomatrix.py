"""Information-matrix based misspecification statistics (White and IR)."""
from dataclasses import dataclass

import numpy as np
from scipy import linalg, stats

from . import _fd
from . import rvine
from .errors import DomainError, NumericalError, SingularMatrixError

MAX_CONDITION = 1e12
RIDGE = 1e-8


def vech_indices(p):
    """Row/column indices of the lower triangle, column-major (vech order)."""
    cols, rows = np.triu_indices(p)
    return rows, cols


@dataclass(frozen=True)
class InfoMatrices:
    """Sample Hessian and outer-product matrices with per-observation parts.

    Attributes
    ----------
    H_bar, C_bar : ndarray, shape (p, p)
    per_obs_d : ndarray, shape (n, p(p+1)/2)
        ``vech(H_t + s_t s_t^T)`` for every observation.
    scores : ndarray, shape (n, p)
    hessians : ndarray, shape (n, p, p)

    Notes
    -----
    Observations are stored sorted by their score vectors, so every
    reduction, and hence every statistic, is exactly invariant to the order
    of the data rows.
    """

    H_bar: np.ndarray
    C_bar: np.ndarray
    per_obs_d: np.ndarray
    scores: np.ndarray
    hessians: np.ndarray

    @property
    def p(self):
        return self.H_bar.shape[0]

    @property
    def n(self):
        return self.scores.shape[0]


@dataclass(frozen=True)
class IrResult:
    IR_n: float
    Psi_bar: np.ndarray


@dataclass(frozen=True)
class WhiteResult:
    T_n: float
    dof: int
    d_bar: np.ndarray
    V_hat: np.ndarray


def from_scores(scores, hessians):
    """Build :class:`InfoMatrices` from per-observation scores and Hessians."""
    scores = np.asarray(scores, dtype=float)
    hessians = np.asarray(hessians, dtype=float)
    n, p = scores.shape
    if p < 1:
        raise DomainError("need at least one parameter")
    order = np.lexsort(scores.T[::-1])
    scores, hessians = scores[order], hessians[order]
    hessians = 0.5 * (hessians + np.swapaxes(hessians, 1, 2))
    H_bar = hessians.mean(axis=0)
    H_bar = 0.5 * (H_bar + H_bar.T)
    C_bar = scores.T @ scores / n
    C_bar = 0.5 * (C_bar + C_bar.T)
    w, V = np.linalg.eigh(C_bar)
    if w.min() < 0.0:
        C_bar = (V * np.maximum(w, 0.0)) @ V.T
    r, c = vech_indices(p)
    outer = scores[:, r] * scores[:, c]
    per_obs_d = hessians[:, r, c] + outer
    return InfoMatrices(H_bar, C_bar, per_obs_d, scores, hessians)


def info_matrices(spec, data):
    """Sample information matrices of a fitted vine at ``data``."""
    scores, hessians = rvine.score_and_hessian(spec, data)
    return from_scores(scores, hessians)


def _check_condition(H):
    cond = np.linalg.cond(H)
    if not np.isfinite(cond) or cond >= MAX_CONDITION:
        raise SingularMatrixError(f"mean Hessian is near-singular (condition number {cond:.3g})")


def ir_statistic(im):
    """Information-ratio statistic ``tr(-H^-1 C) / p``."""
    H, C = np.asarray(im.H_bar), np.asarray(im.C_bar)
    _check_condition(H)
    Psi = -np.linalg.solve(H, C)
    return IrResult(float(np.trace(Psi) / H.shape[0]), Psi)


def _third_derivatives(spec, data):
    """Third derivatives of the mean log-likelihood (forward differences)."""
    theta = spec.theta()
    h = _fd.steps(theta, _fd.FOURTH_ROOT_EPS)
    pts, plan = _fd.third_forward_points(theta, h)
    if not np.all(spec.theta_in_domain(pts)):
        raise NumericalError("third-derivative stencil leaves the parameter domain")
    vals = np.sort(rvine.loglik_batch(spec, data, pts), axis=1).mean(axis=1)
    return _fd.third_forward_combine(vals, h, plan)


def gradient_d(im, third):
    """Jacobian of the mean of ``vech(H_t + s_t s_t^T)`` with respect to theta.

    ``d/dtheta_k mean(H_ab + s_a s_b) = T_abk + mean(H_akt s_bt + s_at H_bkt)``.
    """
    p = im.p
    r, c = vech_indices(p)
    S, H = im.scores, im.hessians
    # cross[a, b, k] = mean_t H_t[a, k] s_t[b]
    cross = np.einsum("tak,tb->abk", H, S) / im.n
    grad = third[r, c, :] + cross[r, c, :] + cross[c, r, :]
    return grad


def white_statistic(im, spec=None, data=None, third=None):
    """White's information-matrix test statistic.

    Parameters
    ----------
    im : InfoMatrices
    spec, data : RVineSpec and sample used to differentiate the mean of
        ``vech(H_t + s_t s_t^T)``; alternatively pass ``third`` directly.
    third : ndarray, shape (p, p, p), optional
        Third derivatives of the mean log-likelihood.
    """
    p, n = im.p, im.n
    q = p * (p + 1) // 2
    d_bar = im.per_obs_d.mean(axis=0)
    if third is None:
        if spec is None or data is None:
            raise DomainError("white_statistic needs spec and data or third derivatives")
        third = _third_derivatives(spec, data)
    _check_condition(im.H_bar)
    grad = gradient_d(im, third)
    corr = np.linalg.solve(im.H_bar, im.scores.T).T @ grad.T
    e = im.per_obs_d - corr
    V = e.T @ e / n + RIDGE * np.eye(q)
    try:
        cf = linalg.cho_factor(V)
        x = linalg.cho_solve(cf, d_bar)
    except linalg.LinAlgError as exc:
        raise SingularMatrixError("covariance of the White statistic is singular") from exc
    T = float(n * d_bar @ x)
    if not np.isfinite(T):
        raise SingularMatrixError("White statistic is not finite")
    return WhiteResult(max(T, 0.0), q, d_bar, V)


def white_asymptotic_pvalue(w):
    """Upper-tail chi-square probability; unreliable at small n."""
    return float(stats.chi2.sf(w.T_n, w.dof))
