"""Bivariate copula families used as building blocks of a vine.

All kernels are vectorised over the copula arguments and the parameters, so a
single call can evaluate many observations under many parameter vectors (the
finite-difference machinery relies on this).

Conventions
-----------
``h(u | v)`` is the conditional distribution ``dC(u, v) / dv``. Rotated copulas
are defined by::

    c90(u, v)  = c(1 - u, v)
    c180(u, v) = c(1 - u, 1 - v)
    c270(u, v) = c(u, 1 - v)

which, because every base family here is exchangeable, coincides with
``c90(u, v) = c(v, 1 - u)`` and ``c270(u, v) = c(1 - v, u)``.
"""
import enum
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from . import _fd
from .errors import ConvergenceError, DomainError, NumericalError

logger = logging.getLogger(__name__)

UMIN = 1e-10
UMAX = 1.0 - 1e-10


class Family(enum.IntEnum):
    INDEPENDENCE = 0
    GAUSS = 1
    STUDENT_T = 2
    CLAYTON = 3
    GUMBEL = 4
    FRANK = 5
    JOE = 6


NPARAMS = {
    Family.INDEPENDENCE: 0,
    Family.GAUSS: 1,
    Family.STUDENT_T: 2,
    Family.CLAYTON: 1,
    Family.GUMBEL: 1,
    Family.FRANK: 1,
    Family.JOE: 1,
}

ROTATIONS = (0, 90, 180, 270)
_ASYMMETRIC = (Family.CLAYTON, Family.GUMBEL, Family.JOE)
NU_MAX = 30.0


@dataclass(frozen=True)
class ParamDomain:
    """Interval for one parameter; open or closed at each end."""

    lower: float = -math.inf
    upper: float = math.inf
    lower_open: bool = True
    upper_open: bool = True
    exclude_zero: bool = False

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError("lower bound must be below upper bound")

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        ok = np.isfinite(x)
        ok &= (x > self.lower) if self.lower_open else (x >= self.lower)
        ok &= (x < self.upper) if self.upper_open else (x <= self.upper)
        if self.exclude_zero:
            ok &= x != 0.0
        return ok


_RHO = ParamDomain(-1.0, 1.0)
DOMAINS = {
    Family.INDEPENDENCE: (),
    Family.GAUSS: (_RHO,),
    Family.STUDENT_T: (_RHO, ParamDomain(2.0, NU_MAX, upper_open=False)),
    Family.CLAYTON: (ParamDomain(0.0, math.inf),),
    Family.GUMBEL: (ParamDomain(1.0, math.inf, lower_open=False),),
    Family.FRANK: (ParamDomain(exclude_zero=True),),
    Family.JOE: (ParamDomain(1.0, math.inf),),
}


def allowed_rotations(family):
    family = Family(family)
    if family in _ASYMMETRIC:
        return ROTATIONS
    if family is Family.FRANK:
        return (0, 180)
    return (0,)


@dataclass(frozen=True)
class PairCopulaSpec:
    """A bivariate copula family, its rotation and its parameters."""

    family: Family
    rotation: int = 0
    params: tuple = ()

    def __post_init__(self):
        family = Family(self.family)
        object.__setattr__(self, "family", family)
        params = tuple(float(p) for p in np.atleast_1d(np.asarray(self.params, dtype=float)))
        if family is Family.INDEPENDENCE:
            params = ()
            object.__setattr__(self, "rotation", 0)
        object.__setattr__(self, "params", params)
        if self.rotation not in allowed_rotations(family):
            raise DomainError(f"rotation {self.rotation} not allowed for {family.name}")
        if len(params) != NPARAMS[family]:
            raise DomainError(
                f"{family.name} takes {NPARAMS[family]} parameter(s), got {len(params)}")
        for dom, p in zip(DOMAINS[family], params):
            if not dom.contains(p):
                raise DomainError(f"{family.name} parameter {p} outside {dom}")

    @property
    def nparams(self):
        return NPARAMS[self.family]

    @property
    def code(self):
        """Integer code: family + 10 * (rotation / 90)."""
        return int(self.family) + 10 * (self.rotation // 90)

    @classmethod
    def from_code(cls, code, params=()):
        code = int(code)
        return cls(Family(code % 10), 90 * (code // 10), params)


def decode(code):
    """Split a serialized family code into ``(Family, rotation)``."""
    code = int(code)
    if code < 0 or code % 10 > 6 or code // 10 > 3:
        raise DomainError(f"unknown family code {code}")
    return Family(code % 10), 90 * (code // 10)


def params_in_domain(family, params):
    """Vectorised domain check; ``params`` has shape ``(..., nparams)``."""
    family = Family(family)
    params = np.asarray(params, dtype=float)
    ok = np.ones(params.shape[:-1], dtype=bool)
    for j, dom in enumerate(DOMAINS[family]):
        ok &= dom.contains(params[..., j])
    return ok


# ---------------------------------------------------------------------------
# base kernels: (a, b, par) -> (log c(a, b), C(a | b), C(b | a))
# ---------------------------------------------------------------------------

def _indep(a, b, par):
    a, b = np.broadcast_arrays(a, b)
    return np.zeros(a.shape), a.astype(float), b.astype(float)


def _gauss(a, b, par):
    rho = par[0]
    x = special.ndtri(a)
    y = special.ndtri(b)
    r2 = rho * rho
    om = 1.0 - r2
    s = np.sqrt(om)
    logc = -0.5 * np.log(om) - (r2 * (x * x + y * y) - 2.0 * rho * x * y) / (2.0 * om)
    return logc, special.ndtr((x - rho * y) / s), special.ndtr((y - rho * x) / s)


def _student(a, b, par):
    rho, nu = par[0], par[1]
    x = special.stdtrit(nu, a)
    y = special.stdtrit(nu, b)
    om = 1.0 - rho * rho
    q = (x * x + y * y - 2.0 * rho * x * y) / (nu * om)
    const = (special.gammaln((nu + 2.0) / 2.0) + special.gammaln(nu / 2.0)
             - 2.0 * special.gammaln((nu + 1.0) / 2.0))
    logc = (const - 0.5 * np.log(om) - 0.5 * (nu + 2.0) * np.log1p(q)
            + 0.5 * (nu + 1.0) * (np.log1p(x * x / nu) + np.log1p(y * y / nu)))
    hab = special.stdtr(nu + 1.0, (x - rho * y) / np.sqrt((nu + y * y) * om / (nu + 1.0)))
    hba = special.stdtr(nu + 1.0, (y - rho * x) / np.sqrt((nu + x * x) * om / (nu + 1.0)))
    return logc, hab, hba


def _clayton_L(la, lb, theta):
    # log(a^-theta + b^-theta - 1), overflow-safe
    A = -theta * la
    B = -theta * lb
    m = np.maximum(A, B)
    return m + np.log(np.exp(A - m) + np.exp(B - m) - np.exp(-m))


def _clayton(a, b, par):
    theta = par[0]
    la = np.log(a)
    lb = np.log(b)
    L = _clayton_L(la, lb, theta)
    logc = np.log1p(theta) - (1.0 + theta) * (la + lb) - (2.0 + 1.0 / theta) * L
    k = -(1.0 + 1.0 / theta) * L
    return logc, np.exp(k - (theta + 1.0) * lb), np.exp(k - (theta + 1.0) * la)


def _gumbel(a, b, par):
    theta = par[0]
    la = np.log(a)
    lb = np.log(b)
    lx = np.log(-la)
    ly = np.log(-lb)
    lS = np.logaddexp(theta * lx, theta * ly)
    A = np.exp(lS / theta)
    lC = -A
    logc = (lC - la - lb + (theta - 1.0) * (lx + ly) + (1.0 - 2.0 * theta) / theta * lS
            + np.log(A + theta - 1.0))
    k = lC + (1.0 - theta) / theta * lS
    return logc, np.exp(k + (theta - 1.0) * ly - lb), np.exp(k + (theta - 1.0) * lx - la)


def _frank(a, b, par):
    theta = par[0]
    em = np.expm1(-theta)
    ea = np.expm1(-theta * a)
    eb = np.expm1(-theta * b)
    den = em + ea * eb
    logc = np.log(theta * -em) - theta * (a + b) - 2.0 * np.log(np.abs(den))
    return logc, np.exp(-theta * b) * ea / den, np.exp(-theta * a) * eb / den


def _joe(a, b, par):
    theta = par[0]
    la_ = np.log1p(-a)
    lb_ = np.log1p(-b)
    lP = theta * la_
    lQ = theta * lb_
    P = np.exp(lP)
    Q = np.exp(lQ)
    lS = np.logaddexp(lP, lQ + np.log1p(-P))
    S = np.exp(lS)
    logc = (1.0 / theta - 2.0) * lS + (theta - 1.0) * (la_ + lb_) + np.log(theta - 1.0 + S)
    k = (1.0 / theta - 1.0) * lS
    return logc, np.exp(k + (theta - 1.0) * lb_) * (1.0 - P), np.exp(k + (theta - 1.0) * la_) * (1.0 - Q)


_KERNELS = {
    Family.INDEPENDENCE: _indep,
    Family.GAUSS: _gauss,
    Family.STUDENT_T: _student,
    Family.CLAYTON: _clayton,
    Family.GUMBEL: _gumbel,
    Family.FRANK: _frank,
    Family.JOE: _joe,
}


def evaluate(family, rotation, u, v, par):
    """Return ``(log c(u, v), C(u | v), C(v | u))`` for a rotated family.

    No clamping or domain checking; callers are responsible for both.
    """
    kern = _KERNELS[family]
    if rotation == 0:
        return kern(u, v, par)
    if rotation == 90:
        logc, hab, hba = kern(1.0 - u, v, par)
        return logc, 1.0 - hab, hba
    if rotation == 180:
        logc, hab, hba = kern(1.0 - u, 1.0 - v, par)
        return logc, 1.0 - hab, 1.0 - hba
    logc, hab, hba = kern(u, 1.0 - v, par)
    return logc, hab, 1.0 - hba


# ---------------------------------------------------------------------------
# inverse h-functions
# ---------------------------------------------------------------------------

MAX_BISECTION_STEPS = 200


def _solve_h(family, p, b, par):
    """Safeguarded Newton iteration for C(a | b) = p in ``a``."""
    kern = _KERNELS[family]
    p, b, *par = np.broadcast_arrays(np.asarray(p, dtype=float), np.asarray(b, dtype=float),
                                     *(np.asarray(q, dtype=float) for q in par))
    shape = p.shape
    p, b = p.ravel(), b.ravel()
    par = tuple(q.ravel() for q in par)
    lo = np.zeros(p.shape)
    hi = np.ones(p.shape)
    x = np.clip(p.copy(), UMIN, UMAX)
    active = np.ones(p.shape, dtype=bool)
    for _ in range(MAX_BISECTION_STEPS):
        idx = np.nonzero(active)
        if idx[0].size == 0:
            return x.reshape(shape)
        xa = x[idx]
        pa = p[idx]
        para = tuple(q[idx] for q in par)
        logc, hab, _ = kern(xa, b[idx], para)
        f = hab - pa
        below = f < 0
        lo[idx] = np.where(below, xa, lo[idx])
        hi[idx] = np.where(below, hi[idx], xa)
        done = (np.abs(f) < 1e-13) | (hi[idx] - lo[idx] < 1e-15)
        dens = np.exp(logc)
        with np.errstate(divide="ignore", invalid="ignore"):
            newton = xa - f / dens
        lo_i, hi_i = lo[idx], hi[idx]
        ok = np.isfinite(newton) & (newton > lo_i) & (newton < hi_i)
        nxt = np.where(ok, newton, 0.5 * (lo_i + hi_i))
        nxt = np.clip(nxt, UMIN, UMAX)
        x[idx] = np.where(done, xa, nxt)
        still = ~done
        # clamped iterate that cannot move: the root lies beyond the clamp
        still &= ~((nxt == xa) & ((xa == UMIN) | (xa == UMAX)))
        active[idx] = still
    if active.any():
        raise ConvergenceError(
            f"h-function inversion for {Family(family).name} did not converge "
            f"in {MAX_BISECTION_STEPS} steps")
    return x.reshape(shape)


def _base_hinv(family, p, b, par):
    if family is Family.INDEPENDENCE:
        return np.broadcast_arrays(np.asarray(p, dtype=float), b)[0].copy()
    if family is Family.GAUSS:
        rho = par[0]
        return special.ndtr(special.ndtri(p) * np.sqrt(1.0 - rho * rho) + rho * special.ndtri(b))
    if family is Family.STUDENT_T:
        rho, nu = par
        y = special.stdtrit(nu, b)
        x = (special.stdtrit(nu + 1.0, p) * np.sqrt((nu + y * y) * (1.0 - rho * rho) / (nu + 1.0))
             + rho * y)
        return special.stdtr(nu, x)
    if family is Family.CLAYTON:
        theta = par[0]
        w = -theta * np.log(b) + np.log(np.expm1(-theta / (1.0 + theta) * np.log(p)))
        return np.exp(-np.logaddexp(w, 0.0) / theta)
    if family is Family.FRANK:
        theta = par[0]
        em = np.expm1(-theta)
        return -np.log1p(p * em / (np.exp(-theta * b) * (1.0 - p) + p)) / theta
    return _solve_h(family, p, b, par)


def evaluate_hinv(family, rotation, p, v, par):
    """Solve ``C(u | v) = p`` for ``u`` (rotated family). No clamping."""
    if rotation == 0:
        out = _base_hinv(family, p, v, par)
    elif rotation == 90:
        out = 1.0 - _base_hinv(family, 1.0 - p, v, par)
    elif rotation == 180:
        out = 1.0 - _base_hinv(family, 1.0 - p, 1.0 - v, par)
    else:
        out = _base_hinv(family, p, 1.0 - v, par)
    return np.clip(out, UMIN, UMAX)


# ---------------------------------------------------------------------------
# copula cdf (closed form for Archimedean, quadrature for elliptical)
# ---------------------------------------------------------------------------

def _elliptical_cdf(family, a, b, par):
    rho = par[0]
    if family is Family.GAUSS:
        x, y = special.ndtri(a), special.ndtri(b)
        const = 1.0 / (2.0 * math.pi * math.sqrt(1.0 - rho * rho))

        def dens(s, t):
            q = (s * s + t * t - 2.0 * rho * s * t) / (1.0 - rho * rho)
            return const * math.exp(-0.5 * q)
    else:
        nu = par[1]
        x, y = special.stdtrit(nu, a), special.stdtrit(nu, b)
        const = 1.0 / (2.0 * math.pi * math.sqrt(1.0 - rho * rho))

        def dens(s, t):
            q = (s * s + t * t - 2.0 * rho * s * t) / (nu * (1.0 - rho * rho))
            return const * (1.0 + q) ** (-(nu + 2.0) / 2.0)
    # integrate the joint density of the scores over (-inf, x] x (-inf, y]
    val, _ = integrate.dblquad(lambda s, t: dens(s, t), -np.inf, float(y),
                               -np.inf, float(x), epsabs=1e-11, epsrel=1e-11)
    return val


def _base_cdf(family, a, b, par):
    if family is Family.INDEPENDENCE:
        return a * b
    if family in (Family.GAUSS, Family.STUDENT_T):
        return _elliptical_cdf(family, a, b, par)
    if family is Family.CLAYTON:
        theta = par[0]
        return math.exp(-_clayton_L(math.log(a), math.log(b), theta) / theta)
    if family is Family.GUMBEL:
        theta = par[0]
        s = (-math.log(a)) ** theta + (-math.log(b)) ** theta
        return math.exp(-s ** (1.0 / theta))
    if family is Family.FRANK:
        theta = par[0]
        return -math.log1p(math.expm1(-theta * a) * math.expm1(-theta * b)
                           / math.expm1(-theta)) / theta
    theta = par[0]
    P = (1.0 - a) ** theta
    Q = (1.0 - b) ** theta
    return 1.0 - (P + Q - P * Q) ** (1.0 / theta)


# ---------------------------------------------------------------------------
# public scalar/array API
# ---------------------------------------------------------------------------

def _check_unit(name, x, clamp):
    x = np.asarray(x, dtype=float)
    if clamp:
        bad = (x < UMIN) | (x > UMAX)
        if np.any(bad):
            logger.debug("clamped %d value(s) of %s into [%g, %g]", int(bad.sum()), name,
                         UMIN, UMAX)
        return np.clip(x, UMIN, UMAX)
    if np.any(~np.isfinite(x)) or np.any((x <= 0.0) | (x >= 1.0)):
        raise DomainError(f"{name} must lie strictly inside (0, 1)")
    return x


def _ret(x):
    return float(x) if np.ndim(x) == 0 else x


def pdf(spec, u, v, clamp=False):
    """Copula density ``c(u, v)``."""
    u = _check_unit("u", u, clamp)
    v = _check_unit("v", v, clamp)
    logc, _, _ = evaluate(spec.family, spec.rotation, u, v, spec.params)
    return _ret(np.exp(logc))


def logpdf(spec, u, v, clamp=False):
    u = _check_unit("u", u, clamp)
    v = _check_unit("v", v, clamp)
    return _ret(evaluate(spec.family, spec.rotation, u, v, spec.params)[0])


def hfunc(spec, u, v, clamp=False):
    """Conditional distribution ``C(u | v) = dC(u, v)/dv``."""
    u = _check_unit("u", u, clamp)
    v = _check_unit("v", v, clamp)
    return _ret(evaluate(spec.family, spec.rotation, u, v, spec.params)[1])


def hinv(spec, p, v, clamp=False):
    """Inverse of :func:`hfunc` in its first argument."""
    p = _check_unit("p", p, clamp)
    v = _check_unit("v", v, clamp)
    return _ret(evaluate_hinv(spec.family, spec.rotation, p, v, spec.params))


def cdf(spec, u, v):
    """Copula distribution function ``C(u, v)`` for scalar arguments.

    The margins are closed (``C(u, 1) = u``, ``C(u, 0) = 0``).
    """
    u = float(u)
    v = float(v)
    if not (0.0 <= u <= 1.0 and 0.0 <= v <= 1.0):
        raise DomainError("u and v must lie in [0, 1]")
    if u == 0.0 or v == 0.0:
        return 0.0
    if u == 1.0:
        return v
    if v == 1.0:
        return u
    f, rot, par = spec.family, spec.rotation, spec.params
    if rot == 0:
        return _base_cdf(f, u, v, par)
    if rot == 90:
        return v - _base_cdf(f, 1.0 - u, v, par)
    if rot == 180:
        return u + v - 1.0 + _base_cdf(f, 1.0 - u, 1.0 - v, par)
    return u - _base_cdf(f, u, 1.0 - v, par)


# ---------------------------------------------------------------------------
# Kendall's tau
# ---------------------------------------------------------------------------

def _frank_tau(theta):
    if theta == 0.0:
        return 0.0
    t = abs(theta)
    if t < 1e-2:
        tau = t / 9.0 - t ** 3 / 900.0
    else:
        debye, _ = integrate.quad(lambda s: s / math.expm1(s) if s > 0 else 1.0, 0.0, t,
                                  epsabs=1e-13, epsrel=1e-12)
        tau = 1.0 - 4.0 / t + 4.0 * debye / (t * t)
    return math.copysign(tau, theta)


def _joe_tau(theta):
    # tau = 1 + 4 * int_0^1 phi(t) / phi'(t) dt with phi(t) = -log(1 - (1 - t)^theta)
    def ratio(t):
        w = (1.0 - t) ** theta
        if w == 0.0:
            return 0.0
        return math.log1p(-w) * (1.0 - w) / (theta * (1.0 - t) ** (theta - 1.0))

    val, _ = integrate.quad(ratio, 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    return 1.0 + 4.0 * val


def _base_tau(family, params):
    if family is Family.INDEPENDENCE:
        return 0.0
    if family in (Family.GAUSS, Family.STUDENT_T):
        return 2.0 / math.pi * math.asin(params[0])
    if family is Family.CLAYTON:
        return params[0] / (params[0] + 2.0)
    if family is Family.GUMBEL:
        return 1.0 - 1.0 / params[0]
    if family is Family.FRANK:
        return _frank_tau(params[0])
    return _joe_tau(params[0])


def param_to_tau(spec):
    """Kendall's tau implied by a pair-copula specification."""
    tau = _base_tau(spec.family, spec.params)
    return -tau if spec.rotation in (90, 270) else tau


def _bisect_tau(fun, tau, lo, hi):
    flo, fhi = fun(lo), fun(hi)
    if not flo <= tau <= fhi:
        raise DomainError(f"tau={tau} outside attainable range [{flo:.6g}, {fhi:.6g}]")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fun(mid)
        if abs(fm - tau) < 1e-10:
            return mid
        if fm < tau:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


DEFAULT_NU = 8.0


def tau_to_param(family, tau, rotation=0, nu=DEFAULT_NU):
    """Invert Kendall's tau for a one-parameter family.

    For the Student t family ``rho`` is obtained from tau and ``nu`` is passed
    through unchanged.
    """
    family = Family(family)
    tau = float(tau)
    if rotation not in allowed_rotations(family):
        raise DomainError(f"rotation {rotation} not allowed for {family.name}")
    if family is Family.INDEPENDENCE:
        return ()
    if rotation in (90, 270):
        tau = -tau
    if not -1.0 < tau < 1.0:
        raise DomainError(f"tau={tau} outside (-1, 1)")
    if family is Family.GAUSS:
        return (math.sin(math.pi * tau / 2.0),)
    if family is Family.STUDENT_T:
        return (math.sin(math.pi * tau / 2.0), float(nu))
    if family is Family.CLAYTON:
        if tau <= 0.0:
            raise DomainError(f"Clayton needs tau > 0 (after rotation), got {tau}")
        return (2.0 * tau / (1.0 - tau),)
    if family is Family.GUMBEL:
        if tau < 0.0:
            raise DomainError(f"Gumbel needs tau >= 0 (after rotation), got {tau}")
        return (1.0 / (1.0 - tau),)
    if family is Family.FRANK:
        if tau == 0.0:
            raise DomainError("Frank cannot represent tau = 0")
        theta = _bisect_tau(_frank_tau, abs(tau), 1e-6, 50.0)
        return (math.copysign(theta, tau),)
    if tau <= 0.0:
        raise DomainError(f"Joe needs tau > 0 (after rotation), got {tau}")
    return (_bisect_tau(_joe_tau, tau, 1.0 + 1e-6, 50.0),)


def tau_range(family, rotation=0):
    """Open interval of Kendall's tau reachable by ``family`` (tau inversion bounds)."""
    family = Family(family)
    if family in (Family.GAUSS, Family.STUDENT_T):
        lo, hi = -1.0, 1.0
    elif family is Family.FRANK:
        t = _frank_tau(50.0)
        lo, hi = -t, t
    elif family is Family.JOE:
        lo, hi = _joe_tau(1.0 + 1e-6), _joe_tau(50.0)
    elif family is Family.INDEPENDENCE:
        lo, hi = 0.0, 0.0
    else:
        lo, hi = 0.0, 1.0
    if rotation in (90, 270):
        lo, hi = -hi, -lo
    return lo, hi


# ---------------------------------------------------------------------------
# likelihood derivatives
# ---------------------------------------------------------------------------

def loglik_derivs(spec, u, v):
    """Score and Hessian of ``log c(u, v; params)`` by central differences.

    Returns ``(score, hessian)`` with shapes ``(p,)`` and ``(p, p)`` for scalar
    ``u``/``v``; array arguments add a trailing observation axis.
    """
    u = _check_unit("u", u, False)
    v = _check_unit("v", v, False)
    x = np.asarray(spec.params, dtype=float)
    if x.size == 0:
        shape = np.broadcast(u, v).shape
        return np.zeros((0,) + shape), np.zeros((0, 0) + shape)
    h = _fd.steps(x)
    pts = _fd.score_hessian_points(x, h)
    if not np.all(params_in_domain(spec.family, pts)):
        raise NumericalError(
            f"finite-difference stencil leaves the {spec.family.name} parameter domain "
            f"at params={spec.params}")
    nd = np.broadcast(u, v).ndim
    par = tuple(pts[:, j].reshape((-1,) + (1,) * nd) for j in range(x.size))
    logc, _, _ = evaluate(spec.family, spec.rotation, u, v, par)
    return _fd.score_hessian_combine(logc, h)


# ---------------------------------------------------------------------------
# link functions (unconstrained <-> natural parameters)
# ---------------------------------------------------------------------------

_NU_SPAN = NU_MAX - 2.0


def to_link(family, params):
    """Map natural parameters to the unconstrained optimisation scale."""
    family = Family(family)
    p = np.asarray(params, dtype=float)
    if family in (Family.GAUSS, Family.STUDENT_T):
        out = [np.arctanh(p[..., 0])]
        if family is Family.STUDENT_T:
            s = np.clip((p[..., 1] - 2.0) / _NU_SPAN, 1e-12, 1.0 - 1e-12)
            out.append(np.log(s) - np.log1p(-s))
        return np.stack(out, axis=-1)
    if family is Family.CLAYTON:
        return np.log(p)
    if family in (Family.GUMBEL, Family.JOE):
        return np.log(np.maximum(p - 1.0, 1e-300))
    return p.copy()


def from_link(family, x):
    """Inverse of :func:`to_link`."""
    family = Family(family)
    x = np.asarray(x, dtype=float)
    if family in (Family.GAUSS, Family.STUDENT_T):
        out = [np.tanh(x[..., 0])]
        if family is Family.STUDENT_T:
            out.append(2.0 + _NU_SPAN * special.expit(x[..., 1]))
        return np.stack(out, axis=-1)
    if family is Family.CLAYTON:
        return np.exp(x)
    if family in (Family.GUMBEL, Family.JOE):
        return 1.0 + np.exp(x)
    return x.copy()


def fit_pair(family, rotation, u, v, start=None):
    """Maximum-likelihood fit of one pair copula to pseudo-observations.

    Returns ``(params, loglik)``.
    """
    from scipy import optimize, stats

    family = Family(family)
    u = np.clip(np.asarray(u, dtype=float), UMIN, UMAX)
    v = np.clip(np.asarray(v, dtype=float), UMIN, UMAX)
    if family is Family.INDEPENDENCE:
        return (), 0.0
    if start is None:
        tau = stats.kendalltau(u, v)[0]
        lo, hi = tau_range(family, rotation)
        tau = float(np.clip(tau, lo + 1e-3, hi - 1e-3))
        if family is Family.FRANK and abs(tau) < 1e-3:
            tau = 1e-3
        start = tau_to_param(family, tau, rotation)
    x0 = np.atleast_1d(to_link(family, np.asarray(start, dtype=float)))

    def nll(x):
        par = tuple(np.atleast_1d(from_link(family, np.atleast_1d(x))))
        if family is Family.FRANK and par[0] == 0.0:
            return 1e300
        val = evaluate(family, rotation, u, v, par)[0].sum()
        return -val if np.isfinite(val) else 1e300

    if x0.size == 1:
        res = optimize.minimize_scalar(lambda t: nll(np.array([t])),
                                       bracket=(x0[0] - 0.5, x0[0] + 0.5),
                                       options={"xtol": 1e-10})
        x = np.array([res.x])
    else:
        res = optimize.minimize(nll, x0, method="Nelder-Mead",
                                options={"xatol": 1e-8, "fatol": 1e-10, "maxiter": 2000})
        x = res.x
    params = tuple(float(p) for p in np.atleast_1d(from_link(family, x)))
    return params, -nll(x)
