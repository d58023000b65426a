"""Regular-vine copula models in matrix form.

A d-dimensional structure is stored as a lower-triangular integer matrix ``m``
(0-based here). Cell ``(k, i)`` with ``k > i`` is one edge: its conditioned pair
is ``(m[i, i], m[k, i])`` and its conditioning set is ``m[k+1:, i]``. Row
``d-1`` holds the first tree, row ``d-2`` the second, and so on. The pair
density of a cell is evaluated as ``c(u_diag, u_partner)``, i.e. the diagonal
variable is the first copula argument.

The diagonal may be any permutation of ``1..d``. The evaluation order is found
by matching sets across columns, so no relabelling to the "normalized"
descending diagonal is needed; :meth:`RVineMatrix.normalized` produces that form
for display.
"""
import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from . import _fd
from . import _rng
from . import pair_copulas as pc
from .errors import ConvergenceError, DomainError, NumericalError
from .pair_copulas import Family, PairCopulaSpec

log = logging.getLogger(__name__)

DENSITY_FLOOR = 1e-300
_LOG_FLOOR = np.log(DENSITY_FLOOR)
# upper bound on K * n elements per batched evaluation
CHUNK_ELEMENTS = 200_000

# box on the link scale; keeps L-BFGS-B away from saturated links
_LINK_BOUNDS = {
    Family.GAUSS: [(-7.0, 7.0)],
    Family.STUDENT_T: [(-7.0, 7.0), (-9.0, 9.0)],
    Family.CLAYTON: [(-9.0, np.log(100.0))],
    Family.GUMBEL: [(-9.0, np.log(99.0))],
    Family.FRANK: [(-100.0, 100.0)],
    Family.JOE: [(-9.0, np.log(99.0))],
}


@dataclass(frozen=True)
class Edge:
    """One pair copula of the vine; ``row``/``col`` are 0-based matrix cells."""

    tree: int
    row: int
    col: int
    conditioned: tuple
    conditioning: tuple

    def label(self):
        a, b = self.conditioned
        if self.conditioning:
            return f"{a},{b}|{','.join(str(c) for c in self.conditioning)}"
        return f"{a},{b}"


def _lower(x, dtype, d=None):
    """Coerce a square array or ragged row list into a lower-triangular array."""
    if isinstance(x, np.ndarray) and x.ndim == 2:
        rows = x.tolist()
    else:
        rows = [list(np.atleast_1d(r)) if r is not None else [] for r in x]
    d = len(rows) if d is None else d
    out = np.zeros((d, d), dtype=dtype)
    for k, r in enumerate(rows[:d]):
        for i, val in enumerate(list(r)[: k + 1]):
            if val is not None:
                out[k, i] = val
    return out


class RVineMatrix:
    """Lower-triangular R-vine structure matrix with entries in ``1..d``."""

    def __init__(self, m):
        arr = np.asarray(m, dtype=object) if not isinstance(m, np.ndarray) else m
        if isinstance(arr, np.ndarray) and arr.ndim == 2 and arr.shape[0] != arr.shape[1]:
            raise DomainError(f"structure matrix must be square, got {arr.shape}")
        self.m = _lower(m, int)
        self.m.setflags(write=False)
        self._plan = None

    @property
    def d(self):
        return self.m.shape[0]

    @property
    def diagonal(self):
        return np.diag(self.m).copy()

    def __eq__(self, other):
        return isinstance(other, RVineMatrix) and np.array_equal(self.m, other.m)

    def __hash__(self):
        return hash(self.m.tobytes())

    def __repr__(self):
        return f"RVineMatrix({self.m.tolist()})"

    def cells(self):
        """Edge cells ``(k, i)`` in tree-major order (tree 1 first)."""
        d = self.d
        return [(k, i) for k in range(d - 1, 0, -1) for i in range(k)]

    def edge(self, k, i):
        m = self.m
        return Edge(tree=self.d - k, row=k, col=i,
                    conditioned=(int(m[i, i]), int(m[k, i])),
                    conditioning=tuple(int(x) for x in m[k + 1:, i]))

    def edges(self):
        return [self.edge(k, i) for k, i in self.cells()]

    def _route(self, k, i):
        """Source of the second pair argument ``C(m[k,i] | m[k+1:, i])``.

        Returns ``("u", var)`` in the first tree, otherwise ``("d"|"i", k, j)``
        pointing at the column ``j`` whose edge one tree below holds that
        conditional distribution; ``None`` if no such column exists.
        """
        m, d = self.m, self.d
        if k == d - 1:
            return ("u", int(m[k, i]))
        target = set(m[k:, i].tolist())
        x = int(m[k, i])
        for j in range(i + 1, k + 1):
            if set(m[k + 1:, j].tolist()) | {int(m[j, j])} != target:
                continue
            if m[j, j] == x:
                return ("d", k, j)
            if m[k + 1, j] == x:
                return ("i", k, j)
        return None

    def violations(self):
        """List every violated structural invariant (empty list if valid)."""
        m, d = self.m, self.d
        out = []
        if d < 2:
            return ["dimension < 2"]
        for k in range(d):
            for i in range(k + 1):
                if not 1 <= m[k, i] <= d:
                    out.append(f"cell ({k + 1},{i + 1}): entry {m[k, i]} outside 1..{d}")
        if out:
            return out
        if sorted(np.diag(m).tolist()) != list(range(1, d + 1)):
            out.append("diagonal is not a permutation of 1..d")
        for i in range(d):
            col = m[i:, i].tolist()
            if len(set(col)) != len(col):
                out.append(f"column not a set: column {i + 1} repeats an entry")
            elif set(col) != set(np.diag(m)[i:].tolist()):
                out.append(f"column {i + 1}: entries differ from diagonal entries "
                           f"({i + 1},{i + 1})..({d},{d})")
        if out:
            return out
        for k, i in self.cells():
            if self._route(k, i) is None:
                e = self.edge(k, i)
                out.append(f"proximity condition violated at cell ({k + 1},{i + 1}), "
                           f"edge {e.label()}")
        return out

    def plan(self):
        """Evaluation plan: ``[(k, i, z1_source, z2_source)]`` in tree-major order."""
        if self._plan is None:
            bad = self.violations()
            if bad:
                raise DomainError("invalid R-vine matrix: " + "; ".join(bad))
            d = self.d
            plan = []
            for k, i in self.cells():
                z1 = ("u", int(self.m[i, i])) if k == d - 1 else ("d", k, i)
                plan.append((k, i, z1, self._route(k, i)))
            self._plan = plan
        return self._plan

    def normalized(self):
        """Relabel variables so the diagonal reads ``d, d-1, ..., 1``.

        Returns ``(matrix, relabel)`` where ``relabel[old] = new``.
        """
        d = self.d
        relabel = {int(self.m[i, i]): d - i for i in range(d)}
        new = np.zeros_like(self.m)
        for k in range(d):
            for i in range(k + 1):
                new[k, i] = relabel[int(self.m[k, i])]
        return RVineMatrix(new), relabel


class RVineSpec:
    """Structure, pair-copula families and parameters of an R-vine model.

    Parameters
    ----------
    matrix : RVineMatrix or array_like
        Structure matrix.
    families : array_like
        Lower-triangular family codes (family + 10 * rotation / 90).
    params, params2 : array_like, optional
        Lower-triangular first and second parameters; ``params2`` holds the
        Student-t degrees of freedom.
    """

    def __init__(self, matrix, families, params=None, params2=None):
        self.matrix = matrix if isinstance(matrix, RVineMatrix) else RVineMatrix(matrix)
        d = self.matrix.d
        self.families = _lower(families, int, d)
        self.params = _lower(params, float, d) if params is not None else np.zeros((d, d))
        self.params2 = _lower(params2, float, d) if params2 is not None else np.zeros((d, d))
        for a in (self.families, self.params, self.params2):
            a.setflags(write=False)
        self._layout = None

    @property
    def d(self):
        return self.matrix.d

    def __repr__(self):
        return (f"RVineSpec(matrix={self.matrix.m.tolist()}, families={self.families.tolist()}, "
                f"params={self.params.tolist()}, params2={self.params2.tolist()})")

    def __eq__(self, other):
        return (isinstance(other, RVineSpec) and self.matrix == other.matrix
                and np.array_equal(self.families, other.families)
                and np.array_equal(self.params, other.params)
                and np.array_equal(self.params2, other.params2))

    def family_of(self, k, i):
        return pc.decode(self.families[k, i])

    def pair(self, k, i):
        """The :class:`PairCopulaSpec` of cell ``(k, i)``."""
        fam, rot = self.family_of(k, i)
        par = (self.params[k, i], self.params2[k, i])[: pc.NPARAMS[fam]]
        return PairCopulaSpec(fam, rot, par)

    def violations(self):
        out = list(self.matrix.violations())
        if out:
            return out
        for k, i in self.matrix.cells():
            try:
                self.pair(k, i)
            except DomainError as exc:
                out.append(f"cell ({k + 1},{i + 1}): {exc}")
        return out

    def require_valid(self):
        bad = self.violations()
        if bad:
            raise DomainError("invalid R-vine specification: " + "; ".join(bad))

    # -- free-parameter vector ------------------------------------------------

    def layout(self):
        """``[(k, i, slot)]`` for every free parameter, tree-major order."""
        if self._layout is None:
            lay = []
            for k, i in self.matrix.cells():
                fam, _ = self.family_of(k, i)
                lay += [(k, i, s) for s in range(pc.NPARAMS[fam])]
            self._layout = lay
        return self._layout

    @property
    def nparams(self):
        return len(self.layout())

    def theta(self):
        """Free parameters as a flat vector (tree-major order)."""
        src = (self.params, self.params2)
        return np.array([src[s][k, i] for k, i, s in self.layout()], dtype=float)

    def with_theta(self, theta):
        """Copy with the free parameters replaced by ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.nparams,):
            raise DomainError(f"expected {self.nparams} parameters, got shape {theta.shape}")
        p1, p2 = self.params.copy(), self.params2.copy()
        for (k, i, s), val in zip(self.layout(), theta):
            (p1 if s == 0 else p2)[k, i] = val
        return RVineSpec(self.matrix, self.families, p1, p2)

    def with_pairs(self, pairs):
        """Copy with cells replaced: ``pairs`` maps ``(k, i)`` to a PairCopulaSpec."""
        fam, p1, p2 = self.families.copy(), self.params.copy(), self.params2.copy()
        for (k, i), spec in pairs.items():
            fam[k, i] = spec.code
            par = list(spec.params) + [0.0, 0.0]
            p1[k, i], p2[k, i] = par[0], par[1]
        return RVineSpec(self.matrix, fam, p1, p2)

    def theta_in_domain(self, thetas):
        """Row-wise domain check of a ``(K, p)`` array of parameter vectors."""
        thetas = np.atleast_2d(thetas)
        ok = np.ones(thetas.shape[0], dtype=bool)
        lay = self.layout()
        pos = 0
        while pos < len(lay):
            k, i, _ = lay[pos]
            fam, _ = self.family_of(k, i)
            npar = pc.NPARAMS[fam]
            ok &= pc.params_in_domain(fam, thetas[:, pos:pos + npar])
            pos += npar
        return ok

    # -- serialisation -----------------------------------------------------------

    def to_dict(self):
        d = self.d

        def tri(a, cast):
            return [[cast(a[k, i]) if i <= k else None for i in range(d)] for k in range(d)]

        return {"d": d, "matrix": tri(self.matrix.m, int), "families": tri(self.families, int),
                "params": tri(self.params, float), "params2": tri(self.params2, float)}

    @classmethod
    def from_dict(cls, obj):
        try:
            d = int(obj["d"])
            matrix = obj["matrix"]
            if len(matrix) != d or any(len(r) != d for r in matrix):
                raise DomainError(f"matrix must be {d}x{d}")
            return cls(RVineMatrix(_lower(matrix, int, d)), _lower(obj["families"], int, d),
                       _lower(obj.get("params", [[0] * d] * d), float, d),
                       _lower(obj.get("params2", [[0] * d] * d), float, d))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed model description: {exc}") from exc


# ---------------------------------------------------------------------------
# core recursion
# ---------------------------------------------------------------------------

def _check_data(data, d):
    u = np.asarray(data, dtype=float)
    if u.ndim == 1:
        u = u[None, :]
    if u.ndim != 2 or u.shape[1] != d:
        raise DomainError(f"data must have shape (n, {d}), got {np.shape(data)}")
    if u.shape[0] < 1:
        raise DomainError("data must contain at least one row")
    if not np.all((u > 0.0) & (u < 1.0)):
        raise DomainError("data entries must lie strictly inside (0, 1)")
    return np.clip(u, pc.UMIN, pc.UMAX)


def _cell_params(spec, thetas):
    """Map ``(K, p)`` parameter rows to ``{(k, i): tuple of (K, 1) arrays}``."""
    out = {}
    for col, (k, i, s) in enumerate(spec.layout()):
        out.setdefault((k, i), []).append(thetas[:, col:col + 1])
    return {key: tuple(v) for key, v in out.items()}


def _ancestors(spec):
    """Free-parameter columns each edge's outputs depend on, keyed by cell."""
    own = {}
    for col, (k, i, _) in enumerate(spec.layout()):
        own.setdefault((k, i), []).append(col)
    producer = {}
    anc = {}
    for k, i, s1, s2 in spec.matrix.plan():
        cols = set(own.get((k, i), ()))
        for src in (s1, s2):
            if src[0] != "u":
                cols |= anc[producer[src]]
        anc[(k, i)] = cols
        producer[("d", k - 1, i)] = producer[("i", k - 1, i)] = (k, i)
    return {key: np.array(sorted(v), dtype=int) for key, v in anc.items()}, own


def _forward(spec, u, thetas, pit=False, strict=False):
    """Run the tree-major recursion for ``K`` parameter vectors at once.

    Each edge is evaluated once per distinct combination of the parameters it
    depends on, so finite-difference stencils (where most rows differ from
    the centre in one or two coordinates) cost far less than ``K`` full passes.

    Returns per-observation log-likelihood of shape ``(K, n)``, the number of
    floored pair densities and, if ``pit``, the PIT values ``(K, n, d)``.
    """
    plan = spec.matrix.plan()
    d = spec.d
    K = thetas.shape[0]
    n = u.shape[0]
    anc, own = _ancestors(spec)
    zero = np.zeros(K, dtype=int)
    # stored values: key -> (array of distinct rows, row index for each of K)
    vals = {}

    def fetch(src, reps):
        if src[0] == "u":
            return u[:, src[1] - 1][None, :]
        arr, idx = vals[src]
        return arr[idx[reps]]

    ll = np.zeros((K, n))
    floored = 0
    for k, i, s1, s2 in plan:
        fam, rot = spec.family_of(k, i)
        cols = anc[(k, i)]
        if K == 1 or cols.size == 0:
            reps, inv = np.zeros(1, dtype=int), zero
        else:
            _, reps, inv = np.unique(thetas[:, cols], axis=0, return_index=True,
                                     return_inverse=True)
            inv = inv.reshape(-1)
        z1, z2 = fetch(s1, reps), fetch(s2, reps)
        if fam is Family.INDEPENDENCE:
            vals[("d", k - 1, i)] = (np.broadcast_to(z1, (reps.size, n)), inv)
            vals[("i", k - 1, i)] = (np.broadcast_to(z2, (reps.size, n)), inv)
            continue
        par = tuple(thetas[reps, c][:, None] for c in own[(k, i)])
        logc, hab, hba = pc.evaluate(fam, rot, z1, z2, par)
        bad = ~(logc > _LOG_FLOOR)
        nbad = int(np.count_nonzero(bad[inv]))
        if nbad:
            if strict:
                e = spec.matrix.edge(k, i)
                raise NumericalError(
                    f"pair density underflow in tree {e.tree}, edge {e.label()} "
                    f"(cell ({k + 1},{i + 1})), {nbad} evaluation(s)")
            floored += nbad
            logc = np.where(bad, _LOG_FLOOR, logc)
        ll += logc[inv]
        vals[("d", k - 1, i)] = (np.clip(hab, pc.UMIN, pc.UMAX), inv)
        vals[("i", k - 1, i)] = (np.clip(hba, pc.UMIN, pc.UMAX), inv)
    y = None
    if pit:
        y = np.empty((K, n, d))
        for i in range(d):
            var = int(spec.matrix.m[i, i])
            if i == d - 1:
                y[:, :, var - 1] = u[:, var - 1]
            else:
                arr, idx = vals[("d", i, i)]
                y[:, :, var - 1] = arr[idx]
    return ll, floored, y


def loglik_batch(spec, data, thetas, strict=False):
    """Per-observation log-likelihood for many parameter vectors.

    Parameters
    ----------
    thetas : array_like, shape (K, p)
        Free-parameter vectors in :meth:`RVineSpec.layout` order.

    Returns
    -------
    ndarray, shape (K, n)
    """
    u = _check_data(data, spec.d)
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if thetas.shape[1] != spec.nparams:
        raise DomainError(f"expected {spec.nparams} parameters per row")
    n = u.shape[0]
    step = max(1, CHUNK_ELEMENTS // n)
    out = np.empty((thetas.shape[0], n))
    floored = 0
    for start in range(0, thetas.shape[0], step):
        ll, nf, _ = _forward(spec, u, thetas[start:start + step], strict=strict)
        out[start:start + step] = ll
        floored += nf
    if floored:
        log.warning("%d pair-density evaluation(s) floored at %g", floored, DENSITY_FLOOR)
    return out


def loglik(spec, data, strict=False):
    """Log-likelihood of an R-vine copula.

    Parameters
    ----------
    spec : RVineSpec
    data : array_like, shape (n, d)
        Copula observations strictly inside the unit cube.
    strict : bool
        Raise :class:`NumericalError` instead of flooring a vanishing pair
        density at ``DENSITY_FLOOR``.

    Returns
    -------
    total : float
    per_obs : ndarray, shape (n,)
    """
    spec.require_valid()
    per_obs = loglik_batch(spec, data, spec.theta()[None, :], strict=strict)[0]
    return float(per_obs.sum()), per_obs


def rosenblatt(spec, data):
    """Rosenblatt transform; column ``j`` of the output belongs to variable ``j+1``."""
    spec.require_valid()
    u = _check_data(data, spec.d)
    _, _, y = _forward(spec, u, spec.theta()[None, :], pit=True)
    return y[0]


def inverse_rosenblatt(spec, w):
    """Inverse of :func:`rosenblatt`: map independent uniforms to vine data."""
    spec.require_valid()
    d = spec.d
    w = _check_data(w, d)
    m = spec.matrix.m
    plan = {(k, i): (s1, s2) for k, i, s1, s2 in spec.matrix.plan()}
    cellpar = _cell_params(spec, spec.theta()[None, :])
    vals = {}
    u = np.empty_like(w)

    def fetch(src):
        if src[0] == "u":
            return u[:, src[1] - 1]
        return vals[src]

    for i in range(d - 1, -1, -1):
        var = int(m[i, i])
        vals[("d", i, i)] = w[:, var - 1]
        for k in range(i + 1, d):
            fam, rot = spec.family_of(k, i)
            z2 = fetch(plan[(k, i)][1])
            p = vals[("d", k - 1, i)]
            if fam is Family.INDEPENDENCE:
                x = p
            else:
                par = tuple(a[0] for a in cellpar[(k, i)])
                x = np.clip(pc.evaluate_hinv(fam, rot, p, z2, par), pc.UMIN, pc.UMAX)
            vals[("d", k, i)] = x
        u[:, var - 1] = vals[("d", d - 1, i)]
        for k in range(d - 1, i, -1):
            fam, rot = spec.family_of(k, i)
            z1 = vals[("d", k, i)]
            z2 = fetch(plan[(k, i)][1])
            if fam is Family.INDEPENDENCE:
                vals[("i", k - 1, i)] = z2
            else:
                par = tuple(a[0] for a in cellpar[(k, i)])
                hba = pc.evaluate(fam, rot, z1, z2, par)[2]
                vals[("i", k - 1, i)] = np.clip(hba, pc.UMIN, pc.UMAX)
    return u


def simulate(spec, n, seed, stream=()):
    """Draw ``n`` observations by inverse Rosenblatt of counter-based uniforms.

    ``stream`` selects an independent substream of ``seed``; the default
    substream is the plain simulation stream.
    """
    spec.require_valid()
    n = int(n)
    if n < 1:
        raise DomainError("n must be at least 1")
    key = tuple(stream) if stream else (_rng.TAG_SIMULATE,)
    w = _rng.generator(seed, *key).random((n, spec.d))
    # Philox can return exact 0.0; keep the open interval
    w = np.clip(w, pc.UMIN, pc.UMAX)
    return inverse_rosenblatt(spec, w)


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

def _tau_start(fam, rot, z1, z2, edge, clip_tau):
    tau = float(stats.kendalltau(z1, z2)[0])
    lo, hi = pc.tau_range(fam, rot)
    margin = 1e-3
    if not lo + margin <= tau <= hi - margin:
        if not clip_tau and not lo < tau < hi:
            raise DomainError(
                f"empirical tau {tau:.4f} of edge {edge.label()} (tree {edge.tree}) outside "
                f"the range ({lo}, {hi}) of {fam.name} rotated {rot}")
        tau = float(np.clip(tau, lo + margin, hi - margin))
    if fam is Family.FRANK and abs(tau) < 1e-4:
        tau = 1e-4 if tau >= 0 else -1e-4
    return tau


def fit_sequential(spec, data, clip_tau=False):
    """Tree-by-tree estimation with families and structure held fixed.

    One-parameter families are fitted by inverting the empirical Kendall's tau
    of their pseudo-observations; Student-t pairs by pairwise maximum
    likelihood.

    Parameters
    ----------
    clip_tau : bool
        Move an unattainable empirical tau to the nearest attainable value
        instead of raising :class:`DomainError`.
    """
    spec.matrix.plan()
    u = _check_data(data, spec.d)
    p = spec.nparams
    if u.shape[0] < 10 * p:
        raise DomainError(f"need at least 10 * p = {10 * p} observations, got {u.shape[0]}")
    vals = {}
    fitted = {}
    for k, i, s1, s2 in spec.matrix.plan():
        fam, rot = spec.family_of(k, i)
        z1 = u[:, s1[1] - 1] if s1[0] == "u" else vals[s1]
        z2 = u[:, s2[1] - 1] if s2[0] == "u" else vals[s2]
        edge = spec.matrix.edge(k, i)
        if fam is Family.INDEPENDENCE:
            par = ()
        elif fam is Family.STUDENT_T:
            tau = _tau_start(fam, rot, z1, z2, edge, True)
            par, _ = pc.fit_pair(fam, rot, z1, z2, start=pc.tau_to_param(fam, tau, rot))
        else:
            tau = _tau_start(fam, rot, z1, z2, edge, clip_tau)
            par = pc.tau_to_param(fam, tau, rot)
        pair = PairCopulaSpec(fam, rot, par)
        fitted[(k, i)] = pair
        _, hab, hba = pc.evaluate(fam, rot, z1, z2, pair.params)
        vals[("d", k - 1, i)] = np.clip(hab, pc.UMIN, pc.UMAX)
        vals[("i", k - 1, i)] = np.clip(hba, pc.UMIN, pc.UMAX)
    return spec.with_pairs(fitted)


class _LinkMap:
    """Vector link transform for the free parameters of a spec."""

    def __init__(self, spec):
        self.blocks = []
        pos = 0
        lay = spec.layout()
        while pos < len(lay):
            k, i, _ = lay[pos]
            fam, _ = spec.family_of(k, i)
            npar = pc.NPARAMS[fam]
            self.blocks.append((fam, slice(pos, pos + npar)))
            pos += npar
        self.bounds = [b for fam, _ in self.blocks for b in _LINK_BOUNDS[fam]]

    def to_link(self, theta):
        x = np.empty_like(theta)
        for fam, sl in self.blocks:
            x[..., sl] = pc.to_link(fam, theta[..., sl])
        return x

    def from_link(self, x):
        theta = np.empty_like(x)
        for fam, sl in self.blocks:
            theta[..., sl] = pc.from_link(fam, x[..., sl])
        return theta


def fit_mle(spec_start, data, maxiter=500, gtol=1e-5, ftol=1e-9):
    """Joint maximum-likelihood estimation of all pair-copula parameters.

    Maximises the mean log-likelihood with L-BFGS-B on link-transformed
    parameters. Gradients are central finite differences on the link scale,
    evaluated in one batch per iteration.

    Returns
    -------
    spec : RVineSpec
        Fitted model.
    loglik : float
        Total log-likelihood at the returned parameters.

    Raises
    ------
    ConvergenceError
        If ``maxiter`` iterations are exhausted; ``exc.best`` holds
        ``(spec, loglik)`` of the best point found.
    """
    spec_start.require_valid()
    u = _check_data(data, spec_start.d)
    n = u.shape[0]
    theta0 = spec_start.theta()
    ll0 = float(loglik_batch(spec_start, u, theta0[None, :])[0].sum())
    if spec_start.nparams == 0:
        return spec_start, ll0
    link = _LinkMap(spec_start)
    p = theta0.size
    lo = np.array([b[0] for b in link.bounds])
    hi = np.array([b[1] for b in link.bounds])
    x0 = np.clip(link.to_link(theta0), lo, hi)

    def fun(x):
        h = _fd.steps(x)
        pts = np.repeat(x[None, :], 2 * p + 1, axis=0)
        for j in range(p):
            pts[1 + 2 * j, j] += h[j]
            pts[2 + 2 * j, j] -= h[j]
        vals = loglik_batch(spec_start, u, link.from_link(pts)).sum(axis=1) / n
        grad = (vals[1::2] - vals[2::2]) / (2.0 * h)
        return -vals[0], -grad

    res = optimize.minimize(fun, x0, jac=True, method="L-BFGS-B",
                            bounds=list(zip(lo, hi)),
                            options={"maxiter": maxiter, "gtol": gtol, "ftol": ftol})
    theta = link.from_link(res.x)
    fitted = spec_start.with_theta(theta)
    ll = float(loglik_batch(fitted, u, theta[None, :])[0].sum())
    if ll < ll0:
        fitted, ll = spec_start, ll0
    if res.nit >= maxiter and not res.success:
        raise ConvergenceError(f"fit_mle did not converge in {maxiter} iterations",
                               best=(fitted, ll))
    return fitted, ll


def score_and_hessian(spec, data):
    """Per-observation score vectors and Hessians by central differences.

    Returns
    -------
    scores : ndarray, shape (n, p)
    hessians : ndarray, shape (n, p, p)
    """
    spec.require_valid()
    theta = spec.theta()
    if theta.size == 0:
        raise DomainError("the model has no free parameters")
    h = _fd.steps(theta)
    pts = _fd.score_hessian_points(theta, h)
    if not np.all(spec.theta_in_domain(pts)):
        raise NumericalError("finite-difference stencil leaves the parameter domain; "
                             "a parameter is too close to its boundary")
    vals = loglik_batch(spec, data, pts)
    grad, hess = _fd.score_hessian_combine(vals, h)
    return grad.T.copy(), np.moveaxis(hess, -1, 0).copy()


# ---------------------------------------------------------------------------
# structure helpers
# ---------------------------------------------------------------------------

def matrix_from_edges(d, edges):
    """Build a structure matrix from a list of edges.

    Parameters
    ----------
    d : int
    edges : iterable of (a, b, conditioning)
        Conditioned pair and conditioning set of every edge, labels ``1..d``.

    Returns
    -------
    RVineMatrix
    """
    remaining = {}
    for a, b, cond in edges:
        cond = frozenset(int(c) for c in cond)
        remaining.setdefault(len(cond) + 1, set()).add((frozenset((int(a), int(b))), cond))
    total = sum(len(v) for v in remaining.values())
    if total != d * (d - 1) // 2:
        raise DomainError(f"a {d}-dimensional vine has {d * (d - 1) // 2} edges, got {total}")
    m = np.zeros((d, d), dtype=int)
    left = set(range(1, d + 1))

    def column(x, top):
        chosen = [top]
        cond = top[1]
        for t in range(len(cond), 0, -1):
            # the edge one tree below shares x and spans cond + {x}
            found = next((e for e in remaining.get(t, ())
                          if x in e[0] and (e[0] | e[1]) == (cond | {x})), None)
            if found is None:
                return None
            chosen.append(found)
            cond = found[1]
        return chosen

    for i in range(d - 1):
        t_top = d - 1 - i
        tops = remaining.get(t_top, set())
        if len(tops) != 1:
            raise DomainError(f"tree {t_top} must contain exactly one edge at this stage")
        top = next(iter(tops))
        chosen = None
        for x in sorted(top[0]):
            chosen = column(x, top)
            if chosen is not None:
                break
        if chosen is None:
            raise DomainError("edges do not form a regular vine")
        m[i, i] = x
        for e in chosen:
            t = len(e[1]) + 1
            m[d - t, i] = next(iter(e[0] - {x}))
            remaining[t].discard(e)
        left.discard(x)
    if len(left) != 1:
        raise DomainError("edges do not form a regular vine")
    m[d - 1, d - 1] = left.pop()
    mat = RVineMatrix(m)
    bad = mat.violations()
    if bad:
        raise DomainError("edges do not form a regular vine: " + "; ".join(bad))
    return mat


def spec_on_matrix(matrix, edges):
    """Attach pair copulas to the cells of ``matrix``.

    Parameters
    ----------
    matrix : RVineMatrix
    edges : iterable of (a, b, conditioning, PairCopulaSpec)
        The pair copula of an edge is read as ``c(u_a, u_b)``; if the matrix
        puts ``b`` on the diagonal the 90/270 rotations are swapped.
    """
    matrix = matrix if isinstance(matrix, RVineMatrix) else RVineMatrix(matrix)
    lookup = {(frozenset((int(a), int(b))), frozenset(int(c) for c in cond)): (int(a), pair)
              for a, b, cond, pair in edges}
    pairs = {}
    for e in matrix.edges():
        key = (frozenset(e.conditioned), frozenset(e.conditioning))
        if key not in lookup:
            raise DomainError(f"no pair copula given for edge {e.label()}")
        a, pair = lookup[key]
        if a != e.conditioned[0] and pair.rotation in (90, 270):
            pair = PairCopulaSpec(pair.family, 360 - pair.rotation, pair.params)
        pairs[(e.row, e.col)] = pair
    return RVineSpec(matrix, np.zeros((matrix.d, matrix.d), dtype=int)).with_pairs(pairs)


def spec_from_edges(d, edges):
    """Build an :class:`RVineSpec` from ``[(a, b, conditioning, PairCopulaSpec)]``."""
    edges = list(edges)
    mat = matrix_from_edges(d, [(a, b, c) for a, b, c, _ in edges])
    return spec_on_matrix(mat, edges)


def dvine_edges(order):
    """Edges of the D-vine with path ``order``."""
    order = [int(o) for o in order]
    d = len(order)
    return [(order[j], order[j + t], tuple(order[j + 1:j + t]))
            for t in range(1, d) for j in range(d - t)]


def cvine_edges(order):
    """Edges of the C-vine whose tree-``t`` root is ``order[t-1]``."""
    order = [int(o) for o in order]
    d = len(order)
    return [(order[t - 1], order[j], tuple(order[:t - 1]))
            for t in range(1, d) for j in range(t, d)]


CANDIDATE_FAMILIES = (Family.GAUSS, Family.STUDENT_T, Family.CLAYTON, Family.GUMBEL,
                      Family.FRANK, Family.JOE)


def select_families(matrix, data, candidates=CANDIDATE_FAMILIES, indep_test_level=None):
    """Choose and fit a family for every edge by minimum AIC, tree by tree.

    For each edge every candidate family (with the rotations compatible with
    the sign of the empirical Kendall's tau) is fitted to the pseudo-observations
    by maximum likelihood; the independence copula competes with AIC 0.

    Parameters
    ----------
    matrix : RVineMatrix
    data : array_like, shape (n, d)
    candidates : iterable of Family
    indep_test_level : float, optional
        If given, edges whose Kendall's tau independence test has p-value
        above this level are set to independence before AIC comparison.
    """
    matrix = matrix if isinstance(matrix, RVineMatrix) else RVineMatrix(matrix)
    u = _check_data(data, matrix.d)
    vals = {}
    chosen = {}
    for k, i, s1, s2 in matrix.plan():
        z1 = u[:, s1[1] - 1] if s1[0] == "u" else vals[s1]
        z2 = u[:, s2[1] - 1] if s2[0] == "u" else vals[s2]
        tau, pval = stats.kendalltau(z1, z2)
        best = (0.0, PairCopulaSpec(Family.INDEPENDENCE))
        if indep_test_level is None or pval <= indep_test_level:
            for fam in candidates:
                fam = Family(fam)
                for rot in pc.allowed_rotations(fam):
                    if fam is Family.FRANK and rot == 180:
                        continue
                    if fam in (Family.CLAYTON, Family.GUMBEL, Family.JOE):
                        if (rot in (0, 180)) != (tau > 0):
                            continue
                    try:
                        par, ll = pc.fit_pair(fam, rot, z1, z2)
                        pair = PairCopulaSpec(fam, rot, par)
                    except (DomainError, ConvergenceError, FloatingPointError):
                        continue
                    aic = 2.0 * pc.NPARAMS[fam] - 2.0 * ll
                    if np.isfinite(aic) and aic < best[0]:
                        best = (aic, pair)
        pair = best[1]
        chosen[(k, i)] = pair
        _, hab, hba = pc.evaluate(pair.family, pair.rotation, z1, z2, pair.params)
        vals[("d", k - 1, i)] = np.clip(hab, pc.UMIN, pc.UMAX)
        vals[("i", k - 1, i)] = np.clip(hba, pc.UMIN, pc.UMAX)
    return RVineSpec(matrix, np.zeros((matrix.d, matrix.d), dtype=int)).with_pairs(chosen)
