"""Central finite-difference stencils evaluated in one batch.

Every routine here splits the work into two steps. ``*_points`` builds the
parameter vectors to evaluate, and ``*_combine`` turns the evaluated values
back into derivatives. Callers can therefore evaluate all stencil points with a
single vectorised call.
"""
import numpy as np

EPS = np.finfo(float).eps
CBRT_EPS = np.cbrt(EPS)
# third derivatives need a coarser step: roundoff grows like eps / h**3
FIFTH_ROOT_EPS = EPS ** 0.2


def steps(x, base=CBRT_EPS):
    """Per-coordinate step ``base * max(1, |x_j|)``."""
    x = np.asarray(x, dtype=float)
    return base * np.maximum(1.0, np.abs(x))


def score_hessian_points(x, h):
    """Stencil for gradient and Hessian of a function of ``x``.

    Returns an array of shape ``(K, p)``; row 0 is ``x`` itself.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    pts = [x.copy()]
    for j in range(p):
        for s in (1.0, -1.0):
            y = x.copy()
            y[j] += s * h[j]
            pts.append(y)
    for i in range(p):
        for j in range(i + 1, p):
            for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                y = x.copy()
                y[i] += si * h[i]
                y[j] += sj * h[j]
                pts.append(y)
    return np.array(pts).reshape(-1, p)


def score_hessian_combine(values, h):
    """Turn stencil values into ``(grad, hess)``.

    ``values`` has shape ``(K, ...)``; the trailing axes (e.g. observations) are
    carried through, so ``grad`` has shape ``(p, ...)`` and ``hess``
    ``(p, p, ...)``.
    """
    values = np.asarray(values, dtype=float)
    p = len(h)
    f0 = values[0]
    grad = np.empty((p,) + f0.shape)
    hess = np.empty((p, p) + f0.shape)
    idx = 1
    for j in range(p):
        fp, fm = values[idx], values[idx + 1]
        idx += 2
        grad[j] = (fp - fm) / (2.0 * h[j])
        hess[j, j] = (fp - 2.0 * f0 + fm) / (h[j] * h[j])
    for i in range(p):
        for j in range(i + 1, p):
            fpp, fpm, fmp, fmm = values[idx:idx + 4]
            idx += 4
            hij = (fpp - fpm - fmp + fmm) / (4.0 * h[i] * h[j])
            hess[i, j] = hij
            hess[j, i] = hij
    return grad, hess


def _third_terms(p):
    """Yield ``(key, [(coef, offsets)], scale)`` for each distinct third derivative."""
    terms = []
    for a in range(p):
        terms.append(((a, a, a), [(0.5, {a: 2}), (-1.0, {a: 1}), (1.0, {a: -1}),
                                  (-0.5, {a: -2})], ("aaa", a)))
    for a in range(p):
        for b in range(p):
            if a == b:
                continue
            combo = []
            for sb in (1, -1):
                combo += [(0.5 * sb, {a: 1, b: sb}), (-1.0 * sb, {b: sb}),
                          (0.5 * sb, {a: -1, b: sb})]
            terms.append(((a, a, b), combo, ("aab", a, b)))
    for a in range(p):
        for b in range(a + 1, p):
            for c in range(b + 1, p):
                combo = []
                for sa in (1, -1):
                    for sb in (1, -1):
                        for sc in (1, -1):
                            combo.append((0.125 * sa * sb * sc, {a: sa, b: sb, c: sc}))
                terms.append(((a, b, c), combo, ("abc", a, b, c)))
    return terms


def third_derivative_points(x, h):
    """Stencil for all third partial derivatives of a scalar function.

    Returns ``(points, plan)``; pass ``plan`` to :func:`third_derivative_combine`.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    index = {}
    pts = []
    plan = []
    for key, combo, _ in _third_terms(p):
        rows = []
        for coef, off in combo:
            k = tuple(sorted(off.items()))
            if k not in index:
                y = x.copy()
                for j, m in off.items():
                    y[j] += m * h[j]
                index[k] = len(pts)
                pts.append(y)
            rows.append((coef, index[k]))
        plan.append((key, rows))
    return np.array(pts).reshape(-1, p), plan


def third_derivative_combine(values, h, plan):
    """Assemble the symmetric tensor ``T[a, b, c]`` from stencil values."""
    values = np.asarray(values, dtype=float)
    p = len(h)
    T = np.empty((p, p, p))
    for (a, b, c), rows in plan:
        acc = sum(coef * values[i] for coef, i in rows)
        val = acc / (h[a] * h[b] * h[c])
        for perm in {(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)}:
            T[perm] = val
    return T


FOURTH_ROOT_EPS = EPS ** 0.25


def third_forward_points(x, h):
    """Forward-difference stencil for all third partials of a scalar function.

    Uses ``Delta_a Delta_b Delta_c f(x) / (h_a h_b h_c)`` with forward
    differences, so every point is ``x`` plus a multi-index of at most three
    steps: ``C(p+3, 3)`` points instead of the ``~8 p^3 / 6`` of central
    stencils. The error is first order in ``h``; pair it with
    ``FOURTH_ROOT_EPS`` steps.

    Returns ``(points, plan)`` for :func:`third_forward_combine`.
    """
    x = np.asarray(x, dtype=float)
    p = x.size
    index = {}
    pts = []

    def point(off):
        key = tuple(sorted(off.items()))
        if key not in index:
            y = x.copy()
            for j, m in off.items():
                y[j] += m * h[j]
            index[key] = len(pts)
            pts.append(y)
        return index[key]

    plan = []
    for a in range(p):
        for b in range(a, p):
            for c in range(b, p):
                rows = []
                for mask in range(8):
                    off = {}
                    for bit, j in enumerate((a, b, c)):
                        if mask >> bit & 1:
                            off[j] = off.get(j, 0) + 1
                    sign = -1.0 if (3 - bin(mask).count("1")) % 2 else 1.0
                    rows.append((sign, point(off)))
                plan.append(((a, b, c), rows))
    return np.array(pts).reshape(-1, p), plan


def third_forward_combine(values, h, plan):
    """Assemble the symmetric tensor ``T[a, b, c]`` from forward-stencil values."""
    return third_derivative_combine(values, h, plan)
