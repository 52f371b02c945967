"""Pure-Python/numpy kernels; reference behaviour for ``_kernels.pyx``.

Interval arithmetic rounds outward with ``math.nextafter``.  Two results
are kept exact instead of widened: a product with an exactly-zero factor,
and a sum that evaluates to zero (floating-point sums that round to zero
are exact).  This keeps structural zeros, e.g. ``f(0, p, 1) = 0``, at 0.
"""
from __future__ import annotations

import math

import numpy as np

INF = math.inf
_nextafter = math.nextafter

ACCEPT, REJECT, INCONCLUSIVE = 0, 1, 2
MODE_LIPSCHITZ, MODE_INTERVAL = 0, 1


def _dn(x):
    return x if x == 0.0 else _nextafter(x, -INF)


def _up(x):
    return x if x == 0.0 else _nextafter(x, INF)


def _mul_dn(x, y):
    if x == 0.0 or y == 0.0:
        return 0.0
    return _nextafter(x * y, -INF)


def _mul_up(x, y):
    if x == 0.0 or y == 0.0:
        return 0.0
    return _nextafter(x * y, INF)


def iadd(alo, ahi, blo, bhi):
    return _dn(alo + blo), _up(ahi + bhi)


def imul(alo, ahi, blo, bhi):
    lo = min(_mul_dn(alo, blo), _mul_dn(alo, bhi), _mul_dn(ahi, blo), _mul_dn(ahi, bhi))
    hi = max(_mul_up(alo, blo), _mul_up(alo, bhi), _mul_up(ahi, blo), _mul_up(ahi, bhi))
    return lo, hi


def taylor_shift(lo, hi, m):
    """Coefficients of ``q(t) = p(m + t)`` for interval coefficients ``lo/hi`` (ascending)."""
    lo = list(lo)
    hi = list(hi)
    n = len(lo) - 1
    for k in range(n):
        for j in range(n - 1, k - 1, -1):
            plo, phi = imul(m, m, lo[j + 1], hi[j + 1])
            lo[j], hi[j] = iadd(lo[j], hi[j], plo, phi)
    return lo, hi


def _pow_up(r, k):
    v = 1.0
    for _ in range(k):
        v = _mul_up(v, r)
    return v


def _centered_interval(dlo, dhi, r):
    """Enclosure of ``sum d_k t^k`` for ``t`` in ``[-r, r]``."""
    slo, shi = dlo[0], dhi[0]
    for k in range(1, len(dlo)):
        rk = _pow_up(r, k)
        tlo = -rk if k % 2 else 0.0
        plo, phi = imul(dlo[k], dhi[k], tlo, rk)
        slo, shi = iadd(slo, shi, plo, phi)
    return slo, shi


def _centered_lipschitz(dlo, dhi, r):
    """``f(m) - L r`` with ``L`` an upper bound of ``|f'|`` on ``[m - r, m + r]``."""
    lip = 0.0
    for k in range(1, len(dlo)):
        mag = max(abs(dlo[k]), abs(dhi[k]))
        lip = _up(lip + _mul_up(_mul_up(float(k), mag), _pow_up(r, k - 1)))
    return _dn(dlo[0] - _mul_up(lip, r))


def _anchored_left(dlo, dhi, w):
    # x - a in [0, w]; f(x) = d0 + (x - a) g(x)
    glo, ghi = 0.0, 0.0
    for k in range(1, len(dlo)):
        wk = _pow_up(w, k - 1)
        plo, phi = imul(dlo[k], dhi[k], 0.0, wk)
        glo, ghi = iadd(glo, ghi, plo, phi)
    if glo >= 0.0:
        return dlo[0]
    return _dn(dlo[0] + _mul_dn(w, glo))


def _anchored_right(dlo, dhi, w):
    # x - b in [-w, 0]
    glo, ghi = 0.0, 0.0
    for k in range(1, len(dlo)):
        wk = _pow_up(w, k - 1)
        tlo, thi = ((-wk, 0.0) if (k - 1) % 2 else (0.0, wk))
        plo, phi = imul(dlo[k], dhi[k], tlo, thi)
        glo, ghi = iadd(glo, ghi, plo, phi)
    if ghi <= 0.0:
        return dlo[0]
    return _dn(dlo[0] - _mul_up(w, ghi))


def poly_lower(lo, hi, a, b, mode=MODE_INTERVAL):
    """Rigorous lower bound of an interval-coefficient polynomial on ``[a, b]``."""
    m = 0.5 * (a + b)
    r = max(_up(b - m), _up(m - a))
    dlo, dhi = taylor_shift(lo, hi, m)
    if mode == MODE_LIPSCHITZ:
        return _centered_lipschitz(dlo, dhi, r)
    best = _centered_interval(dlo, dhi, r)[0]
    w = _up(b - a)
    llo, lhi = taylor_shift(lo, hi, a)
    best = max(best, _anchored_left(llo, lhi, w))
    rlo, rhi = taylor_shift(lo, hi, b)
    return max(best, _anchored_right(rlo, rhi, w))


def poly_enclosure(lo, hi, a, b):
    """Interval enclosure (centered form) of the polynomial over ``[a, b]``."""
    m = 0.5 * (a + b)
    r = max(_up(b - m), _up(m - a))
    dlo, dhi = taylor_shift(lo, hi, m)
    return _centered_interval(dlo, dhi, r)


def poly_point(lo, hi, x):
    """Interval Horner evaluation at the float ``x``."""
    n = len(lo) - 1
    vlo, vhi = lo[n], hi[n]
    for k in range(n - 1, -1, -1):
        vlo, vhi = imul(vlo, vhi, x, x)
        vlo, vhi = iadd(vlo, vhi, lo[k], hi[k])
    return vlo, vhi


def sweep(coef_lo, coef_hi, target, max_depth=40, mode=MODE_INTERVAL):
    """Bisect ``[0, 1]`` until every condition polynomial is certified ``>= target``.

    ``coef_lo/coef_hi`` have shape ``(ncond, deg + 1)``.  Returns
    ``(verdict, cells, witness)`` where ``cells`` is an ``(n, 3)`` array of
    ``(a, b, lower_bound)`` for accepted cells and ``witness`` is
    ``(kappa, condition_index, value)``: a certified upper bound below
    ``target`` for a rejection, or the undecided cell midpoint and its best
    lower bound for an inconclusive verdict.
    """
    coef_lo = np.asarray(coef_lo, dtype=np.float64)
    coef_hi = np.asarray(coef_hi, dtype=np.float64)
    ncond = coef_lo.shape[0]
    polys = [(list(coef_lo[c]), list(coef_hi[c])) for c in range(ncond)]

    for x in (0.0, 1.0):
        for c, (lo, hi) in enumerate(polys):
            ub = poly_point(lo, hi, x)[1]
            if ub < target:
                return REJECT, np.empty((0, 3)), (x, c, ub)

    cells = []
    stack = [(0.0, 1.0, 0)]
    undecided = None
    while stack:
        a, b, depth = stack.pop()
        worst, worst_c = INF, -1
        for c, (lo, hi) in enumerate(polys):
            lb = poly_lower(lo, hi, a, b, mode)
            if lb < worst:
                worst, worst_c = lb, c
        if worst >= target:
            cells.append((a, b, worst))
            continue
        m = 0.5 * (a + b)
        for c, (lo, hi) in enumerate(polys):
            ub = poly_point(lo, hi, m)[1]
            if ub < target:
                return REJECT, np.empty((0, 3)), (m, c, ub)
        if depth >= max_depth:
            if undecided is None:
                undecided = (m, worst_c, worst)
            continue
        # right pushed first so cells come out in increasing kappa
        stack.append((m, b, depth + 1))
        stack.append((a, m, depth + 1))
    if undecided is not None:
        return INCONCLUSIVE, np.array(cells).reshape(-1, 3), undecided
    return ACCEPT, np.array(cells).reshape(-1, 3), (math.nan, -1, math.nan)


# --- finite-difference operator ------------------------------------------------

def monotone_rhs(u, hx, hy, p, gamma, eps):
    """Regularized operator with a sign-adapted (positive-type) cross stencil.

    Returns ``(rhs, cmax)``; ``rhs`` is zero on the boundary ring and
    ``cmax`` is the largest prefactor ``(|Du|^2 + eps)^(gamma/2)`` over the interior.
    """
    c = u[1:-1, 1:-1]
    e, w = u[2:, 1:-1], u[:-2, 1:-1]
    n, s = u[1:-1, 2:], u[1:-1, :-2]
    ne, sw = u[2:, 2:], u[:-2, :-2]
    se, nw = u[2:, :-2], u[:-2, 2:]
    ux = (e - w) / (2.0 * hx)
    uy = (n - s) / (2.0 * hy)
    uxx = (e - 2.0 * c + w) / (hx * hx)
    uyy = (n - 2.0 * c + s) / (hy * hy)
    axial = e + w + n + s
    hxy2 = 2.0 * hx * hy
    uxy_pos = (2.0 * c + ne + sw - axial) / hxy2
    uxy_neg = -(2.0 * c + se + nw - axial) / hxy2
    g2e = ux * ux + uy * uy + eps
    pm2 = p - 2.0
    a11 = 1.0 + pm2 * (ux * ux) / g2e
    a22 = 1.0 + pm2 * (uy * uy) / g2e
    a12 = pm2 * (ux * uy) / g2e
    uxy = np.where(a12 >= 0.0, uxy_pos, uxy_neg)
    coef = g2e ** (0.5 * gamma)
    out = np.zeros_like(u)
    out[1:-1, 1:-1] = coef * (a11 * uxx + a22 * uyy + 2.0 * a12 * uxy)
    return out, float(np.max(coef))
