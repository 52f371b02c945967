# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled kernels; same contracts as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.math cimport nextafter, INFINITY, fabs, pow, NAN

cnp.import_array()

DEF MAXDEG = 16

ACCEPT, REJECT, INCONCLUSIVE = 0, 1, 2
MODE_LIPSCHITZ, MODE_INTERVAL = 0, 1


cdef inline double _dn(double x) nogil:
    return x if x == 0.0 else nextafter(x, -INFINITY)

cdef inline double _up(double x) nogil:
    return x if x == 0.0 else nextafter(x, INFINITY)

cdef inline double _mul_dn(double x, double y) nogil:
    if x == 0.0 or y == 0.0:
        return 0.0
    return nextafter(x * y, -INFINITY)

cdef inline double _mul_up(double x, double y) nogil:
    if x == 0.0 or y == 0.0:
        return 0.0
    return nextafter(x * y, INFINITY)

cdef inline double _min4(double a, double b, double c, double d) nogil:
    cdef double m = a
    if b < m: m = b
    if c < m: m = c
    if d < m: m = d
    return m

cdef inline double _max4(double a, double b, double c, double d) nogil:
    cdef double m = a
    if b > m: m = b
    if c > m: m = c
    if d > m: m = d
    return m

cdef inline void _imul(double alo, double ahi, double blo, double bhi,
                       double* rlo, double* rhi) nogil:
    rlo[0] = _min4(_mul_dn(alo, blo), _mul_dn(alo, bhi), _mul_dn(ahi, blo), _mul_dn(ahi, bhi))
    rhi[0] = _max4(_mul_up(alo, blo), _mul_up(alo, bhi), _mul_up(ahi, blo), _mul_up(ahi, bhi))


cdef void _shift(const double* lo, const double* hi, int n, double m,
                 double* dlo, double* dhi) nogil:
    cdef int j, k
    cdef double plo, phi
    for j in range(n + 1):
        dlo[j] = lo[j]
        dhi[j] = hi[j]
    for k in range(n):
        for j in range(n - 1, k - 1, -1):
            _imul(m, m, dlo[j + 1], dhi[j + 1], &plo, &phi)
            dlo[j] = _dn(dlo[j] + plo)
            dhi[j] = _up(dhi[j] + phi)


cdef inline double _pow_up(double r, int k) nogil:
    cdef double v = 1.0
    cdef int i
    for i in range(k):
        v = _mul_up(v, r)
    return v


cdef double _centered_interval_lo(const double* dlo, const double* dhi, int n, double r) nogil:
    cdef double slo = dlo[0], shi = dhi[0], rk, tlo, plo, phi
    cdef int k
    for k in range(1, n + 1):
        rk = _pow_up(r, k)
        tlo = -rk if k % 2 else 0.0
        _imul(dlo[k], dhi[k], tlo, rk, &plo, &phi)
        slo = _dn(slo + plo)
        shi = _up(shi + phi)
    return slo


cdef double _centered_interval_hi(const double* dlo, const double* dhi, int n, double r) nogil:
    cdef double slo = dlo[0], shi = dhi[0], rk, tlo, plo, phi
    cdef int k
    for k in range(1, n + 1):
        rk = _pow_up(r, k)
        tlo = -rk if k % 2 else 0.0
        _imul(dlo[k], dhi[k], tlo, rk, &plo, &phi)
        slo = _dn(slo + plo)
        shi = _up(shi + phi)
    return shi


cdef double _centered_lipschitz(const double* dlo, const double* dhi, int n, double r) nogil:
    cdef double lip = 0.0, mag
    cdef int k
    for k in range(1, n + 1):
        mag = fabs(dlo[k])
        if fabs(dhi[k]) > mag:
            mag = fabs(dhi[k])
        lip = _up(lip + _mul_up(_mul_up(<double>k, mag), _pow_up(r, k - 1)))
    return _dn(dlo[0] - _mul_up(lip, r))


cdef double _anchored_left(const double* dlo, const double* dhi, int n, double w) nogil:
    cdef double glo = 0.0, ghi = 0.0, wk, plo, phi
    cdef int k
    for k in range(1, n + 1):
        wk = _pow_up(w, k - 1)
        _imul(dlo[k], dhi[k], 0.0, wk, &plo, &phi)
        glo = _dn(glo + plo)
        ghi = _up(ghi + phi)
    if glo >= 0.0:
        return dlo[0]
    return _dn(dlo[0] + _mul_dn(w, glo))


cdef double _anchored_right(const double* dlo, const double* dhi, int n, double w) nogil:
    cdef double glo = 0.0, ghi = 0.0, wk, plo, phi, tlo, thi
    cdef int k
    for k in range(1, n + 1):
        wk = _pow_up(w, k - 1)
        if (k - 1) % 2:
            tlo = -wk
            thi = 0.0
        else:
            tlo = 0.0
            thi = wk
        _imul(dlo[k], dhi[k], tlo, thi, &plo, &phi)
        glo = _dn(glo + plo)
        ghi = _up(ghi + phi)
    if ghi <= 0.0:
        return dlo[0]
    return _dn(dlo[0] - _mul_up(w, ghi))


cdef double _poly_lower(const double* lo, const double* hi, int n, double a, double b, int mode) nogil:
    cdef double dlo[MAXDEG + 1]
    cdef double dhi[MAXDEG + 1]
    cdef double m = 0.5 * (a + b)
    cdef double r = _up(b - m)
    cdef double r2 = _up(m - a)
    cdef double best, w, v
    if r2 > r:
        r = r2
    _shift(lo, hi, n, m, dlo, dhi)
    if mode == 0:
        return _centered_lipschitz(dlo, dhi, n, r)
    best = _centered_interval_lo(dlo, dhi, n, r)
    w = _up(b - a)
    _shift(lo, hi, n, a, dlo, dhi)
    v = _anchored_left(dlo, dhi, n, w)
    if v > best:
        best = v
    _shift(lo, hi, n, b, dlo, dhi)
    v = _anchored_right(dlo, dhi, n, w)
    if v > best:
        best = v
    return best


cdef void _poly_point(const double* lo, const double* hi, int n, double x,
                      double* vlo, double* vhi) nogil:
    cdef double plo, phi
    cdef int k
    vlo[0] = lo[n]
    vhi[0] = hi[n]
    for k in range(n - 1, -1, -1):
        _imul(vlo[0], vhi[0], x, x, &plo, &phi)
        vlo[0] = _dn(plo + lo[k])
        vhi[0] = _up(phi + hi[k])


def _as_poly(lo, hi):
    lo_a = np.ascontiguousarray(lo, dtype=np.float64)
    hi_a = np.ascontiguousarray(hi, dtype=np.float64)
    if lo_a.shape[0] - 1 > MAXDEG:
        raise ValueError("polynomial degree too large for the compiled kernel")
    return lo_a, hi_a


def poly_lower(lo, hi, double a, double b, int mode=1):
    cdef double[::1] l, h
    lo_a, hi_a = _as_poly(lo, hi)
    l = lo_a
    h = hi_a
    return _poly_lower(&l[0], &h[0], l.shape[0] - 1, a, b, mode)


def poly_enclosure(lo, hi, double a, double b):
    cdef double[::1] l, h
    cdef double dlo[MAXDEG + 1]
    cdef double dhi[MAXDEG + 1]
    cdef double m = 0.5 * (a + b)
    cdef double r = _up(b - m)
    cdef double r2 = _up(m - a)
    cdef int n
    lo_a, hi_a = _as_poly(lo, hi)
    l = lo_a
    h = hi_a
    n = l.shape[0] - 1
    if r2 > r:
        r = r2
    _shift(&l[0], &h[0], n, m, dlo, dhi)
    return (_centered_interval_lo(dlo, dhi, n, r), _centered_interval_hi(dlo, dhi, n, r))


def poly_point(lo, hi, double x):
    cdef double[::1] l, h
    cdef double vlo, vhi
    lo_a, hi_a = _as_poly(lo, hi)
    l = lo_a
    h = hi_a
    _poly_point(&l[0], &h[0], l.shape[0] - 1, x, &vlo, &vhi)
    return (vlo, vhi)


def taylor_shift(lo, hi, double m):
    cdef double[::1] l, h
    cdef double dlo[MAXDEG + 1]
    cdef double dhi[MAXDEG + 1]
    cdef int n, j
    lo_a, hi_a = _as_poly(lo, hi)
    l = lo_a
    h = hi_a
    n = l.shape[0] - 1
    _shift(&l[0], &h[0], n, m, dlo, dhi)
    return [dlo[j] for j in range(n + 1)], [dhi[j] for j in range(n + 1)]


def sweep(coef_lo, coef_hi, double target, int max_depth=40, int mode=1):
    cdef double[:, ::1] L = np.ascontiguousarray(coef_lo, dtype=np.float64)
    cdef double[:, ::1] H = np.ascontiguousarray(coef_hi, dtype=np.float64)
    cdef int ncond = L.shape[0]
    cdef int n = L.shape[1] - 1
    cdef int c, depth, top, worst_c
    cdef double a, b, m, lb, worst, vlo, vhi
    cdef double x
    cdef int have_undecided = 0
    cdef double und_m = NAN, und_v = NAN
    cdef int und_c = -1
    if n > MAXDEG:
        raise ValueError("polynomial degree too large for the compiled kernel")

    for x in (0.0, 1.0):
        for c in range(ncond):
            _poly_point(&L[c, 0], &H[c, 0], n, x, &vlo, &vhi)
            if vhi < target:
                return REJECT, np.empty((0, 3)), (x, c, vhi)

    cap = 2 * max_depth + 8
    cdef cnp.ndarray[double, ndim=1] sa = np.empty(cap)
    cdef cnp.ndarray[double, ndim=1] sb = np.empty(cap)
    cdef cnp.ndarray[int, ndim=1] sd = np.empty(cap, dtype=np.intc)
    cells = []
    sa[0] = 0.0
    sb[0] = 1.0
    sd[0] = 0
    top = 1
    while top > 0:
        top -= 1
        a = sa[top]
        b = sb[top]
        depth = sd[top]
        worst = INFINITY
        worst_c = -1
        for c in range(ncond):
            lb = _poly_lower(&L[c, 0], &H[c, 0], n, a, b, mode)
            if lb < worst:
                worst = lb
                worst_c = c
        if worst >= target:
            cells.append((a, b, worst))
            continue
        m = 0.5 * (a + b)
        for c in range(ncond):
            _poly_point(&L[c, 0], &H[c, 0], n, m, &vlo, &vhi)
            if vhi < target:
                return REJECT, np.empty((0, 3)), (m, c, vhi)
        if depth >= max_depth:
            if not have_undecided:
                have_undecided = 1
                und_m = m
                und_c = worst_c
                und_v = worst
            continue
        sa[top] = m
        sb[top] = b
        sd[top] = depth + 1
        sa[top + 1] = a
        sb[top + 1] = m
        sd[top + 1] = depth + 1
        top += 2
    out = np.array(cells, dtype=np.float64).reshape(-1, 3)
    if have_undecided:
        return INCONCLUSIVE, out, (und_m, und_c, und_v)
    return ACCEPT, out, (NAN, -1, NAN)


def monotone_rhs(double[:, ::1] u, double hx, double hy, double p, double gamma, double eps):
    cdef Py_ssize_t nxp = u.shape[0], nyp = u.shape[1], i, j
    out_arr = np.zeros((nxp, nyp))
    cdef double[:, ::1] out = out_arr
    cdef double c, e, w, nn, s, ux, uy, uxx, uyy, axial, uxy, g2e, a11, a22, a12, coef
    cdef double hxy2 = 2.0 * hx * hy
    cdef double pm2 = p - 2.0
    cdef double half_gamma = 0.5 * gamma
    cdef double cmax = 0.0
    with nogil:
        for i in range(1, nxp - 1):
            for j in range(1, nyp - 1):
                c = u[i, j]
                e = u[i + 1, j]
                w = u[i - 1, j]
                nn = u[i, j + 1]
                s = u[i, j - 1]
                ux = (e - w) / (2.0 * hx)
                uy = (nn - s) / (2.0 * hy)
                uxx = (e - 2.0 * c + w) / (hx * hx)
                uyy = (nn - 2.0 * c + s) / (hy * hy)
                axial = e + w + nn + s
                g2e = ux * ux + uy * uy + eps
                a11 = 1.0 + pm2 * (ux * ux) / g2e
                a22 = 1.0 + pm2 * (uy * uy) / g2e
                a12 = pm2 * (ux * uy) / g2e
                if a12 >= 0.0:
                    uxy = (2.0 * c + u[i + 1, j + 1] + u[i - 1, j - 1] - axial) / hxy2
                else:
                    uxy = -(2.0 * c + u[i + 1, j - 1] + u[i - 1, j + 1] - axial) / hxy2
                coef = pow(g2e, half_gamma)
                if coef > cmax:
                    cmax = coef
                out[i, j] = coef * (a11 * uxx + a22 * uyy + 2.0 * a12 * uxy)
    return out_arr, cmax
