import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pparabolic import _kernels_py, kernels
from pparabolic.certifier.algebra import thm11_params
from pparabolic.certifier.certify import _stack, condition_polys
from pparabolic.certifier.interval import Interval, pbounds, pmul
from pparabolic.params import WeightRecipe

finite = st.floats(-1e6, 1e6, allow_nan=False)


@given(finite, finite, finite, finite)
def test_interval_ops_enclose_exact(a, b, c, d):
    x, y = Interval(min(a, b), max(a, b)), Interval(min(c, d), max(c, d))
    for op, fop in ((Interval.__add__, lambda u, v: u + v), (Interval.__sub__, lambda u, v: u - v),
                    (Interval.__mul__, lambda u, v: u * v)):
        z = op(x, y)
        for u in (x.lo, x.hi):
            for v in (y.lo, y.hi):
                exact = fop(Fraction(u), Fraction(v))
                assert Fraction(z.lo) <= exact <= Fraction(z.hi)


def test_interval_exact_zero_kept():
    z = Interval.point(0.0) * Interval(-3.0, 5.0)
    assert z.lo == 0.0 and z.hi == 0.0


def test_interval_sqrt_encloses():
    r = Interval.point(2.0).sqrt()
    assert Fraction(r.lo) ** 2 <= 2 <= Fraction(r.hi) ** 2
    assert r.hi - r.lo <= 3 * math.ulp(math.sqrt(2.0))


def test_poly_product_encloses():
    p = pmul([Interval.point(0.1), Interval.point(0.3)], [Interval.point(0.7), Interval.point(-0.2)])
    lo, hi = pbounds(p)
    exact = [Fraction(0.1) * Fraction(0.7), Fraction(0.1) * Fraction(-0.2) + Fraction(0.3) * Fraction(0.7),
             Fraction(0.3) * Fraction(-0.2)]
    assert all(Fraction(l) <= e <= Fraction(h) for l, e, h in zip(lo, exact, hi))


def _cases():
    out = []
    for p, g in [(3.0, 0.0), (17.5, 0.45), (40.0, -0.95), (100.0, 0.5)]:
        out.append(_stack(condition_polys(WeightRecipe.thm11(p, g), thm11_params(p, g))))
    return out


@pytest.mark.parametrize("mode", [kernels.MODE_LIPSCHITZ, kernels.MODE_INTERVAL])
def test_sweep_matches_reference(mode):
    for lo, hi in _cases():
        v1, c1, w1 = kernels.sweep(lo, hi, 1e-4, 40, mode)
        v2, c2, w2 = _kernels_py.sweep(lo, hi, 1e-4, 40, mode)
        assert v1 == v2
        assert np.array_equal(np.asarray(c1), np.asarray(c2))
        assert np.array_equal(np.asarray(w1, float), np.asarray(w2, float), equal_nan=True)


def test_backends_agree():
    try:
        cy = kernels.backend_module("compiled")
    except ImportError:
        pytest.skip("compiled backend not built")
    py = kernels.backend_module("python")
    for lo, hi in _cases():
        for mode in (kernels.MODE_LIPSCHITZ, kernels.MODE_INTERVAL):
            a, b = cy.sweep(lo, hi, 1e-4, 40, mode), py.sweep(lo, hi, 1e-4, 40, mode)
            assert a[0] == b[0] and np.array_equal(np.asarray(a[1]), np.asarray(b[1])) \
                and np.array_equal(np.asarray(a[2], float), np.asarray(b[2], float), equal_nan=True)
        for a_, b_ in [(0.0, 1.0), (0.25, 0.375)]:
            assert tuple(cy.poly_enclosure(lo[2], hi[2], a_, b_)) == tuple(py.poly_enclosure(lo[2], hi[2], a_, b_))
            for m in (kernels.MODE_LIPSCHITZ, kernels.MODE_INTERVAL):
                assert cy.poly_lower(lo[2], hi[2], a_, b_, m) == py.poly_lower(lo[2], hi[2], a_, b_, m)
        assert tuple(cy.poly_point(lo[2], hi[2], 0.3)) == tuple(py.poly_point(lo[2], hi[2], 0.3))
    rng = np.random.default_rng(3)
    u = rng.standard_normal((33, 29))
    for p, g, e in [(3.0, 0.0, 1e-2), (4.0, -0.5, 1e-4), (2.0, 0.0, 1e-3), (6.0, 0.7, 1e-3)]:
        r1, m1 = cy.monotone_rhs(u, 0.1, 0.12, p, g, e)
        r2, m2 = py.monotone_rhs(u, 0.1, 0.12, p, g, e)
        assert np.allclose(r1, r2, rtol=1e-13, atol=1e-13) and m1 == pytest.approx(m2, rel=1e-13)


def test_backend_selection():
    assert kernels.BACKEND in ("compiled", "python")
    assert kernels.backend_module("python") is _kernels_py
    with pytest.raises(ValueError):
        kernels.backend_module("fortran")


@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0))
def test_poly_lower_is_lower_bound(a, b):
    a, b = min(a, b), max(a, b)
    lo, hi = _cases()[1]
    xs = np.linspace(a, b, 33)
    vals = [np.polynomial.polynomial.polyval(x, 0.5 * (lo[2] + hi[2])) for x in xs]
    for mode in (kernels.MODE_LIPSCHITZ, kernels.MODE_INTERVAL):
        assert kernels.poly_lower(lo[2], hi[2], a, b, mode) <= min(vals) + 1e-9 * max(1.0, abs(min(vals)))


def test_monotone_rhs_linear_and_heat():
    x = np.linspace(0.0, 1.0, 17)
    X, Y = np.meshgrid(x, x, indexing="ij")
    h = x[1] - x[0]
    r, _ = kernels.monotone_rhs(np.ascontiguousarray(2 * X - Y), h, h, 3.0, 0.5, 1e-2)
    assert np.max(np.abs(r)) <= 1e-12
    r, cmax = kernels.monotone_rhs(np.ascontiguousarray(X * X + Y * Y), h, h, 2.0, 0.0, 1e-2)
    assert np.allclose(r[1:-1, 1:-1], 4.0, atol=1e-11) and cmax == 1.0
    assert np.all(r[0] == 0.0) and np.all(r[:, -1] == 0.0)
