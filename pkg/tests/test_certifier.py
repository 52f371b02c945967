import math

import numpy as np
import pytest

from pparabolic.certifier.algebra import (INADMISSIBLE, OPTIMAL_BRANCH, SECOND_BRANCH, admissible_s,
                                          assemble_matrix, c_coefficients, c_from_kappa, conditions, det_diagnostics,
                                          det_f, extremal_bounds, f_gamma, f_gamma_slope, inf_w1_plus,
                                          matrix_from_kappa, restriction_s, select_weights_general_s, sup_w1_minus,
                                          thm11_params, w1_bounds)
from pparabolic.certifier.certify import certify, certify_thm11
from pparabolic.certifier.scan import (certify_gamma_minus_one_slice, certify_gamma_one_slice, landscape,
                                       monotonicity_check, scan_region, write_gnuplot_matrix)
from pparabolic.params import ParamSet, ParamsError, SweepPoint, WeightRecipe

SQ2 = math.sqrt(2.0)


# --- coefficients and matrix ---------------------------------------------------

def test_c_coefficients_kappa0():
    w = WeightRecipe.thm11(3.0, 0.0)
    c = c_coefficients(w, thm11_params(3.0, 0.0), SweepPoint.from_kappa(0.0, 3.0, 0.0, -1.0))
    assert tuple(c) == (3.0, 0.0, 2.0, 0.0)


@pytest.mark.parametrize("p,g", [(3.0, 0.0), (12.0, 0.7), (40.0, -0.9)])
def test_two_c1_plus_c2_closed_form(p, g):
    k = np.linspace(0.0, 1.0, 101)
    w = WeightRecipe.thm11(p, g)
    c1, c2, _, _ = c_from_kappa(w.as_tuple(), p, g, 2.0 - p, k)
    np.testing.assert_allclose(2 * c1 + c2, 2 * (w.w1 + w.w3 * k * k), rtol=1e-13, atol=1e-12)


def test_theta_factor_vanishes_at_kappa1(rng):
    for _ in range(20):
        w = tuple(rng.normal(size=4))
        c1, c2, c3, c4 = c_from_kappa(w, 5.0, 0.3, -1.2, 1.0)
        assert c2 == 0.0 and c4 == 0.0


def test_matrix_kappa0_p3():
    M = matrix_from_kappa(WeightRecipe.thm11(3.0, 0.0).as_tuple(), 3.0, 0.0, -1.0, 0.0)
    assert (M.m11, M.m12, M.m22) == (2.0, 0.0, 4.0)
    assert M.det() == 8.0 and det_f(0.0, 3.0, 0.0) == 8.0


def test_det_kappa1():
    M = matrix_from_kappa(WeightRecipe.thm11(7.0, 0.0).as_tuple(), 7.0, 0.0, -5.0, 1.0)
    assert M.det() == pytest.approx(4 * SQ2 - 1.0, rel=1e-14)
    assert det_f(1.0, 7.0, 0.0) == pytest.approx(4 * SQ2 - 1.0, rel=1e-14)


def test_zero_weights_zero_matrix():
    c = c_coefficients(WeightRecipe(0.0, 0.0), ParamSet(3.0, 0.0), SweepPoint.from_kappa(0.3, 3.0, 0.0))
    M = assemble_matrix(c, SweepPoint.from_kappa(0.3, 3.0, 0.0))
    assert (M.m11, M.m12, M.m22, M.det()) == (0.0, 0.0, 0.0, 0.0)


def test_det_f_matches_matrix_det(rng):
    n = 100_000
    k = rng.uniform(0.0, 1.0, n)
    p = rng.uniform(3.0, 40.0, n)
    g = rng.uniform(-0.99, 0.99, n)
    w = (p - g, 2.0, 1.0 - p, 2.0 * (SQ2 - 1.0))
    M = matrix_from_kappa(w, p, g, 2.0 - p, k)
    via_matrix = M.det()
    closed = det_f(k, p, g)
    # compare on the scale of the products being subtracted
    scale = np.abs(M.m11 * M.m22) + M.m12**2
    assert np.max(np.abs(closed - via_matrix) / scale) <= 1e-12


def test_f_gamma_is_derivative(rng):
    k = rng.uniform(0.0, 1.0, 1000)
    p = rng.uniform(3.0, 40.0, 1000)
    g = rng.uniform(-0.9, 0.9, 1000)
    h = 1e-6
    fd = (det_f(k, p, g + h) - det_f(k, p, g - h)) / (2 * h)
    np.testing.assert_allclose(f_gamma(k, p, g), fd, rtol=1e-6, atol=1e-6)
    np.testing.assert_allclose(f_gamma(k, p, g), f_gamma_slope(k) * g + f_gamma(k, p, 0.0), rtol=1e-11, atol=1e-9)


def test_det_diagnostics_kappa0():
    d = det_diagnostics(0.0, 9.0, 0.4)
    assert d.f_value == pytest.approx(4 * 0.6 * 8)
    assert d.A == 0.0 and d.B == pytest.approx(-4 * 8)


# --- root window ---------------------------------------------------------------

def test_w1_bounds_examples():
    lo, hi = w1_bounds(1.0, ParamSet(3.0, 0.0, s=0.0))
    assert lo == pytest.approx(0.0, abs=1e-15) and hi == pytest.approx(8.0)
    lo, hi = w1_bounds(0.0, ParamSet(6.0, 0.3, s=-1.0))
    assert lo == 0.0 and hi == pytest.approx(2 * 5.0)
    with pytest.raises(ParamsError):
        w1_bounds(0.5, ParamSet(3.0, 0.0, s=-2.5))


def test_window_examples():
    ra = extremal_bounds(ParamSet(3.0, 0.0, s=0.0))
    assert ra.window == (0.0, 6.0)
    assert ra.max_rel_mismatch <= 1e-8
    ra = extremal_bounds(ParamSet(10.0, 0.0, s=-3.0))
    assert ra.nonempty
    assert restriction_s(10.0, 0.0, -3.0)
    assert (3.0 - math.sqrt(6.0)) ** 2 == pytest.approx(0.303, abs=1e-3)


def test_w1_minus_constant_when_s_equals_gamma():
    ra = extremal_bounds(ParamSet(5.0, 0.4, s=0.4))
    th = np.linspace(0.0, 1.0, 51)
    assert np.ptp(ra.w1_minus(th)) <= 1e-13


def test_root_window_sign_equivalence(rng):
    bad = 0
    n = 0
    while n < 10_000:
        p = rng.uniform(1.2, 30.0)
        g = rng.uniform(-0.95, 0.95)
        s = rng.uniform(g + 1.0 - p, 5.0)
        if s <= g + 1.0 - p + 1e-6 or s == g - p:
            continue
        th = rng.uniform(0.0, 1.0)
        lo, hi = w1_bounds(th, ParamSet(p, g, s=s))
        w1 = rng.uniform(-1.0, float(hi) * 1.3 + 1.0)
        if min(abs(w1 - lo), abs(w1 - hi)) <= 1e-9 * max(1.0, abs(hi)):
            continue
        det = matrix_from_kappa((w1, p + s, 0.0, 0.0), p, g, s, 1.0 - th).det()
        bad += (det > 0) != (lo < w1 < hi)
        n += 1
    assert bad == 0


# --- branches --------------------------------------------------------------------

def test_branch_examples():
    assert admissible_s(2.0, 0.0, 0.0) == OPTIMAL_BRANCH
    assert admissible_s(10.0, 0.0, -3.0) == SECOND_BRANCH
    assert admissible_s(10.0, 0.0, -8.0) == INADMISSIBLE


def test_branch_implies_restriction(rng):
    disagree = 0
    for _ in range(100_000):
        p = rng.uniform(1.01, 50.0)
        g = rng.uniform(-0.99, 5.0)
        s = rng.uniform(g + 1.0 - p, 10.0)
        if not s > g + 1.0 - p:
            continue
        disagree += (admissible_s(p, g, s) != INADMISSIBLE) != restriction_s(p, g, s)
    assert disagree == 0


def test_select_weights_examples():
    w = select_weights_general_s(3.0, 0.0, 0.0)
    assert w.eta == 0.5 and w.w1 == 0.5 and w.w2 == 3.0
    w = select_weights_general_s(2.0, 0.0, 0.0)
    assert w.w1 == pytest.approx(w.eta) and w.w2 == 2.0
    assert certify(w, ParamSet(2.0, 0.0, s=0.0), 1e-10).verdict == "accept"
    with pytest.raises(ParamsError):
        select_weights_general_s(10.0, 0.0, -8.0)
    with pytest.raises(ParamsError, match="excluded"):
        select_weights_general_s(3.0, 0.0, -3.0)


def test_general_s_second_branch_accepts():
    w = select_weights_general_s(10.0, 0.0, -3.0)
    assert certify(w, ParamSet(10.0, 0.0, s=-3.0), 1e-10).verdict == "accept"


# --- certify ---------------------------------------------------------------------

def test_certify_accepts_p3():
    cert = certify_thm11(3.0, 0.0, 1e-3)
    assert cert.verdict == "accept" and cert.exit_code == 0
    assert cert.margin_c >= 1e-3 and cert.covers_unit_interval()
    assert cert.witness is None


def test_certify_gamma_one_not_accepted():
    cert = certify(WeightRecipe.thm11(3.0, 1.0), ParamSet(3.0, 1.0, s=-1.0), 1e-4)
    assert cert.verdict in ("reject", "inconclusive")
    assert cert.witness["kappa"] == 0.0 or cert.margin_c < 1e-4


def test_certify_large_p_rejects_with_witness():
    cert = certify_thm11(100.0, 0.5, 1e-4)
    assert cert.verdict == "reject" and cert.exit_code == 1
    w = cert.witness
    assert w["condition"] == "det" and w["value"] < 0 and w["bound"] == "upper"
    det = conditions(WeightRecipe.thm11(100.0, 0.5).as_tuple(), 100.0, 0.5, -98.0, w["kappa"])[2]
    assert det <= w["value"] + 1e-9 * abs(w["value"])


@pytest.mark.parametrize("method", ["lipschitz_sweep", "interval_sweep"])
@pytest.mark.parametrize("p,g", [(3.0, 0.0), (3.0, -0.95), (21.5, 0.6), (40.0, 0.95), (40.0, -0.95)])
def test_certificate_soundness(p, g, method):
    cert = certify_thm11(p, g, 1e-4, method=method)
    assert cert.verdict == "accept"
    k = np.linspace(0.0, 1.0, 1_000_001)
    vals = np.min(np.stack(conditions(WeightRecipe.thm11(p, g).as_tuple(), p, g, 2.0 - p, k)), axis=0)
    assert vals.min() >= cert.margin_c - 1e-12 * max(1.0, abs(vals).max())
    for a, b, lb in cert.cells:
        inside = (k >= a) & (k <= b)
        assert vals[inside].min() >= lb - 1e-12 * max(1.0, abs(vals).max())


def test_certify_input_errors():
    w, ps = WeightRecipe.thm11(3.0, 0.0), thm11_params(3.0, 0.0)
    with pytest.raises(ValueError):
        certify(w, ps, 0.0)
    with pytest.raises(ValueError):
        certify(w, ps, 1e-4, method="bogus")
    with pytest.raises(ValueError):
        certify(WeightRecipe(math.inf, 1.0), ps)


def test_certificate_json():
    import json

    d = json.loads(certify_thm11(5.0, 0.2).to_json())
    assert d["verdict"] == "accept" and d["params"]["s"] == -3.0
    assert d["cells"][0][0] == 0.0 and d["cells"][-1][1] == 1.0
    assert "lambda" in d["lambda_note"]


# --- scan --------------------------------------------------------------------------

def test_scan_empty_range():
    assert scan_region((5.0, 3.0), (0.0, 0.5)).empty
    assert scan_region((3.0, 5.0), (0.0, 0.5), resolution=(0, 3)).empty


def test_scan_small_grid(tmp_path):
    rm = scan_region((3.0, 40.0), (-0.95, 0.95), resolution=(4, 3))
    assert rm.all_accept()
    rm.write_csv(tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines()
    assert lines[0] == "p,gamma,kappa_min_location,min_value,verdict" and len(lines) == 13


def test_scan_workers_deterministic():
    a = scan_region((3.0, 10.0), (-0.5, 0.5), resolution=(3, 3), workers=1)
    b = scan_region((3.0, 10.0), (-0.5, 0.5), resolution=(3, 3), workers=2)
    assert list(a.rows()) == list(b.rows())


def test_scan_general_s_policy():
    rm = scan_region((3.0, 6.0), (0.0, 0.5), s_policy=0.0, resolution=(2, 2))
    assert rm.all_accept()
    rm = scan_region((10.0, 10.0), (0.0, 0.0), s_policy=-8.0, resolution=(1, 1))
    assert rm.verdict[0, 0] == "inadmissible"


def test_slices_short_range():
    assert certify_gamma_one_slice((3.0, 6.0)).verdict == "accept"
    assert certify_gamma_minus_one_slice((3.0, 6.0)).verdict == "accept"


def test_gamma_one_slice_fails_beyond_40():
    cert = certify_gamma_one_slice((40.0, 42.0))
    assert cert.verdict != "accept"


def test_monotonicity_in_gamma():
    assert monotonicity_check(np.linspace(3.0, 40.0, 8), np.linspace(-0.95, 1.0, 9))["holds"]


def test_landscapes(tmp_path):
    ps = np.linspace(3.0, 40.0, 12)
    ks = np.linspace(0.0, 1.0, 21)
    assert landscape("f", 1.0, ps, ks).min() >= -1e-12
    assert landscape("f_gamma", -1.0, ps, ks).max() <= 0.0
    with pytest.raises(ValueError):
        landscape("g", 1.0, ps, ks)
    write_gnuplot_matrix(tmp_path / "m.dat", ks, ps, landscape("f", 1.0, ps, ks))
    rows = (tmp_path / "m.dat").read_text().splitlines()
    assert rows[0].split()[0] == "21" and len(rows) == 13
