import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pparabolic.params import (Grid2D, ParabolicCylinder, ParamSet, ParamsError, SweepPoint, WeightRecipe,
                               read_field, validate_params, write_field)


def test_paramset_invariants():
    with pytest.raises(ParamsError, match="p > 1"):
        ParamSet(p=1.0, gamma=0.0)
    with pytest.raises(ParamsError, match="gamma > -1"):
        ParamSet(p=3.0, gamma=-1.0)
    with pytest.raises(ParamsError, match="epsilon >= 0"):
        ParamSet(p=3.0, gamma=0.0, epsilon=-1e-3)
    with pytest.raises(ParamsError, match="finite"):
        ParamSet(p=math.nan, gamma=0.0)


def test_paramset_json_round_trip():
    ps = ParamSet(p=3.5, gamma=-0.25, s=-1.5, epsilon=1e-3)
    assert ParamSet.from_json(ps.to_json()) == ps
    assert ps.replace(epsilon=0.0).epsilon == 0.0


def test_validate_thm11_range():
    assert validate_params(ParamSet(3.0, 0.0), "thm11").p == 3.0
    assert validate_params(ParamSet(40.0, 0.5), "thm11").p == 40.0
    with pytest.raises(ParamsError, match="p <= 40"):
        validate_params(ParamSet(41.0, 0.0), "thm11")
    with pytest.raises(ParamsError, match="3 <= p"):
        validate_params(ParamSet(2.5, 0.0), "thm11")
    with pytest.raises(ParamsError, match="gamma < 1"):
        validate_params(ParamSet(3.0, 1.0), "thm11")


def test_validate_general_s():
    assert validate_params(ParamSet(2.0, 0.0, s=0.0), "general_s").s == 0.0
    with pytest.raises(ParamsError, match="excluded case"):
        validate_params(ParamSet(3.0, 0.0, s=-3.0), "general_s")
    with pytest.raises(ParamsError):
        validate_params(ParamSet(10.0, 0.0, s=-8.0), "general_s")


def test_validate_solver_needs_epsilon():
    with pytest.raises(ParamsError, match="epsilon > 0"):
        validate_params(ParamSet(3.0, 0.0), "solver")
    with pytest.raises(ParamsError, match="unknown purpose"):
        validate_params(ParamSet(3.0, 0.0), "nope")


def test_thm11_weights_exact():
    w = WeightRecipe.thm11(7.0, 0.25)
    assert w.as_tuple() == (6.75, 2.0, -6.0, 2.0 * (math.sqrt(2.0) - 1.0))
    assert w.a == 0.75 and w.b == 2.0 * math.sqrt(2.0)
    assert WeightRecipe.from_dict(w.to_dict()) == w


def test_sweep_point_endpoints():
    p, g, s = 5.0, 0.3, -1.0
    one = SweepPoint.from_theta(1.0, p, g, s)
    assert one.P_theta == p - 1.0 and one.kappa == 0.0
    zero = SweepPoint.from_kappa(1.0, p, g, s)
    assert zero.theta == 0.0
    assert (zero.P_theta, zero.S_theta, zero.K_theta) == (1.0, 1.0, 1.0)
    with pytest.raises(ParamsError):
        SweepPoint.from_kappa(1.5, p, g, s)


@given(st.floats(0.0, 1.0), st.floats(1.01, 50.0), st.floats(-0.99, 0.99))
def test_sweep_point_positive(kappa, p, g):
    pt = SweepPoint.from_kappa(kappa, p, g)
    assert pt.theta + pt.kappa == 1.0 or abs(pt.theta + pt.kappa - 1.0) <= 1e-16
    assert pt.P_theta > 0 and pt.K_theta > 0


def test_grid_geometry():
    g = Grid2D.from_extent(0.0, 2.0, -1.0, 1.0, 8)
    assert g.shape == (9, 9)
    assert g.extent == (0.0, 2.0, -1.0, 1.0)
    X, Y = g.mesh()
    assert X[8, 0] == 2.0 and Y[0, 8] == 1.0
    assert g.interior_mask(2).sum() == 5 * 5
    assert g.boundary_mask().sum() == 81 - 49
    assert g.refine().shape == (17, 17)
    with pytest.raises(ParamsError):
        Grid2D(2, 5, 0.1, 0.1)


def test_cylinder_fits():
    g = Grid2D.from_extent(0.0, 1.0, 0.0, 1.0, 20)
    c = ParabolicCylinder((0.5, 0.5), 0.1, 0.2)
    assert c.t1 == pytest.approx(0.14)
    assert c.fits(g, 0.0, 1.0, margin_nodes=2)
    assert not c.scaled(2.6).fits(g, 0.0, 1.0)
    assert not c.fits(g, 0.0, 0.12)


@pytest.mark.parametrize("suffix", [".ppf", ".csv"])
def test_field_round_trip_lossless(tmp_path, rng, suffix):
    g = Grid2D(7, 5, 0.1, 0.3, (-1.0, 2.0))
    vals = rng.standard_normal((3, *g.shape)) * 1e3
    times = np.array([0.0, 0.1, 1.0 / 3.0])
    write_field(tmp_path / f"f{suffix}", g, vals, times)
    g2, v2, t2 = read_field(tmp_path / f"f{suffix}")
    assert g2 == g
    assert np.array_equal(v2, vals) and np.array_equal(t2, times)


def test_field_single_slice(tmp_path):
    g = Grid2D(3, 3, 1.0, 1.0)
    write_field(tmp_path / "one.ppf", g, np.arange(16.0).reshape(4, 4))
    _, v, t = read_field(tmp_path / "one.ppf")
    assert v.shape == (1, 4, 4) and t.tolist() == [0.0]
    with pytest.raises(ValueError):
        write_field(tmp_path / "bad.ppf", g, np.zeros((3, 3)))


@settings(max_examples=25, deadline=None)
@given(st.integers(3, 12), st.integers(3, 12), st.floats(1e-3, 10.0), st.floats(1e-3, 10.0))
def test_field_round_trip_property(tmp_path_factory, nx, ny, hx, hy):
    g = Grid2D(nx, ny, hx, hy, (0.5, -0.25))
    vals = np.linspace(-1.0, 1.0, g.shape[0] * g.shape[1]).reshape(g.shape) / 3.0
    path = tmp_path_factory.mktemp("rt") / "f.ppf"
    write_field(path, g, vals)
    g2, v2, _ = read_field(path)
    assert g2 == g and np.array_equal(v2[0], vals)
