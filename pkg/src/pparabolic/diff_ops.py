"""Finite-difference derivatives and the pointwise second-order quantities built from them."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .params import Grid2D, ParamSet, ParamsError, SymMatrixField2, VectorField2

THETA_FLOOR = 1e-12


def _check(u: np.ndarray, g: Grid2D) -> np.ndarray:
    u = np.asarray(u, dtype=np.float64)
    if u.shape != g.shape:
        raise ValueError(f"field shape {u.shape} does not match grid {g.shape}")
    if min(u.shape) < 4:
        raise ValueError("need at least 4 nodes per axis")
    return u


def d_dx(u, g: Grid2D):
    return np.gradient(u, g.hx, axis=0, edge_order=2)


def d_dy(u, g: Grid2D):
    return np.gradient(u, g.hy, axis=1, edge_order=2)


def gradient(u, g: Grid2D) -> VectorField2:
    """Central differences inside, second-order one-sided differences on the boundary."""
    u = _check(u, g)
    return VectorField2(d_dx(u, g), d_dy(u, g))


def _second(u, h, axis):
    v = np.moveaxis(u, axis, 0)
    out = np.empty_like(v)
    out[1:-1] = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)
    out[0] = (2.0 * v[0] - 5.0 * v[1] + 4.0 * v[2] - v[3]) / (h * h)
    out[-1] = (2.0 * v[-1] - 5.0 * v[-2] + 4.0 * v[-3] - v[-4]) / (h * h)
    return np.moveaxis(out, 0, axis)


def hessian(u, g: Grid2D) -> SymMatrixField2:
    """Three-point second differences and the centered four-point cross stencil for ``u_xy``."""
    u = _check(u, g)
    return SymMatrixField2(_second(u, g.hx, 0), d_dx(d_dy(u, g), g), _second(u, g.hy, 1))


def divergence(v: VectorField2, g: Grid2D) -> np.ndarray:
    """Discrete divergence built from the same first-derivative stencil as :func:`gradient`."""
    return d_dx(v.x, g) + d_dy(v.y, g)


def third_derivative_proxy(u, g: Grid2D) -> np.ndarray:
    """Pointwise size of third differences, ``max`` over the four pure/mixed components."""
    H = hessian(u, g)
    comps = [d_dx(H.xx, g), d_dy(H.yy, g), d_dy(H.xx, g), d_dx(H.yy, g)]
    return np.max(np.abs(np.stack(comps)), axis=0)


@dataclass
class DerivedFields:
    grad: VectorField2
    hess: SymMatrixField2
    lap: np.ndarray
    inf_lap: np.ndarray
    norm_inf_lap_reg: np.ndarray       # inf_lap / (|Du|^2 + eps)
    grad_norm: np.ndarray
    grad_of_norm_sq_reg: np.ndarray    # |D^2u Du|^2 / (|Du|^2 + eps)
    dT_norm_sq: np.ndarray
    lap_T: np.ndarray
    theta: np.ndarray
    kappa: np.ndarray
    norm_inf_lap: np.ndarray           # inf_lap / |Du|^2 where defined, else 0
    defined: np.ndarray                # theta > THETA_FLOOR
    grad_modulus_sq: np.ndarray        # |D sqrt(|Du|^2 + eps)|^2 from differencing the modulus
    epsilon: float

    @property
    def g2e(self) -> np.ndarray:
        return self.grad.x**2 + self.grad.y**2 + self.epsilon

    @property
    def sweep(self) -> tuple[np.ndarray, np.ndarray]:
        return self.theta, self.kappa

    CSV_COLUMNS = ("grad_x", "grad_y", "hess_xx", "hess_xy", "hess_yy", "lap", "inf_lap",
                   "norm_inf_lap_reg", "grad_norm", "grad_of_norm_sq_reg", "dT_norm_sq", "lap_T",
                   "theta", "kappa")

    def column(self, name: str) -> np.ndarray:
        if name.startswith("grad_") and name[5:] in ("x", "y"):
            return getattr(self.grad, name[5:])
        if name.startswith("hess_"):
            return getattr(self.hess, name[5:])
        return getattr(self, name)

    def write_csv(self, path, g: Grid2D) -> None:
        X, Y = g.mesh()
        cols = [self.column(c).ravel() for c in self.CSV_COLUMNS]
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(("x", "y") + self.CSV_COLUMNS)
            for row in zip(X.ravel(), Y.ravel(), *cols):
                wr.writerow([repr(float(v)) for v in row])


def from_derivatives(ux, uy, uxx, uxy, uyy, epsilon: float, grad_modulus_sq=None) -> DerivedFields:
    """Assemble :class:`DerivedFields` from given first and second derivatives.

    ``grad_modulus_sq`` defaults to the exact value ``|D^2u Du|^2 / (|Du|^2 + eps)``.
    """
    if not epsilon > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={epsilon})")
    ux, uy, uxx, uxy, uyy = (np.asarray(a, dtype=np.float64) for a in (ux, uy, uxx, uxy, uyy))
    grad2 = ux * ux + uy * uy
    g2e = grad2 + epsilon
    hx_, hy_ = uxx * ux + uxy * uy, uxy * ux + uyy * uy     # D^2u Du
    lap = uxx + uyy
    inf_lap = ux * hx_ + uy * hy_
    R = inf_lap / g2e
    G = (hx_ * hx_ + hy_ * hy_) / g2e
    theta = grad2 / g2e
    kappa = epsilon / g2e
    defined = theta > THETA_FLOOR
    safe_theta = np.where(defined, theta, 1.0)
    norm_inf = np.where(defined, R / safe_theta, 0.0)
    # 2-D Lagrange identity: |a|^2|b|^2 - <a,b>^2 = (a x b)^2 keeps this >= 0 exactly
    cross = ux * hy_ - uy * hx_
    dT = np.where(defined, cross * cross / (g2e * g2e * safe_theta * safe_theta), 0.0)
    lap_T = np.where(defined, lap - norm_inf, lap - R)
    gm = G if grad_modulus_sq is None else np.asarray(grad_modulus_sq, dtype=np.float64)
    return DerivedFields(
        grad=VectorField2(ux, uy),
        hess=SymMatrixField2(uxx, uxy, uyy),
        lap=lap,
        inf_lap=inf_lap,
        norm_inf_lap_reg=R,
        grad_norm=np.sqrt(grad2),
        grad_of_norm_sq_reg=G,
        dT_norm_sq=dT,
        lap_T=lap_T,
        theta=theta,
        kappa=kappa,
        norm_inf_lap=norm_inf,
        defined=defined,
        grad_modulus_sq=gm,
        epsilon=float(epsilon),
    )


def derive_all(u, g: Grid2D, params: ParamSet) -> DerivedFields:
    """All pointwise quantities of ``u`` from the grid stencils, regularized by ``params.epsilon``."""
    if not params.epsilon > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={params.epsilon})")
    u = _check(u, g)
    D = gradient(u, g)
    H = hessian(u, g)
    modulus = np.sqrt(D.x**2 + D.y**2 + params.epsilon)
    Dm = gradient(modulus, g)
    return from_derivatives(D.x, D.y, H.xx, H.xy, H.yy, params.epsilon, Dm.x**2 + Dm.y**2)
