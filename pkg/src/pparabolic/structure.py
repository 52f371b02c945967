"""Residuals of the pointwise identities: fundamental equality, both divergence structures, the weighted sum."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .certifier.algebra import c_from_kappa
from .diff_ops import DerivedFields, d_dx, d_dy, derive_all, divergence
from .params import Grid2D, ParamSet, ParamsError, VectorField2, WeightRecipe
from .presets import get_preset

# divergences next to the boundary consume one-sided second differences, so norms skip two rings
COLLAR = 2


# --- fundamental equality ------------------------------------------------------

def fundamental_equality_residual(d: DerivedFields) -> np.ndarray:
    """``|D^2u|^2 - 2|D_T|Du||^2 - (Delta_T u)^2 - (Delta_inf^N u)^2``, multiplied through by ``theta^2``.

    ``theta |D|Du||^2`` is taken from differencing the modulus ``sqrt(|Du|^2 + eps)``
    (``d.grad_modulus_sq``), an independent route to the same quantity, so the
    residual measures discretization error and stays finite where ``Du = 0``.
    """
    th = d.theta
    R = d.norm_inf_lap_reg
    return (th * th * d.hess.frob_sq()
            - 2.0 * (th * d.grad_modulus_sq - R * R)
            - (th * d.lap - R) ** 2
            - R * R)


def fundamental_equality_mismatch(d: DerivedFields) -> np.ndarray:
    """The same identity with every normalized quantity replaced by its regularized quotient.

    Nonzero for ``eps > 0``; bounded by a constant times ``kappa |D^2u|^2``.
    """
    R = d.norm_inf_lap_reg
    return d.hess.frob_sq() - 2.0 * (d.grad_of_norm_sq_reg - R * R) - (d.lap - R) ** 2 - R * R


# --- divergence structure 1 ----------------------------------------------------

def gd1_flux(d: DerivedFields, alpha: float, eps: float) -> VectorField2:
    w = (d.grad.x**2 + d.grad.y**2 + eps) ** (0.5 * alpha)
    Hdu = d.hess.apply(d.grad)
    return VectorField2(w * (Hdu.x - d.lap * d.grad.x), w * (Hdu.y - d.lap * d.grad.y))


def gd1_lhs(d: DerivedFields, alpha: float, eps: float) -> np.ndarray:
    g2e = d.grad.x**2 + d.grad.y**2 + eps
    Hdu = d.hess.apply(d.grad)
    G = (Hdu.x**2 + Hdu.y**2) / g2e
    R = (d.grad.x * Hdu.x + d.grad.y * Hdu.y) / g2e
    return g2e ** (0.5 * alpha) * (d.hess.frob_sq() - d.lap**2 + alpha * (G - d.lap * R))


def gd1_residual(d: DerivedFields, alpha: float, g: Grid2D, eps: float) -> np.ndarray:
    """Pointwise form minus the discrete divergence of its flux."""
    if not eps > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={eps})")
    return gd1_lhs(d, alpha, eps) - divergence(gd1_flux(d, alpha, eps), g)


# --- divergence structure 2 ----------------------------------------------------

def time_derivative_mid(slices, times):
    """Three-point derivative at the middle of three (possibly unevenly spaced) slices."""
    u0, u1, u2 = slices
    t0, t1, t2 = times
    h1, h2 = t1 - t0, t2 - t1
    return (-h2 / (h1 * (h1 + h2))) * u0 + ((h2 - h1) / (h1 * h2)) * u1 + (h1 / (h2 * (h1 + h2))) * u2


def _grad_sq(u, g):
    return d_dx(u, g) ** 2 + d_dy(u, g) ** 2


def _time_term(slices, times, beta, g, eps, branch):
    if branch == "log":
        vals = [0.5 * np.log(_grad_sq(u, g) + eps) for u in slices]
    else:
        vals = [(_grad_sq(u, g) + eps) ** (0.5 * (beta + 2.0)) / (beta + 2.0) for u in slices]
    return time_derivative_mid(vals, times)


def _branch(beta, branch):
    auto = "log" if beta == -2.0 else "power"
    if branch is None:
        return auto
    if branch != auto:
        raise ParamsError(f"branch {branch!r} does not apply to beta={beta}; use {auto!r}")
    return branch


def gd2_parts(u_slices, beta, g: Grid2D, eps, times=(-1.0, 0.0, 1.0), branch=None):
    """``(u_t div(V Du), div(u_t V Du), time term)`` at the middle slice, ``V = (|Du|^2+eps)^(beta/2)``."""
    if not eps > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={eps})")
    branch = _branch(beta, branch)
    u = np.asarray(u_slices[1], dtype=np.float64)
    ux, uy = d_dx(u, g), d_dy(u, g)
    V = (ux * ux + uy * uy + eps) ** (0.5 * beta)
    ut = time_derivative_mid(u_slices, times)
    lhs = ut * divergence(VectorField2(V * ux, V * uy), g)
    flux_div = divergence(VectorField2(ut * V * ux, ut * V * uy), g)
    return lhs, flux_div, _time_term(u_slices, times, beta, g, eps, branch)


def gd2_residual(u_slices, beta: float, g: Grid2D, eps: float, times=(-1.0, 0.0, 1.0), branch=None) -> np.ndarray:
    """``u_t div(V Du) - [div(u_t V Du) - time term]`` at the middle slice."""
    lhs, flux_div, tt = gd2_parts(u_slices, beta, g, eps, times, branch)
    return lhs - (flux_div - tt)


# --- norms and reports ---------------------------------------------------------

def residual_norms(res: np.ndarray, g: Grid2D, mask: np.ndarray | None = None) -> tuple[float, float]:
    """``(max |res|, discrete L2 norm)`` over ``mask`` (default: interior without the collar)."""
    m = g.interior_mask(COLLAR) if mask is None else mask
    vals = res[m]
    if vals.size == 0:
        return math.nan, math.nan
    return float(np.max(np.abs(vals))), float(math.sqrt(math.fsum((vals * vals).ravel()) * g.hx * g.hy))


def observed_orders(errors, ratio=2.0) -> list[float]:
    return [math.log(a / b) / math.log(ratio) if a > 0 and b > 0 else math.nan
            for a, b in zip(errors[:-1], errors[1:])]


@dataclass
class ResidualReport:
    identity: str
    preset: str
    parameter: dict
    grids: list
    max_residual: list
    l2_residual: list
    order_estimate_max: list = field(default_factory=list)
    order_estimate_l2: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"identity": self.identity, "preset": self.preset, **self.parameter, "grid": self.grids,
                "max_residual": self.max_residual, "l2_residual": self.l2_residual,
                "order_estimate": {"max": self.order_estimate_max, "l2": self.order_estimate_l2}}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @property
    def min_order(self) -> float:
        return min(self.order_estimate_max + self.order_estimate_l2)


IDENTITIES = ("fundamental", "gd1", "gd2")


def identity_residual(identity: str, preset: str, n: int, eps: float = 1e-2, exponent: float = 1.0,
                      seed: int = 0) -> tuple[np.ndarray, Grid2D, np.ndarray]:
    """Residual field of one identity on one preset at ``n`` cells per axis, plus the reporting mask."""
    pre = get_preset(preset, seed)
    g = pre.grid(n)
    params = ParamSet(p=2.0, gamma=0.0, epsilon=eps)
    mask = g.interior_mask(COLLAR)
    if identity == "fundamental":
        d = derive_all(pre.sample(g), g, params)
        return fundamental_equality_residual(d), g, mask
    if identity == "gd1":
        d = derive_all(pre.sample(g), g, params)
        return gd1_residual(d, exponent, g, eps), g, mask
    if identity == "gd2":
        dt = g.hx
        slices = [pre.translated(g, t) for t in (-dt, 0.0, dt)]
        return gd2_residual(slices, exponent, g, eps, (-dt, 0.0, dt)), g, mask
    raise ValueError(f"unknown identity {identity!r}; expected one of {IDENTITIES}")


def identity_convergence(identity: str, preset: str, levels=(32, 64, 128), eps: float = 1e-2,
                         exponent: float = 1.0, seed: int = 0) -> ResidualReport:
    maxs, l2s, grids = [], [], []
    for n in levels:
        res, g, mask = identity_residual(identity, preset, n, eps, exponent, seed)
        mx, l2 = residual_norms(res, g, mask)
        maxs.append(mx)
        l2s.append(l2)
        grids.append([g.nx + 1, g.ny + 1])
    key = {"fundamental": "epsilon", "gd1": "alpha", "gd2": "beta"}[identity]
    param = {"epsilon": eps} if key == "epsilon" else {key: exponent, "epsilon": eps}
    return ResidualReport(identity, preset, param, grids, maxs, l2s, observed_orders(maxs), observed_orders(l2s))


# --- weighted sum ------------------------------------------------------------

@dataclass
class StructureSumReport:
    S_coefficient_side: np.ndarray
    S_divergence_side: np.ndarray
    max_residual: float
    l2_residual: float
    flux_fields: dict
    equation_residual: float
    is_solution: bool

    def to_dict(self) -> dict:
        return {"identity": "weighted_sum", "max_residual": self.max_residual, "l2_residual": self.l2_residual,
                "equation_residual": self.equation_residual, "is_solution": self.is_solution,
                "flags": [] if self.is_solution else ["not a solution"]}


def equation_rhs(d: DerivedFields, params: ParamSet) -> np.ndarray:
    g2e = d.g2e
    return g2e ** (0.5 * params.gamma) * (d.lap + (params.p - 2.0) * d.norm_inf_lap_reg)


def key_estimate_form(d: DerivedFields, w: WeightRecipe, params: ParamSet) -> np.ndarray:
    """Coefficient side written with the orthogonal quantities (needs ``theta > 0``)."""
    p, gm, s = params.p, params.gamma, params.s
    c1, c2, c3, c4 = c_from_kappa(w.as_tuple(), p, gm, s, d.kappa)
    P = (p - 2.0) * d.theta + 1.0
    ni = d.norm_inf_lap
    return d.g2e ** (0.5 * (p - 2.0 + s)) * (
        c1 * d.hess.frob_sq() + c2 * d.dT_norm_sq + (c3 - c1) * d.lap_T**2
        + ((c3 + c4) * P - c1) * ni**2 + (c3 * P + (c3 + c4) - (2.0 * c1 + c2)) * d.lap_T * ni)


def coefficient_side(d: DerivedFields, w: WeightRecipe, params: ParamSet) -> np.ndarray:
    """Coefficient side with ``u_t`` replaced through the equation; no division by ``theta``.

    Algebraically equal to :func:`key_estimate_form` wherever ``theta > 0``.
    """
    p, gm, s = params.p, params.gamma, params.s
    w1, w2, w3, w4 = w.as_tuple()
    k = d.kappa
    c1 = w1 + w3 * k
    c2_t = w1 * (p - 2.0 + s) + w3 * (p - 4.0 + s) * k          # c2 / theta
    c3 = w2 + w4 * k
    c4_t = w2 * (p - 2.0 + s - gm) + w4 * (p - 4.0 + s - gm) * k  # c4 / theta
    R = d.norm_inf_lap_reg
    ut_scaled = d.lap + (p - 2.0) * R                              # (|Du|^2+eps)^(-gamma/2) u_t
    return d.g2e ** (0.5 * (p - 2.0 + s)) * (
        c1 * (d.hess.frob_sq() - d.lap**2) + c2_t * (d.grad_of_norm_sq_reg - d.lap * R)
        + ut_scaled * (c3 * d.lap + c4_t * R))


def weighted_sum_report(u_slices, times, w: WeightRecipe, params: ParamSet, g: Grid2D,
                        solution_tol: float = 0.05) -> StructureSumReport:
    """Both sides of the key equality at the middle of three slices of a (discrete) solution."""
    eps = params.epsilon
    if not eps > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={eps})")
    p, gm, s = params.p, params.gamma, params.s
    d = derive_all(u_slices[1], g, params)
    w1, w2, w3, w4 = w.as_tuple()
    a1, a2 = p - 2.0 + s, p - 4.0 + s
    F1, F3 = gd1_flux(d, a1, eps), gd1_flux(d, a2, eps)
    gd1_a = divergence(F1, g)
    gd1_b = divergence(F3, g)
    _, div2_a, tt_a = gd2_parts(u_slices, a1 - gm, g, eps, times)
    _, div2_b, tt_b = gd2_parts(u_slices, a2 - gm, g, eps, times)
    S_div = w1 * gd1_a + w2 * (div2_a - tt_a) + eps * w3 * gd1_b + eps * w4 * (div2_b - tt_b)
    S_coef = coefficient_side(d, w, params)
    mask = g.interior_mask(COLLAR)
    mx, l2 = residual_norms(S_coef - S_div, g, mask)
    ut = time_derivative_mid(u_slices, times)
    rhs = equation_rhs(d, params)
    eq_res = float(np.max(np.abs((ut - rhs)[mask])))
    scale = 1.0 + float(np.max(np.abs(rhs[mask])))
    return StructureSumReport(S_coef, S_div, mx, l2, {"gd1_primary": F1, "gd1_eps": F3}, eq_res,
                              eq_res <= solution_tol * scale)
