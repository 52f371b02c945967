"""Coefficients of the weighted sum, the 2x2 matrix, its determinant and the root window.

All float-level functions broadcast over numpy arrays in ``kappa``/``theta``
and the parameters.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import minimize_scalar

from ..params import ParamSet, ParamsError, SweepPoint, WeightRecipe

B_SHORT = 2.0 * math.sqrt(2.0)

OPTIMAL_BRANCH = "optimal_branch"
SECOND_BRANCH = "second_branch"
INADMISSIBLE = "inadmissible"


class CCoeffs(NamedTuple):
    c1: np.ndarray
    c2: np.ndarray
    c3: np.ndarray
    c4: np.ndarray


class QuadMatrix(NamedTuple):
    m11: np.ndarray
    m12: np.ndarray
    m22: np.ndarray

    def det(self):
        return self.m11 * self.m22 - self.m12 * self.m12

    def lambda_min(self):
        half_tr = 0.5 * (self.m11 + self.m22)
        half_diff = 0.5 * (self.m11 - self.m22)
        return half_tr - np.hypot(half_diff, self.m12)

    def quad(self, x1, x2):
        return self.m11 * x1 * x1 + 2.0 * self.m12 * x1 * x2 + self.m22 * x2 * x2


def c_from_kappa(w, p, gamma, s, kappa) -> CCoeffs:
    w1, w2, w3, w4 = w
    kappa = np.asarray(kappa, dtype=float) if not np.isscalar(kappa) else kappa
    theta = 1.0 - kappa
    return CCoeffs(
        c1=w1 + w3 * kappa,
        c2=(w1 * (p - 2.0 + s) + w3 * (p - 4.0 + s) * kappa) * theta,
        c3=w2 + w4 * kappa,
        c4=(w2 * (p - 2.0 + s - gamma) + w4 * (p - 4.0 + s - gamma) * kappa) * theta,
    )


def c_coefficients(w: WeightRecipe, params: ParamSet, pt: SweepPoint) -> CCoeffs:
    w1, w2, w3, w4 = w.as_tuple()
    p, g, s = params.p, params.gamma, params.s
    k, th = pt.kappa, pt.theta
    return CCoeffs(
        c1=w1 + w3 * k,
        c2=(w1 * (p - 2.0 + s) + w3 * (p - 4.0 + s) * k) * th,
        c3=w2 + w4 * k,
        c4=(w2 * (p - 2.0 + s - g) + w4 * (p - 4.0 + s - g) * k) * th,
    )


def assemble_matrix(c: CCoeffs, pt: SweepPoint) -> QuadMatrix:
    return _matrix(c, pt.P_theta)


def _matrix(c: CCoeffs, P) -> QuadMatrix:
    c1, c2, c3, c4 = c
    return QuadMatrix(
        m11=c3,
        m12=0.5 * (c3 * P + (c3 + c4) - (2.0 * c1 + c2)),
        m22=(c3 + c4) * P,
    )


def matrix_from_kappa(w, p, gamma, s, kappa) -> QuadMatrix:
    P = (p - 2.0) * (1.0 - np.asarray(kappa, dtype=float)) + 1.0
    return _matrix(c_from_kappa(w, p, gamma, s, kappa), P)


def conditions(w, p, gamma, s, kappa) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """The three quantities that must stay positive: ``2c1 + c2``, ``c3``, ``det M``."""
    c = c_from_kappa(w, p, gamma, s, kappa)
    P = (p - 2.0) * (1.0 - np.asarray(kappa, dtype=float)) + 1.0
    return 2.0 * c.c1 + c.c2, c.c3 + 0.0 * P, _matrix(c, P).det()


# --- large-p recipe ---------------------------------------------------------

def det_f(kappa, p, gamma):
    """Determinant of M for the large-p recipe (``s = 2 - p``) as an explicit polynomial."""
    b = B_SHORT
    a = 1.0 - gamma
    k = kappa
    first = (2.0 + (b - 2.0) * k) \
        * (2.0 * (1.0 - gamma) + (2.0 * gamma - (1.0 + gamma) * (b - 2.0)) * k + (2.0 + gamma) * (b - 2.0) * k * k) \
        * ((p - 2.0) * (1.0 - k) + 1.0)
    inner = (b - 4.0) * (p - 2.0 - gamma) * (1.0 - k) + 2.0 * (b - a) * k
    return first - 0.25 * k * k * inner * inner


def f_gamma(kappa, p, gamma):
    """Partial derivative of :func:`det_f` in ``gamma``."""
    b = B_SHORT
    a = 1.0 - gamma
    k = kappa
    c3 = 2.0 + (b - 2.0) * k
    P = (p - 2.0) * (1.0 - k) + 1.0
    inner = (b - 4.0) * (p - 2.0 - gamma) * (1.0 - k) + 2.0 * (b - a) * k
    return -(1.0 - k) * P * c3 * c3 + 0.5 * k * k * ((1.0 - k) * (b - 4.0) - 2.0 * k) * inner


def f_gamma_slope(kappa):
    """``A`` in ``f_gamma = A gamma + B``; never positive."""
    k = kappa
    t = 2.0 * k + (4.0 - B_SHORT) * (1.0 - k)
    return -0.5 * k * k * t * t


@dataclass(frozen=True)
class DetDiagnostics:
    f_value: float
    A: float
    B: float


def det_diagnostics(kappa: float, p: float, gamma: float) -> DetDiagnostics:
    A = f_gamma_slope(kappa)
    B = f_gamma(kappa, p, 0.0)
    return DetDiagnostics(float(det_f(kappa, p, gamma)), float(A), float(B))


def thm11_params(p: float, gamma: float, epsilon: float = 0.0) -> ParamSet:
    return ParamSet(p=p, gamma=gamma, s=2.0 - p, epsilon=epsilon)


# --- general-s recipe: root window of det M in w1 -----------------------------

def _pks(theta, p, gamma, s):
    P = (p - 2.0) * theta + 1.0
    S = 1.0 + s * theta
    K = 1.0 + gamma * theta
    return P, S, K


def w1_bounds(theta, params: ParamSet):
    """Roots ``(w1_minus, w1_plus)`` of ``det M`` as a polynomial in ``w1`` (``w2 = p + s``, ``w3 = w4 = 0``)."""
    p, g, s = params.p, params.gamma, params.s
    if not s > g + 1.0 - p:
        raise ParamsError(f"s > gamma + 1 - p violated (s={s}, gamma={g}, p={p})")
    return _w1_bounds(theta, p, g, s)


def _w1_bounds(theta, p, g, s):
    P, S, K = _pks(np.asarray(theta, dtype=float), p, g, s)
    scale = (p + s) / (P + S)
    r1 = np.sqrt(P + S - K)
    r2 = np.sqrt(P)
    return scale * (r1 - r2) ** 2, scale * (r1 + r2) ** 2


def sup_w1_minus(p, gamma, s):
    return max(0.0, (math.sqrt(p - 1.0 + s - gamma) - math.sqrt(p - 1.0)) ** 2)


def inf_w1_plus(p, gamma, s):
    return min(2.0 * (p + s), (math.sqrt(p - 1.0 + s - gamma) + math.sqrt(p - 1.0)) ** 2)


def stationary_theta(p, gamma, s):
    den = (p - 2.0 - s) ** 2 - 4.0 * (p - 2.0 - gamma) * (p - 2.0)
    if den == 0.0:
        return None
    return 4.0 * (p - 2.0 - gamma) / den


@dataclass(frozen=True)
class RootAnalysis:
    p: float
    gamma: float
    s: float
    sup_w1_minus: float
    inf_w1_plus: float
    theta1: float | None
    theta2: float | None
    numeric_sup_w1_minus: float
    numeric_inf_w1_plus: float
    max_rel_mismatch: float

    @property
    def window(self) -> tuple[float, float]:
        return (self.sup_w1_minus, self.inf_w1_plus)

    @property
    def nonempty(self) -> bool:
        return self.inf_w1_plus > self.sup_w1_minus

    def w1_minus(self, theta):
        return _w1_bounds(theta, self.p, self.gamma, self.s)[0]

    def w1_plus(self, theta):
        return _w1_bounds(theta, self.p, self.gamma, self.s)[1]


def _extremize(fun, n_grid=2001):
    grid = np.linspace(0.0, 1.0, n_grid)
    vals = fun(grid)
    i = int(np.argmin(vals))
    best = float(vals[i])
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
    if hi > lo:
        res = minimize_scalar(lambda t: float(fun(t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-14})
        best = min(best, float(res.fun))
    return best


def extremal_bounds(params: ParamSet, rel_tol: float = 1e-8) -> RootAnalysis:
    """Closed-form window ``(sup w1_minus, inf w1_plus)`` cross-checked by numerical extremization."""
    p, g, s = params.p, params.gamma, params.s
    if not s > g + 1.0 - p:
        raise ParamsError(f"s > gamma + 1 - p violated (s={s}, gamma={g}, p={p})")
    sup_c = sup_w1_minus(p, g, s)
    inf_c = inf_w1_plus(p, g, s)
    th = stationary_theta(p, g, s)
    sign = (p - 2.0 + s - 2.0 * g) * (p - 2.0 - s)
    theta1 = th if sign > 0 else None
    theta2 = th if sign < 0 else None
    num_sup = -_extremize(lambda t: -_w1_bounds(t, p, g, s)[0])
    num_inf = _extremize(lambda t: _w1_bounds(t, p, g, s)[1])
    mism = max(abs(num_sup - sup_c) / max(1.0, abs(sup_c)), abs(num_inf - inf_c) / max(1.0, abs(inf_c)))
    if mism > rel_tol:
        raise ArithmeticError(f"closed-form window disagrees with extremization (rel {mism:.3e}) at {params}")
    return RootAnalysis(p, g, s, sup_c, inf_c, theta1, theta2, num_sup, num_inf, mism)


def restriction_s(p, gamma, s):
    """``2(p + s) > (sqrt(p - 1 + s - gamma) - sqrt(p - 1))^2``; the caller ensures ``s > gamma + 1 - p``."""
    return 2.0 * (p + s) > (math.sqrt(p - 1.0 + s - gamma) - math.sqrt(p - 1.0)) ** 2


def admissible_s(p: float, gamma: float, s: float) -> str:
    """Which admissible branch of ``s`` the triple lies in."""
    if s > max(gamma + 1.0 - p, -2.0 - gamma):
        return OPTIMAL_BRANCH
    if s <= -2.0 - gamma:
        rad = 2.0 * (p - 1.0) * (p - 2.0 - gamma)
        if rad >= 0.0 and s > max(gamma + 1.0 - p, 2.0 * p - 4.0 - gamma - 2.0 * math.sqrt(rad)):
            return SECOND_BRANCH
    return INADMISSIBLE


def select_weights_general_s(p: float, gamma: float, s: float, target_margin: float = 1e-10,
                             max_halvings: int = 40) -> WeightRecipe:
    """``w2 = p + s``, ``w3 = w4 = 0`` and ``w1`` just above the lower end of the root window.

    The slack starts at half of ``min(window width, 1)`` and is halved until
    the sweep certifies positive definiteness.
    """
    from .certify import certify

    if s == gamma - p:
        raise ParamsError("excluded case s = gamma - p")
    if admissible_s(p, gamma, s) == INADMISSIBLE:
        raise ParamsError(f"(p, gamma, s) = ({p}, {gamma}, {s}) is not admissible")
    params = ParamSet(p=p, gamma=gamma, s=s)
    ra = extremal_bounds(params)
    eta = 0.5 * min(ra.inf_w1_plus - ra.sup_w1_minus, 1.0)
    for _ in range(max_halvings + 1):
        w = WeightRecipe(w1=ra.sup_w1_minus + eta, w2=p + s, eta=eta)
        if w.w1 > 0 and certify(w, params, target_margin).verdict == "accept":
            return w
        eta *= 0.5
    raise ArithmeticError(f"no certified slack found for (p, gamma, s) = ({p}, {gamma}, {s})")
