"""Region scans over (p, gamma), slice certificates and landscape data."""
from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import sympy as sp

from .. import kernels
from .._kernels_py import _dn, _up
from ..params import ParamSet, WeightRecipe
from .algebra import (INADMISSIBLE, admissible_s, conditions, det_f, f_gamma, f_gamma_slope,
                      select_weights_general_s, thm11_params)
from .certify import certify, condition_polys, _stack


# --- region scan -------------------------------------------------------------

@dataclass
class RegionMap:
    p_values: np.ndarray
    gamma_values: np.ndarray
    verdict: np.ndarray          # str per (p, gamma)
    min_value: np.ndarray        # certified margin (accept) or witness value
    kappa_at_min: np.ndarray
    s_policy: str = "thm11"

    @property
    def empty(self) -> bool:
        return self.verdict.size == 0

    def rows(self):
        for i, p in enumerate(self.p_values):
            for j, g in enumerate(self.gamma_values):
                yield (float(p), float(g), float(self.kappa_at_min[i, j]),
                       float(self.min_value[i, j]), str(self.verdict[i, j]))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["p", "gamma", "kappa_min_location", "min_value", "verdict"])
            for r in self.rows():
                wr.writerow([repr(r[0]), repr(r[1]), repr(r[2]), repr(r[3]), r[4]])

    def all_accept(self) -> bool:
        return bool(np.all(self.verdict == "accept"))


def _axis(rng, n) -> np.ndarray:
    lo, hi = rng
    if n <= 0 or lo > hi:
        return np.empty(0)
    if n == 1:
        return np.array([float(lo)])
    return np.linspace(lo, hi, n)


def _one_point(args) -> tuple[str, float, float]:
    p, g, s_policy, target, method = args
    if s_policy == "thm11":
        w, params = WeightRecipe.thm11(p, g), thm11_params(p, g)
    else:
        s = float(s_policy)
        if admissible_s(p, g, s) == INADMISSIBLE or s == g - p:
            return ("inadmissible", math.nan, math.nan)
        try:
            w = select_weights_general_s(p, g, s)
        except ArithmeticError:
            return ("inconclusive", math.nan, math.nan)
        params = ParamSet(p=p, gamma=g, s=s)
    cert = certify(w, params, target, method=method)
    if cert.verdict == "accept":
        k = int(np.argmin(cert.cells[:, 2]))
        return ("accept", cert.margin_c, float(0.5 * (cert.cells[k, 0] + cert.cells[k, 1])))
    return (cert.verdict, cert.witness["value"], cert.witness["kappa"])


def scan_region(p_range, gamma_range, s_policy="thm11", resolution=(75, 39), target_margin=1e-4,
                method="lipschitz_sweep", workers: int = 1) -> RegionMap:
    """Certify every point of a ``resolution``-sized grid over ``p_range x gamma_range``.

    ``s_policy`` is ``"thm11"`` (large-p recipe, ``s = 2 - p``) or a fixed
    ``s`` value used with the general-s recipe.
    """
    n_p, n_g = (resolution, resolution) if np.isscalar(resolution) else resolution
    ps, gs = _axis(p_range, int(n_p)), _axis(gamma_range, int(n_g))
    tasks = [(float(p), float(g), str(s_policy), target_margin, method) for p in ps for g in gs]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            out = list(ex.map(_one_point, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        out = [_one_point(t) for t in tasks]
    shape = (len(ps), len(gs))
    verdict = np.array([o[0] for o in out], dtype=object).reshape(shape)
    vals = np.array([o[1] for o in out], dtype=float).reshape(shape)
    kap = np.array([o[2] for o in out], dtype=float).reshape(shape)
    return RegionMap(ps, gs, verdict, vals, kap, str(s_policy))


# --- exact slice polynomials ---------------------------------------------------

_K, _P, _G = sp.symbols("kappa p gamma")


def _symbolic_det():
    b = 2 * sp.sqrt(2)
    w1, w2, w3, w4 = _P - _G, 2, 1 - _P, 2 * (sp.sqrt(2) - 1)
    s = 2 - _P
    th = 1 - _K
    c1 = w1 + w3 * _K
    c2 = (w1 * (_P - 2 + s) + w3 * (_P - 4 + s) * _K) * th
    c3 = w2 + w4 * _K
    c4 = (w2 * (_P - 2 + s - _G) + w4 * (_P - 4 + s - _G) * _K) * th
    P = (_P - 2) * th + 1
    det = c3 * (c3 + c4) * P - (sp.Rational(1, 2) * (c3 * P + c3 + c4 - 2 * c1 - c2)) ** 2
    a = 1 - _G
    f = ((2 + (b - 2) * _K) * (2 * (1 - _G) + (2 * _G - (1 + _G) * (b - 2)) * _K + (2 + _G) * (b - 2) * _K**2)
         * ((_P - 2) * (1 - _K) + 1)
         - sp.Rational(1, 4) * _K**2 * ((b - 4) * (_P - 2 - _G) * (1 - _K) + 2 * (b - a) * _K) ** 2)
    fg = (-(1 - _K) * P * c3**2
          + sp.Rational(1, 2) * _K**2 * ((1 - _K) * (b - 4) - 2 * _K) * ((b - 4) * (_P - 2 - _G) * (1 - _K) + 2 * (b - a) * _K))
    return det, f, fg


@lru_cache(maxsize=None)
def slice_polynomials():
    """Exact polynomials in ``(kappa, p)`` for the two slices, with consistency checks.

    Returns ``(h, neg_fg)``: ``f(kappa, p, 1) = kappa (1 - kappa) h(kappa, p)`` and
    ``neg_fg = -f_gamma(kappa, p, -1)``.
    """
    det, f, fg = _symbolic_det()
    if sp.expand(f - det) != 0:
        raise ArithmeticError("explicit determinant polynomial disagrees with det M")
    if sp.expand(sp.diff(det, _G) - fg) != 0:
        raise ArithmeticError("explicit gamma-derivative disagrees with d(det M)/d gamma")
    f1 = sp.Poly(sp.expand(f.subs(_G, 1)), _K)
    h, rem = sp.div(f1, sp.Poly(_K * (1 - _K), _K))
    if not rem.is_zero:
        raise ArithmeticError("f(kappa, p, 1) is not divisible by kappa (1 - kappa)")
    neg_fg = sp.Poly(sp.expand(-fg.subs(_G, -1)), _K)
    return _interval_coeffs(h), _interval_coeffs(neg_fg)


def _enclose(c) -> tuple[float, float]:
    if c.is_Integer:
        v = float(c)
        return v, v
    v = float(sp.N(c, 40))
    return _dn(v), _up(v)


def _interval_coeffs(poly_k: sp.Poly):
    """κ-coefficients (ascending) as p-polynomials with interval coefficients."""
    coeffs = list(reversed(poly_k.all_coeffs()))
    out = []
    for ck in coeffs:
        pp = sp.Poly(sp.expand(ck), _P)
        pc = list(reversed(pp.all_coeffs()))
        lo, hi = zip(*(_enclose(c) for c in pc))
        out.append((list(lo), list(hi)))
    return out


@dataclass
class SliceCertificate:
    name: str
    verdict: str
    p_range: tuple[float, float]
    min_lower_bound: float
    boxes: list = field(default_factory=list)   # (p0, p1, lower bound)
    note: str = ""

    def to_dict(self) -> dict:
        return {"name": self.name, "verdict": self.verdict, "p_range": list(self.p_range),
                "min_lower_bound": self.min_lower_bound, "n_boxes": len(self.boxes), "note": self.note}


def certify_kappa_p(coeffs, p_range, target=1e-6, box_width=0.5, max_splits=12, max_depth=14,
                    mode=kernels.MODE_INTERVAL, name="slice") -> SliceCertificate:
    """Certify ``q(kappa, p) >= target`` on ``[0, 1] x p_range`` by p-boxes and kappa bisection."""
    p0, p1 = p_range
    n0 = max(1, int(math.ceil((p1 - p0) / box_width)))
    edges = np.linspace(p0, p1, n0 + 1)
    stack = [(float(edges[i + 1]), float(edges[i]), 0) for i in range(n0)][::-1]
    boxes, verdict = [], "accept"
    while stack:
        b, a, depth = stack.pop()
        lo = np.empty((1, len(coeffs)))
        hi = np.empty((1, len(coeffs)))
        for i, (cl, ch) in enumerate(coeffs):
            lo[0, i], hi[0, i] = kernels.poly_enclosure(cl, ch, a, b)
        v, cells, wit = kernels.sweep(lo, hi, target, max_depth, mode)
        if v == kernels.ACCEPT:
            boxes.append((a, b, float(cells[:, 2].min())))
        elif v == kernels.REJECT:
            return SliceCertificate(name, "reject", (p0, p1), float(wit[2]), boxes,
                                    f"certified value {wit[2]:.6g} < {target} at kappa={wit[0]}, p in [{a}, {b}]")
        elif depth < max_splits:
            m = 0.5 * (a + b)
            stack.append((b, m, depth + 1))
            stack.append((m, a, depth + 1))
        else:
            verdict = "inconclusive"
    boxes.sort()
    lb = min(x[2] for x in boxes) if boxes else math.nan
    return SliceCertificate(name, verdict, (p0, p1), lb, boxes)


def certify_gamma_one_slice(p_range=(3.0, 40.0), **kw) -> SliceCertificate:
    """``f(kappa, p, 1) >= 0`` via the cofactor ``h = f / (kappa (1 - kappa)) > 0``."""
    h, _ = slice_polynomials()
    cert = certify_kappa_p(h, p_range, name="f(kappa,p,1)", **kw)
    cert.note = cert.note or "f = kappa(1-kappa)h with h certified positive; f vanishes only at kappa in {0, 1}"
    return cert


def certify_gamma_minus_one_slice(p_range=(3.0, 40.0), **kw) -> SliceCertificate:
    """``f_gamma(kappa, p, -1) < 0`` via ``-f_gamma >= target > 0``."""
    _, neg = slice_polynomials()
    cert = certify_kappa_p(neg, p_range, name="-f_gamma(kappa,p,-1)", **kw)
    cert.note = cert.note or "f_gamma(., ., -1) certified negative; with A <= 0 this gives f_gamma <= 0 for gamma >= -1"
    return cert


def monotonicity_check(p_values, gamma_values, n_kappa=401) -> dict:
    """Sampled check that f is nonincreasing in gamma, so f(., ., gamma) >= f(., ., 1)."""
    k = np.linspace(0.0, 1.0, n_kappa)[:, None]
    worst_drop, worst_fg, worst_A = -np.inf, -np.inf, float(np.max(f_gamma_slope(k)))
    for p in p_values:
        base = det_f(k, p, 1.0)
        for g in gamma_values:
            worst_drop = max(worst_drop, float(np.max(base - det_f(k, p, g))))
            worst_fg = max(worst_fg, float(np.max(f_gamma(k, p, g))))
    return {"max_f_at_1_minus_f": worst_drop, "max_f_gamma": worst_fg, "max_A": worst_A,
            "holds": worst_fg <= 0.0 and worst_A <= 0.0 and worst_drop <= 1e-9}


# --- landscapes ----------------------------------------------------------------

def landscape(kind: str, gamma: float, p_values, kappa_values) -> np.ndarray:
    """Matrix ``Z[i, j]`` of ``f`` or ``f_gamma`` at ``(p_values[i], kappa_values[j])``."""
    fun = {"f": det_f, "f_gamma": f_gamma}.get(kind)
    if fun is None:
        raise ValueError(f"unknown landscape {kind!r}")
    P = np.asarray(p_values, dtype=float)[:, None]
    K = np.asarray(kappa_values, dtype=float)[None, :]
    return fun(K, P, gamma) + 0.0 * P


def write_gnuplot_matrix(path, xs, ys, Z) -> None:
    """Gnuplot ``nonuniform matrix`` text layout: first row ``n x...``, then ``y z...``."""
    xs = np.asarray(xs, dtype=float)
    with open(path, "w") as fh:
        fh.write(" ".join([str(len(xs))] + [repr(float(x)) for x in xs]) + "\n")
        for y, row in zip(ys, Z):
            fh.write(" ".join([repr(float(y))] + [repr(float(z)) for z in row]) + "\n")


# --- large-p failure ---------------------------------------------------------

def locate_negative_det(p_values=None, gamma_values=None, n_kappa=2001) -> dict | None:
    """First ``(p, gamma, kappa)`` in scan order where det M of the large-p recipe is certified negative."""
    p_values = np.arange(41.0, 200.0 + 1e-9, 1.0) if p_values is None else p_values
    gamma_values = np.round(np.arange(-0.95, 0.951, 0.05), 10) if gamma_values is None else gamma_values
    k = np.linspace(0.0, 1.0, n_kappa)
    for p in p_values:
        for g in gamma_values:
            p, g = float(p), float(g)
            w = WeightRecipe.thm11(p, g)
            det = conditions(w.as_tuple(), p, g, 2.0 - p, k)[2]
            j = int(np.argmin(det))
            if det[j] >= 0:
                continue
            lo, hi = _stack(condition_polys(w, thm11_params(p, g)))
            ub = kernels.poly_point(lo[2], hi[2], float(k[j]))[1]
            if ub < 0:
                return {"p": p, "gamma": g, "kappa": float(k[j]), "det_upper_bound": float(ub)}
    return None
