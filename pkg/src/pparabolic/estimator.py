"""Integrals over parabolic cylinders, estimate ratios and time-derivative checks."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .certifier.algebra import INADMISSIBLE, admissible_s
from .diff_ops import DerivedFields, derive_all, gradient, third_derivative_proxy
from .params import ParabolicCylinder, ParamSet, ParamsError, validate_params
from .solver import SpaceTimeField

MARGIN_NODES = 2
DATA_NOTE = "boundary data are manufactured; only boundedness and stability of the ratio are meaningful"


# --- integrands --------------------------------------------------------------

def _nonlinear_field_grad_sq(u, d: DerivedFields, traj: SpaceTimeField, exponent: float) -> np.ndarray:
    w = d.g2e ** exponent
    Vx = gradient(w * d.grad.x, traj.grid)
    Vy = gradient(w * d.grad.y, traj.grid)
    return Vx.x**2 + Vx.y**2 + Vy.x**2 + Vy.y**2


def integrand_catalog(params: ParamSet, s: float | None = None) -> dict:
    """Named integrands ``f(u, u_t, d, traj)``; exponents use ``params`` and ``s``."""
    p, g = params.p, params.gamma
    s = params.s if s is None else s
    return {
        "one": lambda u, ut, d, tr: np.ones_like(u),
        "grad_sq": lambda u, ut, d, tr: d.grad.x**2 + d.grad.y**2,
        "hess_sq": lambda u, ut, d, tr: d.hess.frob_sq(),
        "ut_sq": lambda u, ut, d, tr: ut * ut,
        "weighted_grad_sq": lambda u, ut, d, tr: d.g2e ** (0.5 * (p - 2.0 + s)) * (d.grad.x**2 + d.grad.y**2),
        "g2e_power": lambda u, ut, d, tr: d.g2e ** (0.5 * (p + s - g)),
        "abs_log": lambda u, ut, d, tr: np.abs(np.log(d.g2e)),
        "nonlinear_grad_sq": lambda u, ut, d, tr: _nonlinear_field_grad_sq(u, d, tr, 0.25 * (p - 2.0 + s)),
    }


# --- quadrature --------------------------------------------------------------

def slice_weights(times: np.ndarray, t0: float, t1: float) -> np.ndarray:
    """Length of each slice's time cell (midpoint partition) inside ``[t0, t1)``."""
    times = np.asarray(times, dtype=float)
    mids = 0.5 * (times[1:] + times[:-1])
    lo = np.concatenate([[times[0]], mids])
    hi = np.concatenate([mids, [times[-1]]])
    return np.clip(np.minimum(hi, t1) - np.maximum(lo, t0), 0.0, None)


def check_cylinder(traj: SpaceTimeField, cyl: ParabolicCylinder, margin_nodes: int = MARGIN_NODES) -> None:
    if not cyl.fits(traj.grid, float(traj.times[0]), float(traj.times[-1]), margin_nodes):
        raise ValueError(f"cylinder {cyl} leaves the solved space-time window")


def cylinder_integral(traj: SpaceTimeField, cyl: ParabolicCylinder, integrand, params: ParamSet | None = None,
                      s: float | None = None) -> float:
    """Midpoint-rule integral over ``B_r(x0) x [t0, t0 + r^2)``; ``integrand`` is a catalog name or callable."""
    params = traj.params if params is None else params
    fn = integrand_catalog(params, s)[integrand] if isinstance(integrand, str) else integrand
    ball = cyl.ball_mask(traj.grid)
    wts = slice_weights(traj.times, cyl.t0, cyl.t1)
    if not ball.any() or not (wts > 0).any():
        raise ValueError("cylinder contains no grid nodes or no stored slices")
    area = traj.grid.hx * traj.grid.hy
    total = 0.0
    for k in np.nonzero(wts > 0)[0]:
        u = traj.slices[k]
        d = derive_all(u, traj.grid, params)
        vals = fn(u, traj.ut[k], d, traj)[ball]
        total += wts[k] * area * math.fsum(vals.ravel())
    return total


def ball_integral(traj: SpaceTimeField, center, r: float, t: float, integrand, params: ParamSet | None = None) -> float:
    params = traj.params if params is None else params
    k = int(np.argmin(np.abs(traj.times - t)))
    u = traj.slices[k]
    d = derive_all(u, traj.grid, params)
    fn = integrand_catalog(params)[integrand] if isinstance(integrand, str) else integrand
    ball = ParabolicCylinder(tuple(center), t, r).ball_mask(traj.grid)
    return traj.grid.hx * traj.grid.hy * math.fsum(fn(u, traj.ut[k], d, traj)[ball].ravel())


def default_cylinder(traj: SpaceTimeField, r: float | None = None) -> ParabolicCylinder:
    """Centred cylinder with ``r`` one eighth of the shorter side and ``t0`` the first slice after ``r^2``."""
    xa, xb, ya, yb = traj.grid.extent
    r = min(xb - xa, yb - ya) / 8.0 if r is None else r
    later = traj.times[traj.times >= r * r * (1.0 - 1e-12)]
    if later.size == 0:
        raise ValueError("trajectory ends before the burn-in time r^2")
    return ParabolicCylinder((0.5 * (xa + xb), 0.5 * (ya + yb)), float(later[0]), r)


def required_t_end(r: float) -> float:
    """Solve horizon covering the burn-in plus the time span of ``Q_2r``, with one slice layer of slack."""
    return 5.0 * r * r * 1.05


# --- reports -----------------------------------------------------------------

@dataclass
class EstimateReport:
    kind: str
    lhs: float
    rhs_main: float
    rhs_log: float
    metadata: dict = field(default_factory=dict)

    @property
    def rhs(self) -> float:
        return self.rhs_main + self.rhs_log

    @property
    def ratio(self) -> float:
        return self.lhs / self.rhs if self.rhs > 0 else math.inf

    @property
    def log_share(self) -> float:
        return self.rhs_log / self.rhs if self.rhs > 0 else math.nan

    def to_dict(self) -> dict:
        return {"kind": self.kind, "lhs": self.lhs, "rhs_main": self.rhs_main, "rhs_log": self.rhs_log,
                "ratio": self.ratio, "log_share": self.log_share, **self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def append_jsonl(path, reports) -> None:
    with open(path, "a") as fh:
        for r in reports:
            fh.write(r.to_json() + "\n")


def write_ratio_csv(path, reports) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["epsilon", "h", "ratio"])
        for r in reports:
            wr.writerow([repr(float(r.metadata["epsilon"])), repr(float(r.metadata["h"])), repr(float(r.ratio))])


def _rhs_parts(traj, cyl, params, s):
    big = cyl.scaled(2.0)
    check_cylinder(traj, big)
    r2 = cyl.r**2
    main = (cylinder_integral(traj, big, "weighted_grad_sq", params, s)
            + cylinder_integral(traj, big, "g2e_power", params, s)) / r2
    log_part = params.epsilon * (cylinder_integral(traj, big, "abs_log", params, s) / r2
                                 + ball_integral(traj, cyl.x0, big.r, cyl.t0, "abs_log", params))
    return main, log_part


def _meta(traj, cyl, params, s, override, kind):
    return {"p": params.p, "gamma": params.gamma, "s": s, "epsilon": params.epsilon, "r": cyl.r,
            "x0": list(cyl.x0), "t0": cyl.t0, "h": traj.grid.hx, "grid": [traj.grid.nx, traj.grid.ny],
            "override_range": override, "note": DATA_NOTE, "report": kind}


def hessian_estimate_report(traj: SpaceTimeField, cyl: ParabolicCylinder, params: ParamSet | None = None,
                            override: bool = False) -> EstimateReport:
    """``int_{Q_r} |D^2u|^2`` against the ``s = 2 - p`` right-hand side, log terms included."""
    params = traj.params if params is None else params
    if not override:
        validate_params(params, "thm11")
    s = 2.0 - params.p
    params = params.replace(s=s)
    check_cylinder(traj, cyl)
    lhs = cylinder_integral(traj, cyl, "hess_sq", params, s)
    main, log_part = _rhs_parts(traj, cyl, params, s)
    return EstimateReport("hessian", lhs, main, log_part, _meta(traj, cyl, params, s, override, "hessian"))


def nonlinear_gradient_estimate_report(traj: SpaceTimeField, cyl: ParabolicCylinder, params: ParamSet | None = None,
                                       s: float | None = None, override: bool = False) -> EstimateReport:
    """``int_{Q_r} |D((|Du|^2+eps)^((p-2+s)/4) Du)|^2`` against its right-hand side."""
    params = traj.params if params is None else params
    s = params.s if s is None else s
    if s == params.gamma - params.p:
        raise ParamsError("excluded case s = gamma - p")
    if not override and admissible_s(params.p, params.gamma, s) == INADMISSIBLE:
        raise ParamsError(f"s = {s} is not admissible for p = {params.p}, gamma = {params.gamma}")
    params = params.replace(s=s)
    check_cylinder(traj, cyl)
    lhs = cylinder_integral(traj, cyl, "nonlinear_grad_sq", params, s)
    main, log_part = _rhs_parts(traj, cyl, params, s)
    return EstimateReport("nonlinear_gradient", lhs, main, log_part,
                          _meta(traj, cyl, params, s, override, "nonlinear_gradient"))


# --- time derivative ---------------------------------------------------------

TIME_MODES = ("range_i", "range_ii")


def check_time_mode(params: ParamSet, mode: str) -> None:
    p, g = params.p, params.gamma
    if mode == "range_i":
        if not (3.0 <= p <= 40.0 and 0.0 <= g < 1.0):
            raise ParamsError(f"3 <= p <= 40 and 0 <= gamma < 1 violated (p={p}, gamma={g})")
    elif mode == "range_ii":
        if not 1.0 < p < 9.0 * g + 10.0:
            raise ParamsError(f"1 < p < 9 gamma + 10 violated (p={p}, gamma={g})")
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {TIME_MODES}")


@dataclass
class TimeDerivativeReport:
    mode: str
    nodes_checked: int
    nodes_violating: int
    worst_excess: float
    ut_sq_integral: float
    rhs: float
    pointwise_constant: float | None
    metadata: dict = field(default_factory=dict)

    @property
    def pass_fraction(self) -> float:
        return 1.0 - self.nodes_violating / self.nodes_checked if self.nodes_checked else math.nan

    @property
    def ratio(self) -> float:
        return self.ut_sq_integral / self.rhs if self.rhs > 0 else math.inf

    def to_dict(self) -> dict:
        out = asdict(self)
        out.update(pass_fraction=self.pass_fraction, ratio=self.ratio)
        return out


def tau_disc(u, traj: SpaceTimeField) -> np.ndarray:
    h = max(traj.grid.hx, traj.grid.hy)
    return 10.0 * (h * h + traj.dt_max) * (1.0 + third_derivative_proxy(u, traj.grid))


def time_derivative_check(traj: SpaceTimeField, params: ParamSet | None = None, mode: str = "range_i",
                          cyl: ParabolicCylinder | None = None, override: bool = False) -> TimeDerivativeReport:
    """Pointwise ``|u_t| <= (p+2)(|Du|^2+eps)^(gamma/2)|D^2u| + tau`` and ``int_{Q_r} |u_t|^2``.

    ``range_ii`` also checks ``|u_t|^2 <= C |D((|Du|^2+eps)^(gamma/2) Du)|^2`` with
    ``C = ((p+2) / min(1, 1+gamma))^2`` and compares against the estimate for
    ``s = 2 gamma + 2 - p``.
    """
    params = traj.params if params is None else params
    if not override:
        check_time_mode(params, mode)
    elif mode not in TIME_MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {TIME_MODES}")
    p, g = params.p, params.gamma
    interior = traj.grid.interior_mask(MARGIN_NODES)
    C2 = ((p + 2.0) / min(1.0, 1.0 + g)) ** 2
    checked = bad = 0
    worst = -math.inf
    for k in range(1, len(traj.times)):
        u, ut = traj.slices[k], traj.ut[k]
        d = derive_all(u, traj.grid, params)
        tau = tau_disc(u, traj)
        bound = (p + 2.0) * d.g2e ** (0.5 * g) * np.sqrt(d.hess.frob_sq()) + tau
        excess = (np.abs(ut) - bound)[interior]
        if mode == "range_ii":
            dv = _nonlinear_field_grad_sq(u, d, traj, 0.5 * g)
            b2 = np.sqrt(C2 * dv) + tau
            excess = np.maximum(excess, (np.abs(ut) - b2)[interior])
        checked += excess.size
        bad += int(np.count_nonzero(excess > 0))
        worst = max(worst, float(excess.max()))
    cyl = default_cylinder(traj) if cyl is None else cyl
    ut_int = cylinder_integral(traj, cyl, "ut_sq", params)
    if mode == "range_i":
        rep = hessian_estimate_report(traj, cyl, params, override=True)
    else:
        rep = nonlinear_gradient_estimate_report(traj, cyl, params, s=2.0 * g + 2.0 - p, override=True)
    return TimeDerivativeReport(mode, checked, bad, worst, ut_int, rep.rhs,
                                C2 if mode == "range_ii" else None,
                                {"p": p, "gamma": g, "epsilon": params.epsilon, "h": traj.grid.hx,
                                 "override_range": override})


def write_report_rows(path: str | Path, rows: list[dict]) -> None:
    with open(path, "w") as fh:
        for r in rows:
            fh.write(json.dumps(r, sort_keys=True) + "\n")
