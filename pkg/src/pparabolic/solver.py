"""Explicit finite-difference solver for the regularized equation with Dirichlet data."""
from __future__ import annotations

import json
import logging
import math
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from . import kernels
from .diff_ops import derive_all
from .params import Grid2D, ParamSet, ParamsError, read_field, validate_params, write_field
from .presets import get_preset

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    def __init__(self, msg: str, step: int):
        super().__init__(f"{msg} (step {step})")
        self.step = step


BoundaryFn = Callable[[np.ndarray, np.ndarray, float], np.ndarray]


@dataclass
class Problem:
    grid: Grid2D
    params: ParamSet
    initial: np.ndarray
    t_end: float
    boundary: BoundaryFn | None = None     # None: the initial trace is held fixed
    preset: str | None = None
    seed: int = 0
    amplitude: float = 1.0

    def __post_init__(self):
        self.initial = np.asarray(self.initial, dtype=np.float64)
        if self.initial.shape != self.grid.shape:
            raise ValueError("initial data does not match the grid")
        if not self.params.epsilon > 0:
            raise ParamsError(f"epsilon > 0 violated (epsilon={self.params.epsilon})")
        if self.boundary is not None:
            X, Y = self.grid.mesh()
            b0 = self.boundary(X, Y, 0.0)
            bm = self.grid.boundary_mask()
            if not np.allclose(b0[bm], self.initial[bm], rtol=1e-12, atol=1e-12):
                raise ValueError("initial data does not match the boundary trace at t = 0")

    @classmethod
    def from_preset(cls, name: str, n: int, params: ParamSet, t_end: float, seed: int = 0,
                    exact_boundary: bool = False, amplitude: float = 1.0) -> Problem:
        pre = get_preset(name, seed, amplitude)
        g = pre.grid(n)
        bnd = pre.heat_solution if (exact_boundary and pre.heat_solution is not None) else None
        return cls(g, params, pre.sample(g), t_end, bnd, name, seed, amplitude)

    @classmethod
    def from_config(cls, cfg: dict) -> Problem:
        params = ParamSet.from_dict(cfg["params"])
        return cls.from_preset(cfg["preset"], int(cfg["n"]), params, float(cfg["t_end"]),
                               int(cfg.get("seed", 0)), bool(cfg.get("exact_boundary", False)),
                               float(cfg.get("amplitude", 1.0)))

    def to_config(self) -> dict:
        return {"preset": self.preset, "n": self.grid.nx, "params": json.loads(self.params.to_json()),
                "t_end": self.t_end, "seed": self.seed, "exact_boundary": self.boundary is not None,
                "amplitude": self.amplitude}


@dataclass
class SpaceTimeField:
    grid: Grid2D
    params: ParamSet
    times: np.ndarray
    slices: np.ndarray          # (k, nx+1, ny+1)
    ut: np.ndarray              # time derivative at each stored slice, from neighbouring steps
    final_triplet: tuple        # (three consecutive step slices, their times)
    n_steps: int
    data_range: tuple[float, float]
    max_violation: float
    monotone: bool
    dt_min: float
    dt_max: float
    meta: dict = field(default_factory=dict)

    @property
    def max_principle_ok(self) -> bool:
        return self.max_violation <= 0.0

    def slice_at(self, t: float) -> np.ndarray:
        return self.slices[int(np.argmin(np.abs(self.times - t)))]

    def write(self, path) -> None:
        write_field(path, self.grid, self.slices, self.times)

    def save(self, directory) -> None:
        """Slices, ``u_t`` slices and a JSON sidecar; :func:`load_trajectory` reads them back."""
        d = Path(directory)
        write_field(d / "trajectory.ppf", self.grid, self.slices, self.times)
        write_field(d / "trajectory_ut.ppf", self.grid, self.ut, self.times)
        us, ts = self.final_triplet if self.final_triplet is not None else ((), ())
        if us:
            write_field(d / "final_triplet.ppf", self.grid, np.stack(us), np.array(ts))
        side = {"params": json.loads(self.params.to_json()), **self.summary()}
        (d / "trajectory.json").write_text(json.dumps(side, indent=1, sort_keys=True) + "\n")

    def summary(self) -> dict:
        return {"n_steps": self.n_steps, "n_slices": len(self.times), "t_end": float(self.times[-1]),
                "dt_min": self.dt_min, "dt_max": self.dt_max, "data_range": list(self.data_range),
                "max_principle_ok": self.max_principle_ok, "max_violation": self.max_violation,
                "monotone_stencil": self.monotone, **self.meta}


def load_trajectory(directory) -> SpaceTimeField:
    d = Path(directory)
    side = json.loads((d / "trajectory.json").read_text())
    g, slices, times = read_field(d / "trajectory.ppf")
    _, ut, _ = read_field(d / "trajectory_ut.ppf")
    trip = None
    if (d / "final_triplet.ppf").exists():
        _, us, ts = read_field(d / "final_triplet.ppf")
        trip = (tuple(us), tuple(float(t) for t in ts))
    keys = {"n_steps", "n_slices", "t_end", "dt_min", "dt_max", "data_range", "max_principle_ok",
            "max_violation", "monotone_stencil", "params"}
    return SpaceTimeField(
        grid=g, params=ParamSet.from_dict(side["params"]), times=times, slices=slices, ut=ut,
        final_triplet=trip, n_steps=side["n_steps"], data_range=tuple(side["data_range"]),
        max_violation=side["max_violation"], monotone=side["monotone_stencil"],
        dt_min=side["dt_min"], dt_max=side["dt_max"], meta={k: v for k, v in side.items() if k not in keys},
    )


def rhs(u, params: ParamSet, g: Grid2D, scheme: str = "monotone") -> np.ndarray:
    """``(|Du|^2+eps)^(gamma/2) (Delta u + (p-2) Delta_inf u / (|Du|^2+eps))``, zero on the boundary ring."""
    if not params.epsilon > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={params.epsilon})")
    u = np.ascontiguousarray(u, dtype=np.float64)
    if scheme == "monotone":
        return kernels.monotone_rhs(u, g.hx, g.hy, params.p, params.gamma, params.epsilon)[0]
    if scheme == "central":
        d = derive_all(u, g, params)
        out = d.g2e ** (0.5 * params.gamma) * (d.lap + (params.p - 2.0) * d.norm_inf_lap_reg)
        out[g.boundary_mask()] = 0.0
        return out
    raise ValueError(f"unknown scheme {scheme!r}")


def _coef_bound(params: ParamSet, cmax: float) -> float:
    # cmax is the largest prefactor on the current slice; for gamma < 0 it is at most eps^(gamma/2)
    return cmax * max(1.0, params.p - 1.0)


def stable_dt(u, params: ParamSet, g: Grid2D, safety: float = 0.9) -> float:
    """Forward-Euler step keeping the explicit scheme monotone.

    ``safety h^2 / (2 D (1/hx^2 + 1/hy^2))`` with ``D`` the largest
    ``(|Du|^2+eps)^(gamma/2) max(1, p-1)`` over the interior of ``u``.
    """
    if not params.epsilon > 0:
        raise ParamsError(f"epsilon > 0 violated (epsilon={params.epsilon})")
    u = np.ascontiguousarray(u, dtype=np.float64)
    cmax = kernels.monotone_rhs(u, g.hx, g.hy, params.p, params.gamma, params.epsilon)[1]
    return _dt_from_bound(_coef_bound(params, cmax), g, safety)


def _dt_from_bound(D: float, g: Grid2D, safety: float) -> float:
    return safety / (2.0 * D * (1.0 / g.hx**2 + 1.0 / g.hy**2))


def is_monotone_stencil(p: float) -> bool:
    """Whether the sign-adapted cross stencil has nonnegative weights for every gradient direction."""
    q = p - 2.0
    if q >= 0:
        return 1.0 - q * (math.sqrt(2.0) - 1.0) / 2.0 >= 0.0
    return 1.0 + q * (1.0 + math.sqrt(2.0)) / 2.0 >= 0.0


def lagrange_derivative(ts, us, at: float):
    """Derivative at ``at`` of the quadratic through three ``(t, u)`` samples."""
    out = 0.0
    for j in range(3):
        others = [k for k in range(3) if k != j]
        den = math.prod(ts[j] - ts[k] for k in others)
        num = sum(math.prod(at - ts[k] for k in others if k != m) for m in others)
        out = out + (num / den) * us[j]
    return out


def solve(prob: Problem, safety: float = 0.9, store_dt: float | None = None,
          check_max_principle: bool = True, max_steps: int = 50_000_000) -> SpaceTimeField:
    """Forward Euler with the step size recomputed each step and the boundary trace imposed each step.

    Slices are stored every ``store_dt`` in time (default: ``r^2 / 10`` with
    ``r`` one eighth of the shorter side, so cylinder integrals get at least
    ten time layers).  ``u_t`` at a stored slice comes from the neighbouring
    steps, not from the slice spacing.
    """
    params = validate_params(prob.params, "solver")
    if not prob.t_end > 0:
        raise ValueError("t_end must be positive")
    g = prob.grid
    X, Y = g.mesh()
    bmask = g.boundary_mask()
    if store_dt is None:
        xa, xb, ya, yb = g.extent
        store_dt = (min(xb - xa, yb - ya) / 8.0) ** 2 / 10.0

    u = prob.initial.copy()
    if prob.boundary is not None:
        u[bmask] = prob.boundary(X, Y, 0.0)[bmask]
    lo, hi = float(u.min()), float(u.max())
    tol = 1e-12 * max(1.0, abs(lo), abs(hi))
    violation = -math.inf

    times, slices, uts = [0.0], [u.copy()], [None]
    hist = deque([(0.0, u)], maxlen=3)
    pending = [0]
    t, step = 0.0, 0
    next_store = store_dt
    dt_min, dt_max = math.inf, 0.0
    while t < prob.t_end * (1.0 - 1e-14):
        if step >= max_steps:
            raise SolverError("step limit reached", step)
        r, cmax = kernels.monotone_rhs(u, g.hx, g.hy, params.p, params.gamma, params.epsilon)
        dt = min(_dt_from_bound(_coef_bound(params, cmax), g, safety), prob.t_end - t)
        new = u + dt * r
        t_new = t + dt
        if prob.boundary is not None:
            bvals = prob.boundary(X, Y, t_new)[bmask]
            new[bmask] = bvals
            lo, hi = min(lo, float(bvals.min())), max(hi, float(bvals.max()))
        else:
            new[bmask] = u[bmask]
        step += 1
        if not np.all(np.isfinite(new)):
            raise SolverError("non-finite values", step)
        if check_max_principle:
            violation = max(violation, lo - float(new.min()) - tol, float(new.max()) - hi - tol)
        dt_min, dt_max = min(dt_min, dt), max(dt_max, dt)
        hist.append((t_new, new))
        u, t = new, t_new
        if len(hist) == 3:
            ts = [h[0] for h in hist]
            us = [h[1] for h in hist]
            for i in [i for i in pending if times[i] in ts[:2]]:
                uts[i] = lagrange_derivative(ts, us, times[i])
                pending.remove(i)
        if t >= next_store * (1.0 - 1e-12) or t >= prob.t_end * (1.0 - 1e-14):
            times.append(t)
            slices.append(u.copy())
            uts.append(None)
            pending.append(len(times) - 1)
            while next_store <= t * (1.0 + 1e-12):
                next_store += store_dt
    ts = [h[0] for h in hist]
    us = [h[1] for h in hist]
    for i in pending:
        uts[i] = lagrange_derivative(ts, us, times[i]) if len(hist) == 3 else (us[-1] - us[0]) / (ts[-1] - ts[0])
    triplet = (tuple(x.copy() for x in us), tuple(ts)) if len(hist) == 3 else None
    log.debug("solved to t=%g in %d steps, dt in [%g, %g]", t, step, dt_min, dt_max)
    return SpaceTimeField(
        grid=g, params=params, times=np.array(times), slices=np.stack(slices), ut=np.stack(uts),
        final_triplet=triplet, n_steps=step, data_range=(lo, hi),
        max_violation=max(0.0, violation) if check_max_principle else math.nan,
        monotone=is_monotone_stencil(params.p), dt_min=dt_min, dt_max=dt_max,
        meta={"preset": prob.preset, "safety": safety, "store_dt": store_dt},
    )
