"""Parameter records, grids, fields and parabolic cylinders."""
from __future__ import annotations

import json
import math
import struct
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import NamedTuple

import numpy as np

SQRT2 = math.sqrt(2.0)
PURPOSES = ("thm11", "general_s", "solver")


class ParamsError(ValueError):
    """A parameter record violates the range required for its use."""


@dataclass(frozen=True)
class ParamSet:
    p: float
    gamma: float
    s: float = 0.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("p", "gamma", "s", "epsilon"):
            if not math.isfinite(getattr(self, name)):
                raise ParamsError(f"{name} must be finite")
        if not self.p > 1:
            raise ParamsError(f"p > 1 violated (p={self.p})")
        if not self.gamma > -1:
            raise ParamsError(f"gamma > -1 violated (gamma={self.gamma})")
        if not self.epsilon >= 0:
            raise ParamsError(f"epsilon >= 0 violated (epsilon={self.epsilon})")

    def replace(self, **changes) -> ParamSet:
        return ParamSet(**{**asdict(self), **changes})

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> ParamSet:
        return cls(
            p=float(data["p"]),
            gamma=float(data["gamma"]),
            s=float(data.get("s", 0.0)),
            epsilon=float(data.get("epsilon", 0.0)),
        )

    @classmethod
    def from_json(cls, text: str) -> ParamSet:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class WeightRecipe:
    """Weights of the combination ``w1 GD1 + w2 GD2 + eps w3 GD1 + eps w4 GD2``.

    ``a`` and ``b`` are the shorthands used by the large-p recipe
    (``a = 1 - gamma``, ``b = 2 sqrt 2``); ``eta`` is the slack added to
    ``w1`` by the general-s recipe.
    """

    w1: float
    w2: float
    w3: float = 0.0
    w4: float = 0.0
    a: float | None = None
    b: float | None = None
    eta: float = 0.0

    @classmethod
    def thm11(cls, p: float, gamma: float) -> WeightRecipe:
        return cls(
            w1=p - gamma,
            w2=2.0,
            w3=1.0 - p,
            w4=2.0 * (SQRT2 - 1.0),
            a=1.0 - gamma,
            b=2.0 * SQRT2,
        )

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w1, self.w2, self.w3, self.w4)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> WeightRecipe:
        return cls(**{k: data[k] for k in data if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class SweepPoint:
    kappa: float
    theta: float
    P_theta: float
    S_theta: float
    K_theta: float

    @classmethod
    def from_kappa(cls, kappa: float, p: float, gamma: float, s: float = 0.0) -> SweepPoint:
        if not 0.0 <= kappa <= 1.0:
            raise ParamsError(f"kappa must lie in [0, 1], got {kappa}")
        theta = 1.0 - kappa
        return cls(
            kappa=kappa,
            theta=theta,
            P_theta=(p - 2.0) * theta + 1.0,
            S_theta=1.0 + s * theta,
            K_theta=1.0 + gamma * theta,
        )

    @classmethod
    def from_theta(cls, theta: float, p: float, gamma: float, s: float = 0.0) -> SweepPoint:
        if not 0.0 <= theta <= 1.0:
            raise ParamsError(f"theta must lie in [0, 1], got {theta}")
        # theta is kept bit-exact; 1 - (1 - theta) need not round-trip
        return cls(1.0 - theta, theta, (p - 2.0) * theta + 1.0, 1.0 + s * theta, 1.0 + gamma * theta)


@dataclass(frozen=True)
class Grid2D:
    """Uniform node grid with ``nx`` x ``ny`` cells, i.e. ``(nx+1, ny+1)`` nodes.

    Arrays on the grid are indexed ``[i, j]`` with ``i`` along x.
    """

    nx: int
    ny: int
    hx: float
    hy: float
    origin: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if self.nx < 3 or self.ny < 3:
            raise ParamsError("grid needs at least 3 cells per axis")
        if not (self.hx > 0 and self.hy > 0):
            raise ParamsError("grid spacings must be positive")

    @classmethod
    def from_extent(cls, x0: float, x1: float, y0: float, y1: float, nx: int, ny: int | None = None) -> Grid2D:
        ny = nx if ny is None else ny
        return cls(nx, ny, (x1 - x0) / nx, (y1 - y0) / ny, (float(x0), float(y0)))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.nx + 1, self.ny + 1)

    @property
    def extent(self) -> tuple[float, float, float, float]:
        x0, y0 = self.origin
        return (x0, x0 + self.nx * self.hx, y0, y0 + self.ny * self.hy)

    def axes(self) -> tuple[np.ndarray, np.ndarray]:
        x0, y0 = self.origin
        return (x0 + self.hx * np.arange(self.nx + 1), y0 + self.hy * np.arange(self.ny + 1))

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        x, y = self.axes()
        return np.meshgrid(x, y, indexing="ij")

    def interior_mask(self, collar: int = 1) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[collar:-collar, collar:-collar] = True
        return mask

    def boundary_mask(self) -> np.ndarray:
        return ~self.interior_mask(1)

    def refine(self) -> Grid2D:
        return Grid2D(2 * self.nx, 2 * self.ny, self.hx / 2, self.hy / 2, self.origin)

    def to_dict(self) -> dict:
        return {"nx": self.nx, "ny": self.ny, "hx": self.hx, "hy": self.hy, "origin": list(self.origin)}


# Fields are plain float64 arrays of shape grid.shape; the tuples group components.
ScalarField = np.ndarray


class VectorField2(NamedTuple):
    x: np.ndarray
    y: np.ndarray


class SymMatrixField2(NamedTuple):
    xx: np.ndarray
    xy: np.ndarray
    yy: np.ndarray

    def frob_sq(self) -> np.ndarray:
        return self.xx**2 + 2.0 * self.xy**2 + self.yy**2

    def apply(self, v: VectorField2) -> VectorField2:
        return VectorField2(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)


@dataclass(frozen=True)
class ParabolicCylinder:
    """``B_r(x0) x [t0, t0 + r^2)``."""

    x0: tuple[float, float]
    t0: float
    r: float

    def scaled(self, factor: float) -> ParabolicCylinder:
        return ParabolicCylinder(self.x0, self.t0, factor * self.r)

    @property
    def t1(self) -> float:
        return self.t0 + self.r**2

    def ball_mask(self, grid: Grid2D) -> np.ndarray:
        X, Y = grid.mesh()
        return (X - self.x0[0]) ** 2 + (Y - self.x0[1]) ** 2 < self.r**2

    def fits(self, grid: Grid2D, t_start: float, t_end: float, margin_nodes: int = 0) -> bool:
        xa, xb, ya, yb = grid.extent
        mx, my = margin_nodes * grid.hx, margin_nodes * grid.hy
        cx, cy = self.x0
        in_space = (cx - self.r >= xa + mx and cx + self.r <= xb - mx
                    and cy - self.r >= ya + my and cy + self.r <= yb - my)
        return in_space and self.t0 >= t_start and self.t1 <= t_end * (1 + 1e-12)


def validate_params(params: ParamSet, purpose: str) -> ParamSet:
    """Return ``params`` unchanged if it lies in the range required for ``purpose``."""
    if purpose == "thm11":
        if not 3.0 <= params.p:
            raise ParamsError(f"3 <= p violated (p={params.p})")
        if not params.p <= 40.0:
            raise ParamsError(f"p <= 40 violated (p={params.p})")
        if not params.gamma < 1.0:
            raise ParamsError(f"gamma < 1 violated (gamma={params.gamma})")
        return params
    if purpose == "general_s":
        from .certifier.algebra import admissible_s

        if params.s == params.gamma - params.p:
            raise ParamsError("excluded case s = gamma - p")
        branch = admissible_s(params.p, params.gamma, params.s)
        if branch == "inadmissible":
            raise ParamsError(
                "s > max{gamma+1-p, -2-gamma} and "
                "-2-gamma >= s > max{gamma+1-p, 2p-4-gamma-2 sqrt(2(p-1)(p-2-gamma))} both violated"
            )
        return params
    if purpose == "solver":
        if not params.epsilon > 0:
            raise ParamsError(f"epsilon > 0 violated (epsilon={params.epsilon})")
        return params
    raise ParamsError(f"unknown purpose {purpose!r}; expected one of {PURPOSES}")


# --- serialization -----------------------------------------------------------

_MAGIC = b"PPFLD1\0\0"
_HEADER = struct.Struct("<8sqqddddq")


def write_field(path: str | Path, grid: Grid2D, values: np.ndarray, times: np.ndarray | None = None) -> None:
    """Write one field (``grid.shape``) or a stack of slices (``(k, *grid.shape)``).

    ``.csv`` paths get a text layout, anything else the binary layout: header
    ``(nx, ny, hx, hy, x0, y0, nslices)``, then slice times, then row-major values.
    """
    path = Path(path)
    vals = np.asarray(values, dtype=np.float64)
    stack = vals[None] if vals.ndim == 2 else vals
    if stack.shape[1:] != grid.shape:
        raise ValueError(f"values shape {vals.shape} does not match grid {grid.shape}")
    t = np.zeros(len(stack)) if times is None else np.asarray(times, dtype=np.float64)
    if path.suffix == ".csv":
        with path.open("w") as fh:
            fh.write(f"# nx={grid.nx},ny={grid.ny},hx={grid.hx!r},hy={grid.hy!r},"
                     f"x0={grid.origin[0]!r},y0={grid.origin[1]!r},nslices={len(stack)}\n")
            fh.write("# times=" + ",".join(repr(float(v)) for v in t) + "\n")
            for sl in stack:
                for row in sl:
                    fh.write(",".join(repr(float(v)) for v in row) + "\n")
        return
    with path.open("wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, grid.nx, grid.ny, grid.hx, grid.hy,
                              grid.origin[0], grid.origin[1], len(stack)))
        fh.write(t.astype("<f8").tobytes())
        fh.write(np.ascontiguousarray(stack, dtype="<f8").tobytes())


def read_field(path: str | Path) -> tuple[Grid2D, np.ndarray, np.ndarray]:
    """Inverse of :func:`write_field`; returns ``(grid, stack, times)``."""
    path = Path(path)
    if path.suffix == ".csv":
        with path.open() as fh:
            head = dict(kv.split("=") for kv in fh.readline()[2:].strip().split(","))
            times = np.array([float(v) for v in fh.readline().strip()[len("# times="):].split(",")])
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        grid = Grid2D(int(head["nx"]), int(head["ny"]), float(head["hx"]), float(head["hy"]),
                      (float(head["x0"]), float(head["y0"])))
        return grid, data.reshape(int(head["nslices"]), *grid.shape), times
    raw = path.read_bytes()
    magic, nx, ny, hx, hy, x0, y0, k = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"{path} is not a field file")
    grid = Grid2D(nx, ny, hx, hy, (x0, y0))
    off = _HEADER.size
    times = np.frombuffer(raw, "<f8", k, off).copy()
    off += 8 * k
    stack = np.frombuffer(raw, "<f8", k * (nx + 1) * (ny + 1), off).reshape(k, nx + 1, ny + 1).copy()
    return grid, stack, times
