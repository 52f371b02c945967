"""Named initial/boundary data on their natural rectangles."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .params import Grid2D

PRESET_NAMES = ("linear", "quadratic_bowl", "saddle", "sine_mode", "random_smooth")


@dataclass(frozen=True)
class Preset:
    name: str
    extent: tuple[float, float, float, float]
    initial: Callable[[np.ndarray, np.ndarray], np.ndarray]
    # exact heat solution (p = 2, gamma = 0) when one is known
    heat_solution: Callable[[np.ndarray, np.ndarray, float], np.ndarray] | None = None

    def grid(self, n: int) -> Grid2D:
        x0, x1, y0, y1 = self.extent
        return Grid2D.from_extent(x0, x1, y0, y1, n)

    def sample(self, g: Grid2D) -> np.ndarray:
        X, Y = g.mesh()
        return np.asarray(self.initial(X, Y), dtype=np.float64) + 0.0 * X

    def translated(self, g: Grid2D, t: float, velocity=(0.3, -0.2)) -> np.ndarray:
        """``phi(x - c t)``, a smooth space-time field for time-derivative checks."""
        X, Y = g.mesh()
        return np.asarray(self.initial(X - velocity[0] * t, Y - velocity[1] * t), dtype=np.float64) + 0.0 * X


def _random_smooth(seed: int, modes: int = 3):
    rng = np.random.default_rng(seed)
    amp = rng.standard_normal((modes, modes))
    phase = rng.uniform(0.0, 2.0 * math.pi, (modes, modes))
    tilt = rng.standard_normal(2)

    def f(X, Y):
        out = tilt[0] * X + tilt[1] * Y
        for k in range(modes):
            for l in range(modes):
                out = out + amp[k, l] / (1.0 + k * k + l * l) * np.sin(math.pi * (k + 1) * X + phase[k, l]) \
                    * np.cos(math.pi * (l + 1) * Y)
        return out

    return f


def get_preset(name: str, seed: int = 0, amplitude: float = 1.0) -> Preset:
    """Preset ``name`` with its data multiplied by ``amplitude``."""
    pre = _base_preset(name, seed)
    if amplitude == 1.0:
        return pre
    f, sol = pre.initial, pre.heat_solution
    return Preset(pre.name, pre.extent, lambda X, Y: amplitude * f(X, Y),
                  None if sol is None else (lambda X, Y, t: amplitude * sol(X, Y, t)))


def _base_preset(name: str, seed: int) -> Preset:
    sq = (-1.0, 1.0, -1.0, 1.0)
    if name == "linear":
        return Preset(name, sq, lambda X, Y: X, lambda X, Y, t: X + 0.0 * Y)
    if name == "quadratic_bowl":
        return Preset(name, sq, lambda X, Y: 0.5 * (X * X + Y * Y))
    if name == "saddle":
        return Preset(name, sq, lambda X, Y: 0.5 * (X * X - Y * Y))
    if name == "sine_mode":
        return Preset(name, (0.0, math.pi, 0.0, math.pi), lambda X, Y: np.sin(X) * np.sin(Y),
                      lambda X, Y, t: math.exp(-2.0 * t) * np.sin(X) * np.sin(Y))
    if name == "random_smooth":
        return Preset(name, (0.0, 1.0, 0.0, 1.0), _random_smooth(seed))
    raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
