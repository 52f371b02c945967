"""Certified uniform positive definiteness of M over kappa in [0, 1]."""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .. import kernels
from ..params import ParamSet, WeightRecipe
from .interval import Interval, pbounds, pmul, pscale, psub, padd

CONDITION_NAMES = ("2c1+c2", "c3", "det")
METHODS = {"lipschitz_sweep": kernels.MODE_LIPSCHITZ, "interval_sweep": kernels.MODE_INTERVAL}
VERDICTS = {kernels.ACCEPT: "accept", kernels.REJECT: "reject", kernels.INCONCLUSIVE: "inconclusive"}
LAMBDA_NOTE = ("margin_c > 0 bounds 2c1+c2, c3 and det M below uniformly in kappa, "
               "so the quadratic form is uniformly positive definite; lambda itself is not constructed")


def condition_polys(w: WeightRecipe, params: ParamSet) -> list[list[Interval]]:
    """Interval-coefficient polynomials in kappa (ascending) for ``2c1+c2``, ``c3`` and ``det M``."""
    I = Interval.point
    w1, w2, w3, w4 = (I(x) for x in w.as_tuple())
    p, g, s = I(params.p), I(params.gamma), I(params.s)
    theta = [I(1.0), I(-1.0)]
    c1 = [w1, w3]
    c2 = pmul([w1 * (p - 2.0 + s), w3 * (p - 4.0 + s)], theta)
    c3 = [w2, w4]
    c4 = pmul([w2 * (p - 2.0 + s - g), w4 * (p - 4.0 + s - g)], theta)
    P = [(p - 2.0) + 1.0, -(p - 2.0)]
    c34 = padd(c3, c4)
    two_c1_c2 = padd(pscale(c1, 2.0), c2)
    m12 = pscale(psub(padd(pmul(c3, P), c34), two_c1_c2), 0.5)
    m22 = pmul(c34, P)
    det = psub(pmul(c3, m22), pmul(m12, m12))
    return [two_c1_c2, c3, det]


def _stack(polys: list[list[Interval]]) -> tuple[np.ndarray, np.ndarray]:
    deg = max(len(q) for q in polys)
    lo = np.zeros((len(polys), deg))
    hi = np.zeros((len(polys), deg))
    for i, q in enumerate(polys):
        ql, qh = pbounds(q)
        lo[i, : len(q)] = ql
        hi[i, : len(q)] = qh
    return lo, hi


@dataclass
class Certificate:
    params: ParamSet
    weights: WeightRecipe
    verdict: str
    margin_c: float
    target_margin: float
    method: str
    cells: np.ndarray = field(repr=False)
    witness: dict | None = None
    lambda_note: str = LAMBDA_NOTE
    metadata: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return {"accept": 0, "reject": 1, "inconclusive": 2}[self.verdict]

    def covers_unit_interval(self) -> bool:
        if len(self.cells) == 0:
            return False
        a, b = self.cells[:, 0], self.cells[:, 1]
        return a[0] == 0.0 and b[-1] == 1.0 and bool(np.all(a[1:] == b[:-1]))

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "params": json.loads(self.params.to_json()),
            "weights": self.weights.to_dict(),
            "margin_c": self.margin_c,
            "target_margin": self.target_margin,
            "method": self.method,
            "cells": [[float(a), float(b), float(lb)] for a, b, lb in self.cells],
            "witness": self.witness,
            "lambda_note": self.lambda_note,
            "metadata": self.metadata,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def certify(w: WeightRecipe, params: ParamSet, target_margin: float = 1e-4,
            method: str = "lipschitz_sweep", max_depth: int = 40) -> Certificate:
    """Bisect kappa in [0, 1] and bound ``min{2c1+c2, c3, det M}`` below on each cell.

    Accepts iff every cell has a certified lower bound ``>= target_margin``;
    rejects when a certified upper bound at some kappa falls below it.
    """
    if not target_margin > 0:
        raise ValueError("target_margin must be positive")
    if not all(np.isfinite(w.as_tuple())):
        raise ValueError("weights must be finite")
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {sorted(METHODS)}")
    lo, hi = _stack(condition_polys(w, params))
    verdict, cells, (wk, wc, wv) = kernels.sweep(lo, hi, target_margin, max_depth, METHODS[method])
    cells = np.asarray(cells, dtype=float).reshape(-1, 3)
    verdict = VERDICTS[verdict]
    witness = None
    if verdict != "accept":
        witness = {"kappa": float(wk), "condition": CONDITION_NAMES[int(wc)], "value": float(wv),
                   "bound": "upper" if verdict == "reject" else "lower"}
    margin = float(cells[:, 2].min()) if verdict == "accept" else float(wv)
    return Certificate(params, w, verdict, margin, target_margin, method, cells, witness)


def certify_thm11(p: float, gamma: float, target_margin: float = 1e-4, **kw) -> Certificate:
    from .algebra import thm11_params

    return certify(WeightRecipe.thm11(p, gamma), thm11_params(p, gamma), target_margin, **kw)
