"""Projected gradient descent for smooth convex objectives on a box."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .alphabb import RelaxedObjective
from .errors import NumericalError
from .interval import Box


@dataclass(frozen=True)
class WeightVector:
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.weights) == 0:
            raise ValueError("weight vector is empty")
        if any(not w > 0.0 for w in self.weights):
            raise ValueError(f"weights must be strictly positive: {self.weights}")
        if abs(sum(self.weights) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {sum(self.weights)!r}")

    @classmethod
    def uniform(cls, p: int) -> "WeightVector":
        w = [1.0 / p] * p
        w[-1] = 1.0 - sum(w[:-1])
        return cls(tuple(w))

    def __len__(self):
        return len(self.weights)

    def __iter__(self):
        return iter(self.weights)


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-8
    max_iter: int = 10000
    backtrack: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 80


@dataclass(frozen=True)
class SolveReport:
    minimizer: tuple[float, ...]
    value: float
    iterations: int
    converged: bool
    projected_gradient_norm: float


def project(x: Sequence[float], box: Box) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), box.lo, box.hi)


def solve_weighted_sum(
    relaxed: Sequence[RelaxedObjective],
    weights: WeightVector | Sequence[float],
    box: Box,
    opts: SolverOptions = SolverOptions(),
) -> SolveReport:
    """Minimize ``sum_j w_j r_j(x)`` over ``box``, starting from its midpoint.

    Each step tries a Barzilai-Borwein length first and then halves it until
    the Armijo condition along the projection arc holds.
    """
    weights = tuple(weights)
    if len(relaxed) != len(weights):
        raise ValueError(f"{len(relaxed)} objectives but {len(weights)} weights")
    lo, hi = np.array(box.lo), np.array(box.hi)

    def value(x):
        return sum(w * r(x) for w, r in zip(weights, relaxed))

    def gradient(x):
        return sum(w * r.gradient(x) for w, r in zip(weights, relaxed))

    def checked(v):
        if not math.isfinite(v):
            raise NumericalError(f"non-finite objective value on {box}")
        return v

    x = np.array(box.midpoint)
    fx = checked(value(x))
    g = gradient(x)
    pg = float(np.linalg.norm(x - np.clip(x - g, lo, hi)))
    step = 1.0
    it = 0
    while pg > opts.tol and it < opts.max_iter:
        it += 1
        accepted = False
        for _ in range(opts.max_backtracks):
            trial = np.clip(x - step * g, lo, hi)
            d = trial - x
            f_trial = value(trial)
            if math.isfinite(f_trial) and f_trial <= fx + opts.sufficient_decrease * float(g @ d):
                accepted = True
                break
            step *= opts.backtrack
        if not accepted:
            # no decrease representable in floating point; x is as good as we get
            break
        g_new = gradient(trial)
        s, y = trial - x, g_new - g
        x, fx, g = trial, checked(f_trial), g_new
        pg = float(np.linalg.norm(x - np.clip(x - g, lo, hi)))
        sy = float(s @ y)
        step = float(s @ s) / sy if sy > 0.0 else min(step * 2.0, 1e12)
    return SolveReport(
        minimizer=tuple(float(v) for v in x),
        value=float(fx),
        iterations=it,
        converged=pg <= opts.tol,
        projected_gradient_norm=pg,
    )
