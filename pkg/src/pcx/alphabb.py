"""alphaBB convex underestimators on boxes, and the width thresholds that
decide whether a box is small enough to be solved instead of split."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import PreconditionError
from .expr import Expr, IntervalMatrix, Objective
from .interval import Box

ALPHA_MARGIN = 0.01
LIPSCHITZ_FLOOR = 1e-12


def _objective(f: Expr | Objective, m: int) -> Objective:
    return f if isinstance(f, Objective) else Objective(f, m)


def gershgorin_lambda_min(H: IntervalMatrix) -> float:
    """Lower bound on the smallest eigenvalue of every matrix enclosed by ``H``."""
    n = H.n
    best = math.inf
    for i in range(n):
        radius = sum(H[i, j].mag for j in range(n) if j != i)
        best = min(best, H[i, i].lo - radius)
    return best


def compute_alpha(f: Expr | Objective, box: Box) -> float:
    obj = _objective(f, box.m)
    return max(0.0, -gershgorin_lambda_min(obj.interval_hessian(box)))


@dataclass(frozen=True)
class AlphaProfile:
    alphas: tuple[float, ...]
    alpha_tilde: float

    @classmethod
    def on_root(cls, objectives: Sequence[Objective], root: Box) -> "AlphaProfile":
        alphas = tuple(compute_alpha(f, root) for f in objectives)
        return cls(alphas, max(alphas) + ALPHA_MARGIN)


@dataclass(frozen=True)
class RelaxedObjective:
    """``base(x) + alpha/2 * sum_i (a_i - x_i)(b_i - x_i)`` on ``box``."""

    base: Objective
    box: Box
    alpha: float

    def __post_init__(self):
        if not self.alpha >= 0.0:
            raise ValueError(f"alpha must be nonnegative, got {self.alpha}")

    @classmethod
    def build(cls, f: Expr | Objective, box: Box) -> "RelaxedObjective":
        obj = _objective(f, box.m)
        return cls(obj, box, compute_alpha(obj, box))

    def error_term(self, x: Sequence[float]) -> float:
        return sum((a - v) * (b - v) for a, b, v in zip(self.box.lo, self.box.hi, x))

    def __call__(self, x: Sequence[float]) -> float:
        return self.base(x) + 0.5 * self.alpha * self.error_term(x)

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        a, b = np.array(self.box.lo), np.array(self.box.hi)
        return self.base.gradient(x) + 0.5 * self.alpha * (2.0 * x - a - b)


def _check_inside(r: RelaxedObjective, x: Sequence[float]) -> None:
    if not r.box.contains(x):
        raise PreconditionError(f"point {list(x)} lies outside {r.box}")


def relax_eval(r: RelaxedObjective, x: Sequence[float]) -> float:
    _check_inside(r, x)
    return r(x)


def relax_grad(r: RelaxedObjective, x: Sequence[float]) -> np.ndarray:
    _check_inside(r, x)
    return r.gradient(x)


def lipschitz_bound(f: Expr | Objective, box: Box) -> float:
    """sqrt(m) times the largest partial-derivative magnitude over ``box``."""
    obj = _objective(f, box.m)
    biggest = max(g.mag for g in obj.interval_gradient(box))
    return max(math.sqrt(box.m) * biggest, LIPSCHITZ_FLOOR)


def width_threshold(lipschitz: Sequence[float], alpha_tilde: float, eps: float) -> float:
    """Largest admissible box width: the minimum over objectives of the
    positive root of ``alpha/2 w^2 + 4 L w = eps``."""
    if alpha_tilde <= 0.0 or eps <= 0.0:
        raise ValueError("alpha_tilde and eps must be positive")
    best = math.inf
    for L in lipschitz:
        r = 4.0 * L / alpha_tilde
        q = 2.0 * eps / alpha_tilde
        # -r + sqrt(r^2 + q), rewritten to avoid cancellation when r^2 >> q
        best = min(best, q / (r + math.sqrt(r * r + q)))
    return best


def condition_eps8(alpha_tilde: float, width: float, eps: float) -> bool:
    """Width condition ``alpha/8 * w^2 <= eps/8`` required of every initial box."""
    return alpha_tilde / 8.0 * width * width <= eps / 8.0
