"""Piecewise convexification driver, the t_eps estimator and the grid oracle."""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .alphabb import AlphaProfile, RelaxedObjective, condition_eps8, lipschitz_bound, width_threshold
from .errors import BudgetExceeded, DomainError, NumericalError
from .interval import Box, bisect, subdivide
from .pareto import ParetoArchive, Relation, SolutionRecord, nondominated_indices
from .problem import Problem, problem_from_dict
from .solver import SolverOptions, WeightVector, solve_weighted_sum

log = logging.getLogger(__name__)

Strategy = Literal["adaptive", "fixed"]


@dataclass(frozen=True)
class RunConfig:
    """Options of a run.

    ``strategy="adaptive"`` runs the algorithm as stated: t0 is raised to
    t_eps and boxes are bisected until their width is below the threshold
    L_tilde, with ``max_boxes`` bounding the total work. ``strategy="fixed"``
    solves one weighted-sum subproblem on every box of the level-t0
    subdivision, with no clamping and no further splitting; per-box flags
    record whether each box met the width conditions.
    """

    eps: float = 0.02
    weights: WeightVector | None = None
    t0: int | Literal["auto"] = "auto"
    solver: SolverOptions = SolverOptions()
    threads: int = 1
    strategy: Strategy = "adaptive"
    max_boxes: int = 1 << 20

    def __post_init__(self):
        if not self.eps > 0.0:
            raise ValueError("eps must be positive")
        if self.t0 != "auto" and (not isinstance(self.t0, int) or self.t0 < 0):
            raise ValueError(f"t0 must be a nonnegative integer or 'auto', got {self.t0!r}")
        if self.strategy == "fixed" and self.t0 == "auto":
            raise ValueError("the fixed strategy needs an explicit t0")
        if self.strategy not in ("adaptive", "fixed"):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        if self.threads < 1:
            raise ValueError("threads must be at least 1")


@dataclass(frozen=True)
class BoxResult:
    """Everything computed for one box of the worklist."""

    box: Box
    key: tuple[int, ...]
    alphas: tuple[float, ...]
    lipschitz: tuple[float, ...]
    l_tilde: float
    solved: bool
    x: tuple[float, ...] | None = None
    fx: tuple[float, ...] | None = None
    converged: bool = False
    iterations: int = 0

    @property
    def width(self) -> float:
        return self.box.width

    @property
    def width_ok(self) -> bool:
        return self.box.width <= self.l_tilde


@dataclass
class RunResult:
    solutions: ParetoArchive
    processed_boxes: list[Box]
    box_results: list[BoxResult]
    archive: list[SolutionRecord]
    t_eps: int
    t0_used: int
    t0_requested: int | str
    alpha_profile: AlphaProfile
    config: RunConfig
    stats: dict = field(default_factory=dict)

    @property
    def t0_clamped(self) -> bool:
        return self.t0_requested == "auto" or self.t0_used != self.t0_requested


def level_widths(root: Box, t: int) -> tuple[float, ...]:
    """Edge lengths shared by every box of ``subdivide(root, t)``."""
    widths = list(root.widths)
    for _ in range(t):
        l = widths.index(max(widths))
        widths[l] *= 0.5
    return tuple(widths)


def estimate_t_eps(alpha_tilde: float, root: Box, eps: float) -> int:
    """Smallest number of divisions after which every box meets ``alpha/8 w^2 <= eps/8``.

    Bisection only depends on edge lengths, so all boxes of one level share
    a shape and tracking a single width vector is exact.
    """
    if not alpha_tilde > 0.0 or not eps > 0.0:
        raise ValueError("alpha_tilde and eps must be positive")
    widths = list(root.widths)
    t = 0
    while not condition_eps8(alpha_tilde, math.sqrt(sum(w * w for w in widths)), eps):
        l = widths.index(max(widths))
        widths[l] *= 0.5
        t += 1
    return t


def process_box(
    problem: Problem,
    box: Box,
    key: tuple[int, ...],
    alpha_tilde: float,
    eps: float,
    weights: Sequence[float],
    opts: SolverOptions,
    force_solve: bool,
) -> BoxResult:
    try:
        relaxed = [RelaxedObjective.build(f, box) for f in problem.objectives]
        lipschitz = tuple(lipschitz_bound(f, box) for f in problem.objectives)
    except DomainError as exc:
        raise DomainError(f"interval evaluation failed on box {box}: {exc}") from exc
    alphas = tuple(r.alpha for r in relaxed)
    l_tilde = width_threshold(lipschitz, alpha_tilde, eps)
    if not (force_solve or box.width <= l_tilde):
        return BoxResult(box, key, alphas, lipschitz, l_tilde, solved=False)
    try:
        report = solve_weighted_sum(relaxed, weights, box, opts)
        x, converged, iters = report.minimizer, report.converged, report.iterations
    except NumericalError:
        x, converged, iters = box.midpoint, False, 0
    fx = problem.evaluate(x)
    return BoxResult(box, key, alphas, lipschitz, l_tilde, True, x, fx, converged, iters)


# Worker processes rebuild the problem from its file form once; compiled
# expressions do not pickle.
_WORKER: dict = {}


def _worker_init(problem_data: dict, alpha_tilde, eps, weights, opts, force):
    _WORKER.update(
        problem=problem_from_dict(problem_data),
        args=(alpha_tilde, eps, weights, opts, force),
    )


def _worker_chunk(items):
    problem = _WORKER["problem"]
    return [process_box(problem, box, key, *_WORKER["args"]) for box, key in items]


def _map_boxes(problem, items, args, pool):
    if pool is None:
        return [process_box(problem, box, key, *args) for box, key in items]
    chunk = max(1, math.ceil(len(items) / (8 * pool._max_workers)))
    chunks = [items[i : i + chunk] for i in range(0, len(items), chunk)]
    out = []
    for part in pool.map(_worker_chunk, chunks):
        out.extend(part)
    return out


def run(problem: Problem, config: RunConfig = RunConfig()) -> RunResult:
    started = time.perf_counter()
    weights = config.weights or WeightVector.uniform(problem.p)
    if len(weights) != problem.p:
        raise ValueError(f"{len(weights)} weights for {problem.p} objectives")
    root = problem.box

    profile = AlphaProfile.on_root(problem.objectives, root)
    t_eps = estimate_t_eps(profile.alpha_tilde, root, config.eps)
    if config.strategy == "fixed":
        t0 = config.t0
    else:
        t0 = t_eps if config.t0 == "auto" else max(config.t0, t_eps)
        if config.t0 != "auto" and t0 != config.t0:
            log.info("t0=%d is below t_eps=%d; using t0=%d", config.t0, t_eps, t0)
    force = config.strategy == "fixed"

    if (1 << t0) > config.max_boxes:
        raise BudgetExceeded(
            f"{problem.name}: the initial subdivision needs 2^{t0} boxes "
            f"(t_eps={t_eps}, alpha_tilde={profile.alpha_tilde:.6g}), over the budget of {config.max_boxes}"
        )
    worklist = [(b, (k,)) for k, b in enumerate(subdivide(root, t0).boxes)]
    args = (profile.alpha_tilde, config.eps, tuple(weights), config.solver, force)

    pool = None
    if config.threads > 1:
        pool = ProcessPoolExecutor(
            max_workers=config.threads,
            initializer=_worker_init,
            initargs=(problem.to_dict(), *args),
        )
    done: list[BoxResult] = []
    seen = len(worklist)
    splits = 0
    try:
        while worklist:
            results = _map_boxes(problem, worklist, args, pool)
            worklist = []
            for res in results:
                if res.solved:
                    done.append(res)
                    continue
                splits += 1
                first, second = bisect(res.box)
                worklist.append((first, res.key + (0,)))
                worklist.append((second, res.key + (1,)))
            seen += len(worklist)
            if seen > config.max_boxes:
                raise BudgetExceeded(
                    f"{problem.name}: worklist exceeded {config.max_boxes} boxes "
                    f"({len(done)} solved, {len(worklist)} pending)"
                )
    finally:
        if pool is not None:
            pool.shutdown()

    # depth-first order of the subdivision tree, independent of processing order
    done.sort(key=lambda r: r.key)
    archive = [SolutionRecord(r.x, r.fx, i, r.converged) for i, r in enumerate(done)]
    F = np.array([rec.fx for rec in archive], dtype=float)
    keep = nondominated_indices(F)
    solutions = ParetoArchive([archive[i] for i in keep], Relation.WEAK)

    stats = {
        "boxes_solved": len(done),
        "boxes_split": splits,
        "non_converged": sum(not r.converged for r in done),
        "boxes_violating_width_threshold": sum(not r.width_ok for r in done),
        "boxes_violating_condition_12": sum(
            not condition_eps8(profile.alpha_tilde, r.width, config.eps) for r in done
        ),
        "wall_time_s": time.perf_counter() - started,
    }
    return RunResult(
        solutions=solutions,
        processed_boxes=[r.box for r in done],
        box_results=done,
        archive=archive,
        t_eps=t_eps,
        t0_used=t0,
        t0_requested=config.t0,
        alpha_profile=profile,
        config=config,
        stats=stats,
    )


# ------------------------------------------------------------------ oracle


@dataclass
class GridResult:
    points: np.ndarray  # (n, m)
    values: np.ndarray  # (n, p)
    resolution: int
    spacing: tuple[float, ...]
    skipped: int = 0

    def __len__(self):
        return len(self.points)


def grid_oracle(problem: Problem, resolution: int) -> GridResult:
    """Evaluate the objectives on a uniform grid with ``resolution`` points per axis."""
    if resolution < 2:
        raise ValueError("grid resolution must be at least 2")
    axes = [np.linspace(d.lo, d.hi, resolution) for d in problem.box]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([a.ravel() for a in mesh])  # (m, n)
    vals = np.stack([f.value.vectorized(pts) for f in problem.objectives], axis=1)
    ok = np.all(np.isfinite(vals), axis=1)
    skipped = int((~ok).sum())
    if skipped:
        log.warning("grid oracle skipped %d points outside the objectives' domain", skipped)
    spacing = tuple((d.hi - d.lo) / (resolution - 1) for d in problem.box)
    return GridResult(pts.T[ok], vals[ok], resolution, spacing, skipped)


def grid_lipschitz(grid: GridResult, m: int) -> np.ndarray:
    """Per-objective Lipschitz estimate from neighbouring grid differences.

    Uses sqrt(m) times the largest one-axis difference quotient, the same
    form as the interval bound used by the solver.
    """
    if grid.skipped:
        raise ValueError("grid has holes; neighbour differences are undefined")
    shape = (grid.resolution,) * m
    out = np.zeros(grid.values.shape[1])
    for j in range(grid.values.shape[1]):
        V = grid.values[:, j].reshape(shape)
        for k in range(m):
            if grid.spacing[k] > 0:
                q = np.abs(np.diff(V, axis=k)).max() / grid.spacing[k]
                out[j] = max(out[j], q)
    return math.sqrt(m) * out


@dataclass
class Certification:
    n_candidates: int
    n_grid: int
    eps: float
    slack: tuple[float, ...]
    worst_margin: float  # max over candidates and grid points of min_i (f_i(x) - f_i(y) - eps)
    raw_violations: list[tuple[int, int, float]]  # eps-dominated before slack
    violations: list[tuple[int, int, float]]  # eps-dominated beyond slack

    @property
    def passed(self) -> bool:
        return not self.violations


def _reduce_grid(values: np.ndarray) -> np.ndarray:
    if values.shape[1] <= 3:
        return values[nondominated_indices(values)]
    return values


def certify_eps_efficient(
    candidates: np.ndarray | ParetoArchive,
    grid: GridResult | np.ndarray,
    eps: float,
    slack: Sequence[float] | None = None,
) -> Certification:
    """Check that no grid point y satisfies ``f(y) + eps*e <= f(x)`` (weak dominance).

    Only grid-nondominated rows can witness a violation, so the grid is
    reduced to its front first when that is cheap.
    """
    C = candidates.objectives() if isinstance(candidates, ParetoArchive) else np.asarray(candidates, float)
    G = grid.values if isinstance(grid, GridResult) else np.asarray(grid, float)
    p = G.shape[1] if G.ndim == 2 else 0
    slack = np.zeros(p) if slack is None else np.asarray(slack, dtype=float)
    raw, real = [], []
    worst = -math.inf
    if len(C) and len(G):
        front = _reduce_grid(G)
        for k, fx in enumerate(C):
            diff = fx - front - eps  # (n, p); >= 0 everywhere means eps-dominated
            score = diff.min(axis=1)
            y = int(score.argmax())
            worst = max(worst, float(score[y]))
            hit = np.all(diff >= 0.0, axis=1) & np.any(diff > 0.0, axis=1)
            if hit.any():
                raw.append((k, int(np.flatnonzero(hit)[0]), float(score[y])))
            beyond = (diff - slack).min(axis=1)
            if (beyond > 0.0).any():
                real.append((k, int(beyond.argmax()), float(beyond.max())))
    return Certification(len(C), len(G), eps, tuple(float(s) for s in slack), worst, raw, real)
