"""Command line front end: ``pcx solve | oracle | verify | front``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .algorithm import RunConfig, RunResult, certify_eps_efficient, grid_lipschitz, grid_oracle, run
from .errors import BudgetExceeded, DomainError, ParseError
from .pareto import SolutionRecord, filter_nondominated, nondominated_indices
from .problem import Problem, ProblemFileError, load_problem
from .solver import WeightVector

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_DOMAIN = 2
EXIT_VIOLATION = 3
EXIT_BUDGET = 4

log = logging.getLogger("pcx")


class UsageError(Exception):
    pass


def fmt(v: float) -> str:
    return f"{v:.17g}"


# ---------------------------------------------------------------- file io


def write_solutions(path: Path, records: Sequence[SolutionRecord], m: int, p: int) -> None:
    header = ["box_index"] + [f"x_{i}" for i in range(1, m + 1)] + [f"f_{j}" for j in range(1, p + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header + ["converged"])
        for r in records:
            w.writerow([r.box_index, *map(fmt, r.x), *map(fmt, r.fx), int(r.converged)])


def read_solutions(path: Path) -> tuple[list[SolutionRecord], int, int]:
    """Read a solutions table; returns the records and the (m, p) found in its header."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        return [], 0, 0
    header = rows[0]
    xs = [k for k, h in enumerate(header) if h.startswith("x_")]
    fs = [k for k, h in enumerate(header) if h.startswith("f_")]
    if not fs:
        raise UsageError(f"{path}: no f_1..f_p columns in header")
    bi = header.index("box_index") if "box_index" in header else None
    cv = header.index("converged") if "converged" in header else None
    out = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            out.append(
                SolutionRecord(
                    x=tuple(float(row[k]) for k in xs),
                    fx=tuple(float(row[k]) for k in fs),
                    box_index=int(row[bi]) if bi is not None else -1,
                    converged=bool(int(row[cv])) if cv is not None else True,
                )
            )
        except (ValueError, IndexError) as exc:
            raise UsageError(f"{path}:{line}: malformed row ({exc})") from exc
    return out, len(xs), len(fs)


def write_boxes(path: Path, result: RunResult, m: int, p: int) -> None:
    header = (
        ["box_index"]
        + [f"lo_{i}" for i in range(1, m + 1)]
        + [f"hi_{i}" for i in range(1, m + 1)]
        + [f"alpha_{j}" for j in range(1, p + 1)]
        + ["width", "L_tilde"]
    )
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for k, res in enumerate(result.box_results):
            w.writerow(
                [k, *map(fmt, res.box.lo), *map(fmt, res.box.hi), *map(fmt, res.alphas), fmt(res.width), fmt(res.l_tilde)]
            )


def write_points(path: Path, X: np.ndarray, F: np.ndarray) -> None:
    m, p = X.shape[1], F.shape[1]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x_{i}" for i in range(1, m + 1)] + [f"f_{j}" for j in range(1, p + 1)])
        for x, f in zip(X, F):
            w.writerow([*map(fmt, x), *map(fmt, f)])


def run_metadata(problem: Problem, result: RunResult) -> dict:
    cfg = result.config
    return {
        "problem": problem.name,
        "m": problem.m,
        "p": problem.p,
        "eps": cfg.eps,
        "lambda": list(cfg.weights or WeightVector.uniform(problem.p)),
        "strategy": cfg.strategy,
        "t_eps": result.t_eps,
        "t0_requested": cfg.t0,
        "t0_used": result.t0_used,
        "t0_clamped": cfg.strategy == "adaptive" and cfg.t0 != "auto" and result.t0_used != cfg.t0,
        "alpha_root": list(result.alpha_profile.alphas),
        "alpha_tilde": result.alpha_profile.alpha_tilde,
        "solver": {"tol": cfg.solver.tol, "max_iter": cfg.solver.max_iter},
        "n_solutions": len(result.solutions),
        "n_boxes": len(result.processed_boxes),
        "stats": result.stats,
    }


# ---------------------------------------------------------------- commands


def parse_lambda(text: str, p: int) -> WeightVector:
    try:
        weights = tuple(float(v) for v in text.split(","))
    except ValueError as exc:
        raise UsageError(f"--lambda: {exc}") from exc
    if len(weights) != p:
        raise UsageError(f"--lambda needs {p} weights, got {len(weights)}")
    if abs(sum(weights) - 1.0) > 1e-9:
        raise UsageError(f"--lambda weights sum to {sum(weights)!r}, not 1")
    if any(not w > 0 for w in weights):
        raise UsageError("--lambda weights must be strictly positive")
    # absorb the tolerated rounding into the last weight
    weights = weights[:-1] + (1.0 - sum(weights[:-1]),)
    return WeightVector(weights)


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("PCX_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise UsageError(f"PCX_THREADS must be an integer, got {env!r}") from exc
    return 1


def cmd_solve(args) -> int:
    problem = load_problem(args.problem)
    defaults = problem.defaults
    eps = args.eps if args.eps is not None else float(defaults.get("eps", 0.02))
    weights = parse_lambda(args.weights, problem.p) if args.weights else WeightVector.uniform(problem.p)
    if args.t0 is not None:
        t0 = "auto" if args.t0 == "auto" else int(args.t0)
    else:
        t0 = defaults.get("t0", "auto")
    config = RunConfig(
        eps=eps,
        weights=weights,
        t0=t0,
        threads=_threads(args),
        strategy=args.strategy,
        max_boxes=args.max_boxes,
    )
    result = run(problem, config)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_solutions(out / "solutions.csv", result.solutions.records, problem.m, problem.p)
    write_boxes(out / "boxes.csv", result, problem.m, problem.p)
    meta = run_metadata(problem, result)
    (out / "meta.json").write_text(json.dumps(meta, indent=2) + "\n")
    if meta["t0_clamped"]:
        log.warning("t0=%s raised to t_eps=%d", t0, result.t0_used)
    print(
        f"{problem.name}: {len(result.solutions)} solutions from {len(result.processed_boxes)} boxes "
        f"(t_eps={result.t_eps}, t0={result.t0_used}) -> {out}"
    )
    return EXIT_OK


def cmd_oracle(args) -> int:
    problem = load_problem(args.problem)
    grid = grid_oracle(problem, args.resolution)
    if args.eps and args.eps > 0:
        records = [SolutionRecord(tuple(x), tuple(f), -1) for x, f in zip(grid.points, grid.values)]
        keep_records = filter_nondominated(records, "eps_weak", args.eps).records
        X = np.array([r.x for r in keep_records]).reshape(-1, problem.m)
        F = np.array([r.fx for r in keep_records]).reshape(-1, problem.p)
    else:
        keep = nondominated_indices(grid.values)
        X, F = grid.points[keep], grid.values[keep]
    write_points(Path(args.out), X, F)
    print(f"{problem.name}: {len(F)} nondominated grid points of {len(grid)} ({grid.skipped} skipped) -> {args.out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    problem = load_problem(args.problem)
    records, _, p = read_solutions(Path(args.solutions))
    if not records:
        print(f"warning: {args.solutions} has no rows; nothing to verify", file=sys.stderr)
        return EXIT_OK
    if p != problem.p:
        raise UsageError(f"solutions have {p} objective columns, problem has {problem.p}")
    grid = grid_oracle(problem, args.resolution)
    h = max(grid.spacing)
    slack = args.slack_factor * h * grid_lipschitz(grid, problem.m) if args.slack_factor > 0 else None
    F = np.array([r.fx for r in records])
    cert = certify_eps_efficient(F, grid, args.eps, slack)
    print(
        f"{problem.name}: {cert.n_candidates} candidates vs {cert.n_grid} grid points, eps={args.eps}, "
        f"worst margin {cert.worst_margin:.6g}, {len(cert.raw_violations)} within slack, "
        f"{len(cert.violations)} violations"
    )
    for k, _, excess in cert.violations:
        r = records[k]
        print(f"  violation: row {k + 2} (box_index {r.box_index}) f={list(r.fx)} exceeds slack by {excess:.6g}")
    return EXIT_OK if cert.passed else EXIT_VIOLATION


def cmd_front(args) -> int:
    with open(args.solutions, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise UsageError(f"{args.solutions} is empty")
    header, body = rows[0], [r for r in rows[1:] if r]
    fs = [k for k, h in enumerate(header) if h.startswith("f_")]
    if not fs:
        raise UsageError(f"{args.solutions}: no f_1..f_p columns in header")
    try:
        F = np.array([[float(r[k]) for k in fs] for r in body]).reshape(len(body), len(fs))
    except (ValueError, IndexError) as exc:
        raise UsageError(f"{args.solutions}: malformed row ({exc})") from exc
    keep = nondominated_indices(F)
    out = args.out or str(Path(args.solutions).with_name("front.csv"))
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(body[k] for k in keep)
    print(f"{len(keep)} of {len(body)} rows nondominated -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pcx", description="Piecewise convexification for box-constrained multi-objective problems.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run the algorithm on a problem file")
    s.add_argument("problem", help="problem JSON file or bundled name (ex51..ex54)")
    s.add_argument("--eps", type=float)
    s.add_argument("--lambda", dest="weights", help="comma-separated weights summing to 1")
    s.add_argument("--t0", help="initial number of divisions, or 'auto'")
    s.add_argument("--out-dir", default="pcx-out")
    s.add_argument("--threads", type=int)
    s.add_argument("--strategy", choices=("adaptive", "fixed"), default="adaptive")
    s.add_argument("--max-boxes", type=int, default=1 << 20)
    s.set_defaults(func=cmd_solve)

    o = sub.add_parser("oracle", help="nondominated points of a uniform grid")
    o.add_argument("problem")
    o.add_argument("--resolution", type=int, default=100)
    o.add_argument("--eps", type=float, default=0.0, help="keep points not eps-dominated instead")
    o.add_argument("--out", default="oracle_front.csv")
    o.set_defaults(func=cmd_oracle)

    v = sub.add_parser("verify", help="check eps-efficiency of solutions against a grid")
    v.add_argument("solutions")
    v.add_argument("problem")
    v.add_argument("--resolution", type=int, default=100)
    v.add_argument("--eps", type=float, default=0.02)
    v.add_argument(
        "--slack-factor",
        type=float,
        default=2.0,
        help="violations count only beyond factor * grid spacing * Lipschitz estimate per objective",
    )
    v.set_defaults(func=cmd_verify)

    f = sub.add_parser("front", help="filter a solutions table to its nondominated rows")
    f.add_argument("solutions")
    f.add_argument("--out")
    f.set_defaults(func=cmd_front)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (ProblemFileError, ParseError, UsageError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
