"""Box-constrained multi-objective problems and their JSON file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Sequence

from .expr import Objective, parse
from .interval import Box

BUNDLED = ("ex51", "ex52", "ex53", "ex54")


class ProblemFileError(ValueError):
    pass


@dataclass
class Problem:
    name: str
    objectives: list[Objective]
    box: Box
    defaults: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if len(self.objectives) < 2:
            raise ValueError("a multi-objective problem needs at least two objectives")
        for f in self.objectives:
            if f.m != self.box.m:
                raise ValueError("objective dimension does not match the box")

    @property
    def m(self) -> int:
        return self.box.m

    @property
    def p(self) -> int:
        return len(self.objectives)

    @property
    def expressions(self) -> list[str]:
        return [f.text for f in self.objectives]

    def evaluate(self, x: Sequence[float]) -> tuple[float, ...]:
        return tuple(f(x) for f in self.objectives)

    @classmethod
    def from_strings(
        cls,
        objectives: Sequence[str],
        lo: Sequence[float],
        hi: Sequence[float],
        name: str = "problem",
        defaults: dict | None = None,
    ) -> "Problem":
        box = Box.from_bounds(lo, hi)
        objs = [Objective(parse(text, box.m), box.m, text) for text in objectives]
        return cls(name, objs, box, dict(defaults or {}))

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "m": self.m,
            "p": self.p,
            "objectives": self.expressions,
            "lo": list(self.box.lo),
            "hi": list(self.box.hi),
            "defaults": self.defaults,
        }


def problem_from_dict(data: dict) -> Problem:
    try:
        m, p = int(data["m"]), int(data["p"])
        texts = list(data["objectives"])
        lo = [float(v) for v in data["lo"]]
        hi = [float(v) for v in data["hi"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise ProblemFileError(f"malformed problem file: {exc}") from exc
    if len(texts) != p:
        raise ProblemFileError(f"p = {p} but {len(texts)} objective expressions given")
    if len(lo) != m or len(hi) != m:
        raise ProblemFileError(f"bounds must have length m = {m}")
    if any(not a < b for a, b in zip(lo, hi)):
        raise ProblemFileError("every lower bound must be strictly below its upper bound")
    try:
        problem = Problem.from_strings(texts, lo, hi, data.get("name", "problem"), data.get("defaults"))
    except ValueError as exc:
        raise ProblemFileError(str(exc)) from exc
    # every objective must admit an interval enclosure on the root box
    for f in problem.objectives:
        try:
            f.interval(problem.box)
        except ArithmeticError as exc:
            raise ProblemFileError(f"objective {f.text!r} is not defined on the whole box: {exc}") from exc
    return problem


def load_problem(source: str | Path) -> Problem:
    """Load a problem file, or a bundled problem by name (``ex51`` ... ``ex54``)."""
    source = str(source)
    if source in BUNDLED:
        text = resources.files("pcx.problems").joinpath(f"{source}.json").read_text()
    else:
        path = Path(source)
        if not path.is_file():
            raise ProblemFileError(f"no such problem file: {source}")
        text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}: invalid JSON ({exc})") from exc
    return problem_from_dict(data)
