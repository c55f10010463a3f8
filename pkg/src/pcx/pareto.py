"""Dominance relations and nondominated filtering."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np


class Relation(str, Enum):
    STRICT = "strict"  # u < v componentwise
    WEAK = "weak"  # u <= v componentwise and u != v
    EPS_STRICT = "eps_strict"
    EPS_WEAK = "eps_weak"


def _check(u, v):
    if len(u) != len(v):
        raise ValueError(f"objective vectors differ in length: {len(u)} vs {len(v)}")


def dominates_weak(u: Sequence[float], v: Sequence[float]) -> bool:
    _check(u, v)
    return all(a <= b for a, b in zip(u, v)) and any(a != b for a, b in zip(u, v))


def dominates_strict(u: Sequence[float], v: Sequence[float]) -> bool:
    _check(u, v)
    return all(a < b for a, b in zip(u, v))


def eps_dominates(u: Sequence[float], v: Sequence[float], eps: float, mode: str = "strict") -> bool:
    """Whether ``u + eps*e`` dominates ``v`` in the given mode ('strict' or 'weak')."""
    if eps < 0.0:
        raise ValueError("eps must be nonnegative")
    shifted = [a + eps for a in u]
    if mode == "strict":
        return dominates_strict(shifted, v)
    if mode == "weak":
        return dominates_weak(shifted, v)
    raise ValueError(f"unknown mode {mode!r}")


@dataclass(frozen=True)
class SolutionRecord:
    x: tuple[float, ...]
    fx: tuple[float, ...]
    box_index: int
    converged: bool = True


@dataclass
class ParetoArchive:
    records: list[SolutionRecord] = field(default_factory=list)
    relation: Relation = Relation.WEAK
    eps: float = 0.0

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def objectives(self) -> np.ndarray:
        return np.array([r.fx for r in self.records], dtype=float).reshape(len(self.records), -1)


def _dominated_mask(F: np.ndarray, relation: Relation, eps: float) -> np.ndarray:
    """Row k is True when some other row dominates it."""
    n = len(F)
    out = np.zeros(n, dtype=bool)
    if relation in (Relation.EPS_STRICT, Relation.EPS_WEAK):
        shift = eps
    else:
        shift = 0.0
    strict = relation in (Relation.STRICT, Relation.EPS_STRICT)
    G = F + shift
    for k in range(n):
        if strict:
            hit = np.all(G < F[k], axis=1)
        else:
            hit = np.all(G <= F[k], axis=1) & np.any(G != F[k], axis=1)
        hit[k] = False
        out[k] = bool(hit.any())
    return out


def filter_nondominated(
    records: Iterable[SolutionRecord],
    relation: Relation | str = Relation.WEAK,
    eps: float = 0.0,
) -> ParetoArchive:
    """Keep records that no other record dominates; input order is preserved."""
    relation = Relation(relation)
    records = list(records)
    if not records:
        return ParetoArchive([], relation, eps)
    F = np.array([r.fx for r in records], dtype=float)
    mask = _dominated_mask(F, relation, eps)
    kept = [r for r, dominated in zip(records, mask) if not dominated]
    return ParetoArchive(kept, relation, eps)


def nondominated_indices(F: np.ndarray, block: int = 512) -> np.ndarray:
    """Indices of rows of ``F`` not weakly dominated by another row, ascending.

    Rows are visited in (sum, lexicographic) order, in which a dominating row
    always comes first; each block is checked against the survivors so far
    and then against itself.
    """
    F = np.asarray(F, dtype=float)
    n = len(F)
    if n == 0:
        return np.zeros(0, dtype=int)
    order = np.lexsort(tuple(F.T[::-1]) + (F.sum(axis=1),))
    front = np.empty((0, F.shape[1]))
    kept: list[np.ndarray] = []
    for start in range(0, n, block):
        idx = order[start : start + block]
        B = F[idx]
        alive = np.ones(len(idx), dtype=bool)
        if len(front):
            le = np.all(front[None, :, :] <= B[:, None, :], axis=2)
            ne = np.any(front[None, :, :] != B[:, None, :], axis=2)
            alive &= ~np.any(le & ne, axis=1)
        le = np.all(B[None, :, :] <= B[:, None, :], axis=2)
        ne = np.any(B[None, :, :] != B[:, None, :], axis=2)
        alive &= ~np.any(le & ne, axis=1)
        kept.append(idx[alive])
        front = np.vstack([front, B[alive]])
    return np.sort(np.concatenate(kept))
