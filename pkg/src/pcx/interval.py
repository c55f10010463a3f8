"""Interval arithmetic, boxes and longest-edge subdivision.

Endpoints are computed with ordinary round-to-nearest floating point; no
outward rounding is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import DegenerateBoxError, DomainError

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


def _coerce(value) -> "Interval":
    if isinstance(value, Interval):
        return value
    v = float(value)
    return Interval(v, v)


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)):
            raise DomainError(f"non-finite interval endpoint [{self.lo}, {self.hi}]")
        if self.lo > self.hi:
            raise ValueError(f"lower endpoint {self.lo} exceeds upper endpoint {self.hi}")

    @classmethod
    def point(cls, value: float) -> "Interval":
        v = float(value)
        return cls(v, v)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    @property
    def mag(self) -> float:
        """Largest absolute value attained in the interval."""
        return max(abs(self.lo), abs(self.hi))

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi

    def __contains__(self, value) -> bool:
        if isinstance(value, Interval):
            return self.lo <= value.lo and value.hi <= self.hi
        return self.contains(value)

    def intersect(self, other: "Interval") -> "Interval":
        lo = max(self.lo, other.lo)
        hi = min(self.hi, other.hi)
        if lo > hi:
            raise ValueError(f"empty intersection of {self} and {other}")
        return Interval(lo, hi)

    def __add__(self, other):
        return iv_add(self, _coerce(other))

    def __radd__(self, other):
        return iv_add(_coerce(other), self)

    def __sub__(self, other):
        return iv_sub(self, _coerce(other))

    def __rsub__(self, other):
        return iv_sub(_coerce(other), self)

    def __mul__(self, other):
        return iv_mul(self, _coerce(other))

    def __rmul__(self, other):
        return iv_mul(_coerce(other), self)

    def __truediv__(self, other):
        return iv_div(self, _coerce(other))

    def __rtruediv__(self, other):
        return iv_div(_coerce(other), self)

    def __neg__(self):
        return Interval(-self.hi, -self.lo)

    def __pos__(self):
        return self

    def __pow__(self, n):
        return iv_pow(self, n)

    def __repr__(self):
        return f"Interval({self.lo!r}, {self.hi!r})"


def iv_add(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo + b.lo, a.hi + b.hi)


def iv_sub(a: Interval, b: Interval) -> Interval:
    return Interval(a.lo - b.hi, a.hi - b.lo)


def iv_mul(a: Interval, b: Interval) -> Interval:
    products = (a.lo * b.lo, a.lo * b.hi, a.hi * b.lo, a.hi * b.hi)
    return Interval(min(products), max(products))


def iv_div(a: Interval, b: Interval) -> Interval:
    if b.lo <= 0.0 <= b.hi:
        raise DomainError(f"division by interval {b} containing zero")
    return iv_mul(a, Interval(1.0 / b.hi, 1.0 / b.lo))


def iv_pow(a: Interval, n: int) -> Interval:
    if int(n) != n or n < 0:
        raise ValueError(f"interval power needs a nonnegative integer exponent, got {n}")
    n = int(n)
    if n == 0:
        return Interval(1.0, 1.0)
    if n == 1:
        return a
    lo_n, hi_n = a.lo**n, a.hi**n
    if n % 2 == 1:
        return Interval(lo_n, hi_n)
    if a.lo >= 0.0:
        return Interval(lo_n, hi_n)
    if a.hi <= 0.0:
        return Interval(hi_n, lo_n)
    return Interval(0.0, max(lo_n, hi_n))


def iv_exp(a: Interval) -> Interval:
    try:
        return Interval(math.exp(a.lo), math.exp(a.hi))
    except OverflowError as exc:
        raise DomainError(f"exp overflow on {a}") from exc


def iv_sqrt(a: Interval) -> Interval:
    if a.lo < 0.0:
        raise DomainError(f"sqrt of interval {a} with a negative part")
    return Interval(math.sqrt(a.lo), math.sqrt(a.hi))


def iv_sin(a: Interval) -> Interval:
    if a.width >= TWO_PI:
        return Interval(-1.0, 1.0)
    # shift so that lo lies in [0, 2pi); hi then lies below 4pi
    shift = math.floor(a.lo / TWO_PI) * TWO_PI
    lo, hi = a.lo - shift, a.hi - shift
    s_lo, s_hi = math.sin(a.lo), math.sin(a.hi)
    out_lo, out_hi = min(s_lo, s_hi), max(s_lo, s_hi)
    # maxima at pi/2 + 2k pi, minima at 3pi/2 + 2k pi
    for k in range(2):
        if lo <= HALF_PI + k * TWO_PI <= hi:
            out_hi = 1.0
        if lo <= 3.0 * HALF_PI + k * TWO_PI <= hi:
            out_lo = -1.0
    return Interval(out_lo, out_hi)


@dataclass(frozen=True, slots=True)
class Box:
    dims: tuple[Interval, ...]

    def __post_init__(self):
        if len(self.dims) == 0:
            raise ValueError("a box needs at least one dimension")

    @classmethod
    def from_bounds(cls, lo: Sequence[float], hi: Sequence[float]) -> "Box":
        if len(lo) != len(hi):
            raise ValueError("lower and upper bound vectors differ in length")
        return cls(tuple(Interval(float(a), float(b)) for a, b in zip(lo, hi)))

    @property
    def m(self) -> int:
        return len(self.dims)

    @property
    def lo(self) -> tuple[float, ...]:
        return tuple(d.lo for d in self.dims)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(d.hi for d in self.dims)

    @property
    def widths(self) -> tuple[float, ...]:
        return tuple(d.width for d in self.dims)

    @property
    def midpoint(self) -> tuple[float, ...]:
        return tuple(d.mid for d in self.dims)

    @property
    def width(self) -> float:
        """Euclidean length of the diagonal, ||b - a||."""
        return math.sqrt(sum(w * w for w in self.widths))

    @property
    def volume(self) -> float:
        return math.prod(self.widths)

    def contains(self, x: Sequence[float]) -> bool:
        return len(x) == self.m and all(d.lo <= v <= d.hi for d, v in zip(self.dims, x))

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.dims)

    def __len__(self) -> int:
        return len(self.dims)

    def __getitem__(self, i: int) -> Interval:
        return self.dims[i]


def longest_edge(box: Box) -> int:
    """Lowest index among the dimensions of maximal width."""
    widths = box.widths
    return widths.index(max(widths))


def bisect(box: Box) -> tuple[Box, Box]:
    l = longest_edge(box)
    edge = box.dims[l]
    if edge.width <= 0.0:
        raise DegenerateBoxError(f"cannot bisect degenerate box {box}")
    mid = edge.mid
    lower = box.dims[:l] + (Interval(edge.lo, mid),) + box.dims[l + 1 :]
    upper = box.dims[:l] + (Interval(mid, edge.hi),) + box.dims[l + 1 :]
    return Box(lower), Box(upper)


@dataclass(frozen=True)
class Subdivision:
    t: int
    boxes: tuple[Box, ...]

    def __len__(self):
        return len(self.boxes)


def _divide(box: Box, t: int) -> Iterator[Box]:
    if t == 0:
        yield box
        return
    first, second = bisect(box)
    yield from _divide(first, t - 1)
    yield from _divide(second, t - 1)


def subdivide(root: Box, t: int) -> Subdivision:
    if t < 0:
        raise ValueError("number of divisions must be nonnegative")
    return Subdivision(t, tuple(_divide(root, t)))


def subdivision_length(boxes: Subdivision | Iterable[Box]) -> float:
    """Maximum squared diagonal over the boxes."""
    if isinstance(boxes, Subdivision):
        boxes = boxes.boxes
    return max(sum(w * w for w in b.widths) for b in boxes)
