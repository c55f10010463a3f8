"""Scalar expression trees: parsing, evaluation, interval enclosure and
symbolic derivatives.

Grammar::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' integer)?
    atom   := number | 'pi' | var | func '(' expr ')' | '(' expr ')'
    var    := 'x' integer
    func   := 'exp' | 'sin' | 'sqrt'

``^`` binds tighter than unary minus, so ``-x1^2`` is ``-(x1^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from .errors import DomainError, ParseError
from .interval import HALF_PI, Box, Interval, iv_exp, iv_sin, iv_sqrt


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return add(self, _wrap(other))

    def __radd__(self, other):
        return add(_wrap(other), self)

    def __sub__(self, other):
        return sub(self, _wrap(other))

    def __rsub__(self, other):
        return sub(_wrap(other), self)

    def __mul__(self, other):
        return mul(self, _wrap(other))

    def __rmul__(self, other):
        return mul(_wrap(other), self)

    def __truediv__(self, other):
        return div(self, _wrap(other))

    def __neg__(self):
        return neg(self)

    def __pow__(self, n):
        return power(self, n)


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based


@dataclass(frozen=True)
class Add(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Sub(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Mul(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Div(Expr):
    left: Expr
    right: Expr


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int


@dataclass(frozen=True)
class Neg(Expr):
    arg: Expr


@dataclass(frozen=True)
class Exp(Expr):
    arg: Expr


@dataclass(frozen=True)
class Sin(Expr):
    arg: Expr


@dataclass(frozen=True)
class Cos(Expr):
    """Only produced by differentiating ``sin``; not part of the input grammar."""

    arg: Expr


@dataclass(frozen=True)
class Sqrt(Expr):
    arg: Expr


ZERO = Const(0.0)
ONE = Const(1.0)


def _wrap(value) -> Expr:
    return value if isinstance(value, Expr) else Const(float(value))


def _is_const(e: Expr, value: float | None = None) -> bool:
    return isinstance(e, Const) and (value is None or e.value == value)


# Smart constructors with 0/1 folding; they keep derivative trees small.


def add(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return b
    if _is_const(b, 0.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value + b.value)
    return Add(a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if _is_const(b, 0.0):
        return a
    if _is_const(a, 0.0):
        return neg(b)
    if _is_const(a) and _is_const(b):
        return Const(a.value - b.value)
    return Sub(a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0) or _is_const(b, 0.0):
        return ZERO
    if _is_const(a, 1.0):
        return b
    if _is_const(b, 1.0):
        return a
    if _is_const(a) and _is_const(b):
        return Const(a.value * b.value)
    if _is_const(b):
        a, b = b, a
    if _is_const(a) and isinstance(b, Mul) and _is_const(b.left):
        return mul(Const(a.value * b.left.value), b.right)
    return Mul(a, b)


def div(a: Expr, b: Expr) -> Expr:
    if _is_const(a, 0.0):
        return ZERO
    if _is_const(b, 1.0):
        return a
    return Div(a, b)


def neg(a: Expr) -> Expr:
    if _is_const(a):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.arg
    return Neg(a)


def power(a: Expr, n: int) -> Expr:
    if n == 0:
        return ONE
    if n == 1:
        return a
    if _is_const(a):
        return Const(a.value**n)
    return Pow(a, n)


# ---------------------------------------------------------------- parsing

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)

_FUNCS = {"exp": Exp, "sin": Sin, "sqrt": Sqrt}


class _Parser:
    def __init__(self, text: str, m: int):
        self.text = text
        self.m = m
        self.tokens: list[tuple[str, str, int]] = []
        pos = 0
        while True:
            while pos < len(text) and text[pos].isspace():
                pos += 1
            if pos >= len(text):
                break
            match = _TOKEN.match(text, pos)
            if match is None:
                raise ParseError(f"unexpected character {text[pos]!r}", pos + 1)
            kind = match.lastgroup
            self.tokens.append((kind, match.group(kind), match.start(kind) + 1))
            pos = match.end()
        self.end = len(text) + 1
        self.i = 0

    def peek(self):
        if self.i < len(self.tokens):
            return self.tokens[self.i]
        return ("end", "", self.end)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"syntax error: expected {value!r}, found {found}", pos)

    def parse(self) -> Expr:
        e = self.expr()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"syntax error: unexpected {text!r}", pos)
        return e

    def expr(self) -> Expr:
        e = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            e = Add(e, rhs) if op == "+" else Sub(e, rhs)
        return e

    def term(self) -> Expr:
        e = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            e = Mul(e, rhs) if op == "*" else Div(e, rhs)
        return e

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            kind, text, pos = self.take()
            if kind != "num" or not text.isdigit():
                raise ParseError("syntax error: exponent must be a nonnegative integer", pos)
            return Pow(base, int(text))
        return base

    def atom(self) -> Expr:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text == "pi":
                return Const(math.pi)
            if text in _FUNCS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return _FUNCS[text](arg)
            if re.fullmatch(r"x\d+", text):
                index = int(text[1:])
                if not 1 <= index <= self.m:
                    raise ParseError(f"variable {text} outside x1..x{self.m}", pos)
                return Var(index)
            raise ParseError(f"unknown identifier {text!r}", pos)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"syntax error: unexpected {found}", pos)


def parse(text: str, m: int) -> Expr:
    return _Parser(text, m).parse()


# ---------------------------------------------------------- differentiation


def diff(e: Expr, i: int) -> Expr:
    """Symbolic partial derivative with respect to x_i (1-based)."""
    if isinstance(e, Const):
        return ZERO
    if isinstance(e, Var):
        return ONE if e.index == i else ZERO
    if isinstance(e, Add):
        return add(diff(e.left, i), diff(e.right, i))
    if isinstance(e, Sub):
        return sub(diff(e.left, i), diff(e.right, i))
    if isinstance(e, Mul):
        return add(mul(diff(e.left, i), e.right), mul(e.left, diff(e.right, i)))
    if isinstance(e, Div):
        da, db = diff(e.left, i), diff(e.right, i)
        if _is_const(db, 0.0):
            return div(da, e.right)
        return div(sub(mul(da, e.right), mul(e.left, db)), power(e.right, 2))
    if isinstance(e, Pow):
        du = diff(e.base, i)
        return mul(mul(Const(float(e.exponent)), power(e.base, e.exponent - 1)), du)
    if isinstance(e, Neg):
        return neg(diff(e.arg, i))
    if isinstance(e, Exp):
        return mul(e, diff(e.arg, i))
    if isinstance(e, Sin):
        return mul(Cos(e.arg), diff(e.arg, i))
    if isinstance(e, Cos):
        return neg(mul(Sin(e.arg), diff(e.arg, i)))
    if isinstance(e, Sqrt):
        du = diff(e.arg, i)
        return div(du, mul(Const(2.0), e))
    raise TypeError(f"unknown node {e!r}")


# ----------------------------------------------------------- code generation


def to_source(e: Expr) -> str:
    """Python source for ``e`` over a sequence ``x`` and functions exp/sin/cos/sqrt."""
    if isinstance(e, Const):
        return repr(e.value)
    if isinstance(e, Var):
        return f"x[{e.index - 1}]"
    if isinstance(e, Add):
        return f"({to_source(e.left)} + {to_source(e.right)})"
    if isinstance(e, Sub):
        return f"({to_source(e.left)} - {to_source(e.right)})"
    if isinstance(e, Mul):
        return f"({to_source(e.left)} * {to_source(e.right)})"
    if isinstance(e, Div):
        return f"({to_source(e.left)} / {to_source(e.right)})"
    if isinstance(e, Pow):
        return f"({to_source(e.base)} ** {e.exponent})"
    if isinstance(e, Neg):
        return f"(-{to_source(e.arg)})"
    name = type(e).__name__.lower()
    return f"{name}({to_source(e.arg)})"


def _math_sqrt(v):
    if v < 0.0:
        raise DomainError(f"sqrt of negative value {v}")
    return math.sqrt(v)


def _math_exp(v):
    try:
        return math.exp(v)
    except OverflowError as exc:
        raise DomainError(f"exp overflow at {v}") from exc


def _lift(fn):
    def lifted(a):
        return fn(a if isinstance(a, Interval) else Interval.point(a))

    return lifted


def _iv_cos(a: Interval) -> Interval:
    return iv_sin(a + HALF_PI)


_MATH_NS = {"exp": _math_exp, "sin": math.sin, "cos": math.cos, "sqrt": _math_sqrt}
_NUMPY_NS = {"exp": np.exp, "sin": np.sin, "cos": np.cos, "sqrt": np.sqrt}
_INTERVAL_NS = {
    "exp": _lift(iv_exp),
    "sin": _lift(iv_sin),
    "cos": _lift(_iv_cos),
    "sqrt": _lift(iv_sqrt),
}


def _compile(e: Expr, namespace: dict) -> Callable:
    code = compile(f"lambda x: {to_source(e)}", "<expr>", "eval")
    return eval(code, {"__builtins__": {}, **namespace})


class Compiled:
    """An expression compiled once into scalar, vectorized and interval callables."""

    def __init__(self, e: Expr):
        self.expr = e
        self._scalar = _compile(e, _MATH_NS)
        self._interval = _compile(e, _INTERVAL_NS)
        self._vector = _compile(e, _NUMPY_NS)

    def __call__(self, x: Sequence[float]) -> float:
        try:
            return float(self._scalar(x))
        except ZeroDivisionError as exc:
            raise DomainError(f"division by zero at x={list(x)}") from exc

    def interval(self, box: Box | Sequence[Interval]) -> Interval:
        dims = box.dims if isinstance(box, Box) else tuple(box)
        return _as_interval(self._interval(dims))

    def vectorized(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at the columns of an (m, n) array; domain violations give nan/inf."""
        with np.errstate(all="ignore"):
            out = self._vector(points)
        return np.broadcast_to(np.asarray(out, dtype=float), points.shape[1:]).copy()


def _as_interval(value) -> Interval:
    return value if isinstance(value, Interval) else Interval.point(value)


class Objective:
    """An objective with cached symbolic gradient and Hessian."""

    def __init__(self, e: Expr, m: int, text: str | None = None):
        self.expr = e
        self.m = m
        self.text = text
        self.value = Compiled(e)

    @cached_property
    def gradient_exprs(self) -> tuple[Expr, ...]:
        return tuple(diff(self.expr, i) for i in range(1, self.m + 1))

    @cached_property
    def hessian_exprs(self) -> tuple[tuple[Expr, ...], ...]:
        g = self.gradient_exprs
        return tuple(tuple(diff(g[i], j) for j in range(1, self.m + 1)) for i in range(self.m))

    @cached_property
    def _grad(self) -> tuple[Compiled, ...]:
        return tuple(Compiled(d) for d in self.gradient_exprs)

    @cached_property
    def _hess(self) -> tuple[tuple[Compiled, ...], ...]:
        return tuple(tuple(Compiled(d) for d in row) for row in self.hessian_exprs)

    def __call__(self, x: Sequence[float]) -> float:
        return self.value(x)

    def gradient(self, x: Sequence[float]) -> np.ndarray:
        return np.array([g(x) for g in self._grad])

    def hessian(self, x: Sequence[float]) -> np.ndarray:
        return np.array([[h(x) for h in row] for row in self._hess])

    def interval(self, box: Box) -> Interval:
        return self.value.interval(box)

    def interval_gradient(self, box: Box) -> tuple[Interval, ...]:
        return tuple(g.interval(box) for g in self._grad)

    def interval_hessian(self, box: Box) -> "IntervalMatrix":
        dims = box.dims
        raw = [[h.interval(dims) for h in row] for row in self._hess]
        return IntervalMatrix.symmetrized(raw)


@dataclass(frozen=True)
class IntervalMatrix:
    entries: tuple[tuple[Interval, ...], ...]

    def __post_init__(self):
        n = len(self.entries)
        for i in range(n):
            if len(self.entries[i]) != n:
                raise ValueError("interval matrix must be square")
            for j in range(i):
                if self.entries[i][j] != self.entries[j][i]:
                    raise ValueError("interval matrix must be symmetric")

    @classmethod
    def symmetrized(cls, raw: Sequence[Sequence[Interval]]) -> "IntervalMatrix":
        n = len(raw)
        rows = [list(r) for r in raw]
        for i in range(n):
            for j in range(i):
                a, b = rows[i][j], rows[j][i]
                lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
                # rounding can make the two enclosures disjoint; fall back to the hull
                s = Interval(lo, hi) if lo <= hi else Interval(min(a.lo, b.lo), max(a.hi, b.hi))
                rows[i][j] = rows[j][i] = s
        return cls(tuple(tuple(r) for r in rows))

    @property
    def n(self) -> int:
        return len(self.entries)

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]


# Module-level conveniences working on bare trees.


def eval_expr(e: Expr, x: Sequence[float]) -> float:
    return Compiled(e)(x)


def interval_eval(e: Expr, box: Box) -> Interval:
    return Compiled(e).interval(box)


def interval_hessian(e: Expr, box: Box) -> IntervalMatrix:
    return Objective(e, box.m).interval_hessian(box)
