"""Tiny calculator language for the coefficient functions q(x) and delay(x).

Grammar (lowest to highest binding)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right associative
    atom   := NUMBER | 'x' | 'pi' | 'e' | FUNC '(' args ')' | '(' expr ')'

``-x^2`` therefore means ``-(x^2)`` and ``2^3^2`` means ``2^(3^2)``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

import numpy as np

__all__ = [
    "Num", "Var", "Const", "Neg", "BinOp", "Call", "Expr",
    "ExprError", "ExprSyntaxError", "UnknownIdentifier", "ExprDomainError",
    "parse", "evaluate", "evaluate_array", "to_text", "FUNCTIONS", "CONSTANTS",
]


class ExprError(ValueError):
    pass


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


class UnknownIdentifier(ExprSyntaxError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier {name!r}", offset)
        self.name = name


class ExprDomainError(ExprError):
    def __init__(self, message: str, x: float):
        super().__init__(f"{message} (x={x!r})")
        self.x = x


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Expr = Union[Num, Var, Const, Neg, BinOp, Call]

CONSTANTS = {"pi": math.pi, "e": math.e}
# name -> arity
FUNCTIONS = {
    "sin": 1, "cos": 1, "tan": 1, "exp": 1, "log": 1, "sqrt": 1, "abs": 1,
    "pos": 1, "min": 2, "max": 2,
}

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
    r")"
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            stripped = len(text[pos:]) - len(text[pos:].lstrip())
            if pos + stripped >= n:
                break
            raise ExprSyntaxError(f"unexpected character {text[pos + stripped]!r}", pos + stripped)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, off = self.next()
        if text != value or kind != "op":
            what = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {what}", off)

    def parse(self) -> Expr:
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", off)
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.next()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self) -> Expr:
        if self.peek()[:2] == ("op", "-"):
            self.next()
            return Neg(self.unary())
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.next()
            return BinOp("^", base, self.unary())
        return base

    def atom(self) -> Expr:
        kind, text, off = self.next()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text == "x":
                return Var()
            if text in CONSTANTS:
                return Const(text)
            if text in FUNCTIONS:
                self.expect("(")
                args = [self.expr()]
                while self.peek()[:2] == ("op", ","):
                    self.next()
                    args.append(self.expr())
                self.expect(")")
                if len(args) != FUNCTIONS[text]:
                    raise ExprSyntaxError(
                        f"{text} takes {FUNCTIONS[text]} argument(s), got {len(args)}", off)
                return Call(text, tuple(args))
            raise UnknownIdentifier(text, off)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        what = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {what}", off)


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree.

    Raises :class:`ExprSyntaxError` (with the character offset) on malformed
    input and :class:`UnknownIdentifier` for names outside the whitelist.
    """
    if not text or not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _Parser(text).parse()


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_text(e: Expr) -> str:
    """Render ``e`` back into the grammar; ``parse(to_text(e)) == e``."""
    return _render(e, 0)


def _render(e: Expr, ctx: int) -> str:
    if isinstance(e, Num):
        return repr(e.value)
    if isinstance(e, Var):
        return "x"
    if isinstance(e, Const):
        return e.name
    if isinstance(e, Call):
        return f"{e.name}({', '.join(_render(a, 0) for a in e.args)})"
    if isinstance(e, Neg):
        s = "-" + _render(e.operand, 3)
        return f"({s})" if ctx > 3 else s
    prec = _PREC[e.op]
    if e.op == "^":
        s = f"{_render(e.left, 5)}^{_render(e.right, 3)}"
    else:
        s = f"{_render(e.left, prec)} {e.op} {_render(e.right, prec + 1)}"
    return f"({s})" if ctx > prec else s


def _check(value: float, x: float) -> float:
    if not math.isfinite(value):
        raise ExprDomainError("non-finite result", x)
    return value


def evaluate(e: Expr, x: float) -> float:
    """Evaluate ``e`` at the point ``x`` in double precision."""
    if isinstance(e, Num):
        return e.value
    if isinstance(e, Var):
        return float(x)
    if isinstance(e, Const):
        return CONSTANTS[e.name]
    if isinstance(e, Neg):
        return -evaluate(e.operand, x)
    if isinstance(e, BinOp):
        lhs = evaluate(e.left, x)
        rhs = evaluate(e.right, x)
        if e.op == "+":
            return _check(lhs + rhs, x)
        if e.op == "-":
            return _check(lhs - rhs, x)
        if e.op == "*":
            return _check(lhs * rhs, x)
        if e.op == "/":
            if rhs == 0.0:
                raise ExprDomainError("division by zero", x)
            return _check(lhs / rhs, x)
        if lhs == 0.0 and rhs < 0.0:
            raise ExprDomainError("division by zero in power", x)
        if lhs < 0.0 and not float(rhs).is_integer():
            raise ExprDomainError("negative base with fractional exponent", x)
        try:
            return _check(math.pow(lhs, rhs), x)
        except OverflowError:
            raise ExprDomainError("overflow in power", x) from None
    args = [evaluate(a, x) for a in e.args]
    name = e.name
    if name == "log" and args[0] <= 0.0:
        raise ExprDomainError("log of non-positive value", x)
    if name == "sqrt" and args[0] < 0.0:
        raise ExprDomainError("sqrt of negative value", x)
    try:
        return _check(_SCALAR_FUNCS[name](*args), x)
    except OverflowError:
        raise ExprDomainError(f"overflow in {name}", x) from None


_SCALAR_FUNCS = {
    "sin": math.sin, "cos": math.cos, "tan": math.tan, "exp": math.exp,
    "log": math.log, "sqrt": math.sqrt, "abs": abs,
    "pos": lambda v: max(v, 0.0), "min": min, "max": max,
}

_ARRAY_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp,
    "log": np.log, "sqrt": np.sqrt, "abs": np.abs,
    "pos": lambda v: np.maximum(v, 0.0), "min": np.minimum, "max": np.maximum,
}


def evaluate_array(e: Expr, xs) -> np.ndarray:
    """Vectorized :func:`evaluate` over an array of abscissae.

    Raises :class:`ExprDomainError` naming the first offending point.
    """
    xs = np.asarray(xs, dtype=float)
    with np.errstate(all="ignore"):
        out = _eval_arr(e, xs)
    out = np.broadcast_to(out, xs.shape).astype(float)
    bad = ~np.isfinite(out)
    if bad.any():
        x_bad = float(xs.reshape(-1)[np.argmax(bad.reshape(-1))])
        # re-run the scalar path for a precise message
        evaluate(e, x_bad)
        raise ExprDomainError("non-finite result", x_bad)
    return out


def _eval_arr(e: Expr, xs: np.ndarray):
    if isinstance(e, Num):
        return np.full(xs.shape, e.value)
    if isinstance(e, Var):
        return xs
    if isinstance(e, Const):
        return np.full(xs.shape, CONSTANTS[e.name])
    if isinstance(e, Neg):
        return -_eval_arr(e.operand, xs)
    if isinstance(e, BinOp):
        lhs = _eval_arr(e.left, xs)
        rhs = _eval_arr(e.right, xs)
        if e.op == "+":
            return lhs + rhs
        if e.op == "-":
            return lhs - rhs
        if e.op == "*":
            return lhs * rhs
        if e.op == "/":
            return np.where(rhs == 0.0, np.nan, lhs / rhs)
        bad = ((lhs == 0.0) & (rhs < 0.0)) | ((lhs < 0.0) & (rhs != np.round(rhs)))
        return np.where(bad, np.nan, np.power(lhs, rhs))
    args = [_eval_arr(a, xs) for a in e.args]
    if e.name == "log":
        return np.where(args[0] <= 0.0, np.nan, np.log(args[0]))
    if e.name == "sqrt":
        return np.where(args[0] < 0.0, np.nan, np.sqrt(args[0]))
    return _ARRAY_FUNCS[e.name](*args)
