"""Problem data: interval, piecewise p, q(x), delay(x) and the 20 real constants.

The differential equation is ``-(p u')' + q(x) u(x - delay(x)) = lam^2 u`` on
``[a, c) U (c, b]`` with ``p = p1^2`` on the left piece and ``p2^2`` on the right.
Boundary conditions at ``a`` and ``b`` and the two transmission conditions at
``c`` are linear in ``lam^2``.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .expr import Expr, ExprDomainError, ExprSyntaxError, evaluate_array, parse, to_text

__all__ = [
    "ProblemSpec", "ValidatedProblem", "ProblemError", "ProblemFileError",
    "DomainViolation", "NonfiniteCoefficient", "load", "loads", "from_dict",
    "to_dict", "validate", "side_grid", "DEFAULT_GRID",
]

DEFAULT_GRID = 1024
# relative offset used for one-sided limits at the interface
INTERFACE_EPS = 1e-9


class ProblemError(ValueError):
    """Invalid problem data."""


class ProblemFileError(ProblemError):
    def __init__(self, message: str, key: str | None = None):
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class DomainViolation(ProblemError):
    def __init__(self, constraint: str, x: float | None = None):
        where = "" if x is None else f" at x={x!r}"
        super().__init__(f"{constraint}{where}")
        self.constraint = constraint
        self.x = x


class NonfiniteCoefficient(ProblemError):
    def __init__(self, name: str, x: float, detail: str = ""):
        super().__init__(f"{name} is not finite at x={x!r}{': ' + detail if detail else ''}")
        self.name = name
        self.x = x


Pair = tuple[float, float]


@dataclass(frozen=True)
class ProblemSpec:
    a: float
    c: float
    b: float
    p1: float
    p2: float
    q: Expr
    delay: Expr
    # ((d10, d11), (d20, d21))
    delta: tuple[Pair, Pair]
    delta_t: tuple[Pair, Pair]
    gamma10_plus: float
    gamma10_minus: float
    # (g20, g21) on each side of c
    gamma2_plus: Pair
    gamma2_minus: Pair
    gamma2_t_plus: Pair
    gamma2_t_minus: Pair
    q_text: str = field(default="", compare=False)
    delay_text: str = field(default="", compare=False)

    # short names used throughout the numerics
    @property
    def d10(self): return self.delta[0][0]
    @property
    def d11(self): return self.delta[0][1]
    @property
    def d20(self): return self.delta[1][0]
    @property
    def d21(self): return self.delta[1][1]
    @property
    def dt10(self): return self.delta_t[0][0]
    @property
    def dt11(self): return self.delta_t[0][1]
    @property
    def dt20(self): return self.delta_t[1][0]
    @property
    def dt21(self): return self.delta_t[1][1]

    def side_bounds(self, side: str) -> tuple[float, float]:
        if side == "left":
            return self.a, self.c
        if side == "right":
            return self.c, self.b
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")

    def side_p(self, side: str) -> float:
        return self.p1 if side == "left" else self.p2

    def replace(self, **changes) -> "ProblemSpec":
        """Copy with fields changed; ``q``/``delay`` may be given as text."""
        for key in ("q", "delay"):
            if key in changes:
                value = changes[key]
                if isinstance(value, str):
                    changes[key] = _parse_expr(value, key)
                    changes[f"{key}_text"] = value
                else:
                    changes[f"{key}_text"] = to_text(value)
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class ValidatedProblem:
    """A :class:`ProblemSpec` whose sampled constraints have been checked.

    Attribute access falls through to the wrapped spec, so ``vp.p1`` works.
    """

    spec: ProblemSpec
    grid_size: int
    delay_min: float
    q_c_minus: float
    q_c_plus: float

    def __getattr__(self, name: str) -> Any:
        if name.startswith("__"):
            raise AttributeError(name)
        return getattr(self.spec, name)


# -- file format -------------------------------------------------------------

_SCHEMA: dict[str, Any] = {
    "interval": {"a": None, "c": None, "b": None},
    "p": {"p1": None, "p2": None},
    "q": "expr",
    "delay": "expr",
    "boundary": {"delta": "2x2", "delta_tilde": "2x2"},
    "transmission": {
        "gamma10": {"plus": None, "minus": None},
        "gamma2": {"plus": "2", "minus": "2"},
        "gamma2_tilde": {"plus": "2", "minus": "2"},
    },
}


def _number(value: Any, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ProblemFileError(f"expected a number, got {type(value).__name__}", key)
    out = float(value)
    if not math.isfinite(out):
        raise ProblemFileError("number must be finite", key)
    return out


def _pair(value: Any, key: str) -> Pair:
    if not isinstance(value, list) or len(value) != 2:
        raise ProblemFileError("expected a list of 2 numbers", key)
    return (_number(value[0], f"{key}[0]"), _number(value[1], f"{key}[1]"))


def _parse_expr(text: Any, key: str) -> Expr:
    if not isinstance(text, str):
        raise ProblemFileError("expected an expression string", key)
    try:
        return parse(text)
    except ExprSyntaxError as exc:
        raise ProblemFileError(f"expression error: {exc}", key) from exc


def _walk(data: Any, schema: dict, prefix: str) -> dict:
    if not isinstance(data, dict):
        raise ProblemFileError("expected an object", prefix or "<root>")
    for key in data:
        if key not in schema:
            raise ProblemFileError("unexpected key", f"{prefix}{key}")
    out = {}
    for key, sub in schema.items():
        dotted = f"{prefix}{key}"
        if key not in data:
            raise ProblemFileError("missing key", dotted)
        value = data[key]
        if isinstance(sub, dict):
            out[key] = _walk(value, sub, dotted + ".")
        elif sub is None:
            out[key] = _number(value, dotted)
        elif sub == "expr":
            out[key] = (value, _parse_expr(value, dotted))
        elif sub == "2":
            out[key] = _pair(value, dotted)
        else:
            if not isinstance(value, list) or len(value) != 2:
                raise ProblemFileError("expected a 2x2 list", dotted)
            out[key] = (_pair(value[0], f"{dotted}[0]"), _pair(value[1], f"{dotted}[1]"))
    return out


def from_dict(data: dict) -> ProblemSpec:
    """Build a :class:`ProblemSpec` from the JSON object layout."""
    d = _walk(data, _SCHEMA, "")
    tr = d["transmission"]
    return ProblemSpec(
        a=d["interval"]["a"], c=d["interval"]["c"], b=d["interval"]["b"],
        p1=d["p"]["p1"], p2=d["p"]["p2"],
        q=d["q"][1], delay=d["delay"][1],
        delta=d["boundary"]["delta"], delta_t=d["boundary"]["delta_tilde"],
        gamma10_plus=tr["gamma10"]["plus"], gamma10_minus=tr["gamma10"]["minus"],
        gamma2_plus=tr["gamma2"]["plus"], gamma2_minus=tr["gamma2"]["minus"],
        gamma2_t_plus=tr["gamma2_tilde"]["plus"], gamma2_t_minus=tr["gamma2_tilde"]["minus"],
        q_text=d["q"][0], delay_text=d["delay"][0],
    )


def to_dict(spec: ProblemSpec) -> dict:
    return {
        "interval": {"a": spec.a, "c": spec.c, "b": spec.b},
        "p": {"p1": spec.p1, "p2": spec.p2},
        "q": spec.q_text or to_text(spec.q),
        "delay": spec.delay_text or to_text(spec.delay),
        "boundary": {
            "delta": [list(spec.delta[0]), list(spec.delta[1])],
            "delta_tilde": [list(spec.delta_t[0]), list(spec.delta_t[1])],
        },
        "transmission": {
            "gamma10": {"plus": spec.gamma10_plus, "minus": spec.gamma10_minus},
            "gamma2": {"plus": list(spec.gamma2_plus), "minus": list(spec.gamma2_minus)},
            "gamma2_tilde": {"plus": list(spec.gamma2_t_plus), "minus": list(spec.gamma2_t_minus)},
        },
    }


def loads(text: str) -> ProblemSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"invalid JSON: {exc}") from exc
    return from_dict(data)


def load(path: str | Path) -> ProblemSpec:
    """Read a problem file. I/O errors propagate as ``OSError``."""
    text = Path(path).read_text(encoding="utf-8")
    return loads(text)


# -- validation --------------------------------------------------------------

def side_grid(spec: ProblemSpec, side: str, M: int) -> np.ndarray:
    """M+1 uniform points on the closed side, interface end pulled inside by eps."""
    lo, hi = spec.side_bounds(side)
    xs = np.linspace(lo, hi, M + 1)
    eps = INTERFACE_EPS * (hi - lo)
    if side == "left":
        xs[-1] = hi - eps
    else:
        xs[0] = lo + eps
    return xs


def _eval_named(e: Expr, xs: np.ndarray, name: str) -> np.ndarray:
    try:
        return evaluate_array(e, xs)
    except ExprDomainError as exc:
        raise NonfiniteCoefficient(name, exc.x, str(exc)) from exc


def validate(spec: ProblemSpec, M: int = DEFAULT_GRID) -> ValidatedProblem:
    """Check the problem constraints on a sampling grid of ``M+1`` points per side.

    Certification is only as fine as the grid: a constraint violated strictly
    between grid points goes unnoticed.
    """
    if isinstance(spec, ValidatedProblem):
        spec = spec.spec
    if M < 16:
        raise ValueError("grid size M must be at least 16")
    if not (spec.a < spec.c < spec.b):
        raise DomainViolation("interval must satisfy a < c < b")
    for name in ("p1", "p2"):
        value = getattr(spec, name)
        if value == 0.0:
            raise DomainViolation(f"{name} must be nonzero")
        if value < 0.0:
            raise DomainViolation(f"{name} must be positive (use |{name}| = {abs(value)!r}; p enters as {name}^2)")
    if spec.gamma10_plus == 0.0:
        raise DomainViolation("gamma10_plus must be nonzero (the transmission jump divides by it)")

    delay_min = math.inf
    limits = {}
    for side, floor in (("left", spec.a), ("right", spec.c)):
        xs = side_grid(spec, side, M)
        qs = _eval_named(spec.q, xs, "q")
        ds = _eval_named(spec.delay, xs, "delay")
        neg = np.nonzero(ds < 0.0)[0]
        if neg.size:
            raise DomainViolation("delay(x) >= 0", float(xs[neg[0]]))
        behind = np.nonzero(xs - ds < floor)[0]
        if behind.size:
            label = "x - delay(x) >= a on the left piece" if side == "left" else \
                "x - delay(x) >= c on the right piece"
            raise DomainViolation(label, float(xs[behind[0]]))
        delay_min = min(delay_min, float(ds.min()))
        limits[side] = float(qs[-1] if side == "left" else qs[0])
    return ValidatedProblem(spec, M, delay_min, limits["left"], limits["right"])
