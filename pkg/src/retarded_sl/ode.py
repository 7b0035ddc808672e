"""Shooting solution of the retarded equation across the interface.

On each piece the equation is rewritten as the first-order system

    u'  = v
    v'  = (q(x) * u(x - delay(x)) - lam^2 * u) / p_i^2

and integrated with classical fixed-step RK4.  Retarded values are read back
from the already committed nodes through cubic Hermite interpolation (method
of steps).  When a stage's retarded abscissa falls inside the step being
taken, the last committed Hermite segment is extrapolated; on the very first
step a second-order Taylor polynomial around the initial node stands in for
that segment.
"""

from __future__ import annotations

import csv
import functools
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import numba
import numpy as np

from .errors import DegenerateInitialState, NonfiniteState, OutOfRange, SingularTransmission
from .expr import evaluate, evaluate_array
from .problem import DomainViolation, ValidatedProblem

__all__ = [
    "State", "Trajectory", "FullSolution", "JumpRecord", "rhs", "initial_state_left",
    "transmission_jump", "transmission_denominator", "integrate", "solve",
    "eval_solution", "default_step", "SING_EPS", "boundary_residual_left",
    "transmission_residuals",
]

SING_EPS = 1e-12

# how a retarded value is obtained
_OWN, _NODE, _HERMITE, _EXTRAP = 0, 1, 2, 3


class State(NamedTuple):
    u: float
    du: float


def rhs(vp: ValidatedProblem, side: str, lam: float, x: float, u: float, u_delayed: float) -> float:
    """Second derivative u'' at ``x`` given the current and retarded values."""
    lo, hi = vp.side_bounds(side)
    if not lo <= x <= hi:
        raise OutOfRange(f"x={x!r} outside the {side} piece [{lo}, {hi}]")
    p = vp.side_p(side)
    return (evaluate(vp.q, x) * u_delayed - lam * lam * u) / (p * p)


def initial_state_left(vp: ValidatedProblem, lam: float) -> State:
    lam2 = lam * lam
    return State(vp.d11 - lam2 * vp.dt11, vp.d10 - lam2 * vp.dt10)


def transmission_denominator(vp: ValidatedProblem, lam: float) -> float:
    return vp.gamma2_plus[1] - lam * lam * vp.gamma2_t_plus[1]


def transmission_jump(vp: ValidatedProblem, lam: float, left_end: State) -> State:
    """Map the left limit (u, u') at c to the right limit through the jump conditions."""
    lam2 = lam * lam
    g20p, g21p = vp.gamma2_plus
    g20m, g21m = vp.gamma2_minus
    t20p, t21p = vp.gamma2_t_plus
    t20m, t21m = vp.gamma2_t_minus
    g10p, g10m = vp.gamma10_plus, vp.gamma10_minus
    den = g21p - lam2 * t21p
    if abs(den) < SING_EPS * (abs(g21p) + lam2 * abs(t21p) + 1.0):
        raise SingularTransmission(lam, den)
    um, dum = left_end
    u_plus = -(g10m / g10p) * um
    du_plus = (g10p * (lam2 * t21m - g21m) * dum
               + (g10p * (lam2 * t20m - g20m) - g10m * (lam2 * t20p - g20p)) * um) / (g10p * den)
    return State(u_plus, du_plus)


# -- mesh precomputation -----------------------------------------------------

@dataclass(frozen=True)
class _Mesh:
    x: np.ndarray          # nodes, N+1
    hs: np.ndarray         # step sizes, N
    q_node: np.ndarray     # q at nodes
    q_stage: np.ndarray    # q at x_n + h/2 and x_n + h, (N, 2)
    mode_node: np.ndarray
    seg_node: np.ndarray
    theta_node: np.ndarray
    mode_stage: np.ndarray  # (N, 2)
    seg_stage: np.ndarray
    theta_stage: np.ndarray
    p: float


def _nodes(lo: float, hi: float, h: float) -> np.ndarray:
    length = hi - lo
    n = max(1, math.ceil(length / h - 1e-9))
    x = lo + h * np.arange(n + 1, dtype=float)
    x[-1] = hi
    if n >= 2 and x[-1] - x[-2] <= 0.0:
        raise ValueError("degenerate final step")
    return x


def _classify(x: np.ndarray, s: np.ndarray, step: np.ndarray, t: np.ndarray):
    """Lookup mode for retarded abscissae ``t`` of points ``s`` lying in step ``step``."""
    mode = np.full(s.shape, _HERMITE, dtype=np.int64)
    seg = np.zeros(s.shape, dtype=np.int64)
    theta = np.zeros(s.shape, dtype=float)
    x_cur = x[step]
    own = t >= s
    at_node = (~own) & (t == x_cur)
    inside = (~own) & (t > x_cur)
    past = (~own) & (t < x_cur)

    mode[own] = _OWN
    mode[at_node] = _NODE
    seg[at_node] = step[at_node]

    k = np.clip(np.searchsorted(x, t[past], side="right") - 1, 0, len(x) - 2)
    seg[past] = k
    theta[past] = (t[past] - x[k]) / (x[k + 1] - x[k])

    mode[inside] = _EXTRAP
    # segment [step-1, step]; step 0 uses the Taylor stand-in, theta holds the offset
    prev = step[inside] - 1
    seg[inside] = prev
    safe = np.maximum(prev, 0)
    hprev = x[safe + 1] - x[safe]
    theta[inside] = np.where(prev >= 0, (t[inside] - x[safe]) / hprev, t[inside] - x[0])
    return mode, seg, theta


@functools.lru_cache(maxsize=64)
def _mesh(vp: ValidatedProblem, side: str, h: float) -> _Mesh:
    lo, hi = vp.side_bounds(side)
    x = _nodes(lo, hi, h)
    n = len(x) - 1
    hs = np.diff(x)
    steps = np.arange(n)
    mid = x[:-1] + 0.5 * hs
    end = x[1:]

    def delayed(pts):
        d = evaluate_array(vp.delay, pts)
        t = pts - d
        tol = 1e-12 * (hi - lo)
        bad = np.nonzero((d < 0.0) | (t < lo - tol))[0]
        if bad.size:
            raise DomainViolation(f"retarded argument leaves the {side} piece", float(pts[bad[0]]))
        return np.maximum(t, lo)

    node_steps = np.minimum(np.arange(n + 1), n)
    mode_n, seg_n, th_n = _classify(x, x, node_steps, delayed(x))
    stage_pts = np.stack([mid, end], axis=1)
    stage_steps = np.stack([steps, steps], axis=1)
    mode_s, seg_s, th_s = _classify(x, stage_pts, stage_steps, delayed(stage_pts.ravel()).reshape(n, 2))
    q_node = evaluate_array(vp.q, x)
    q_stage = evaluate_array(vp.q, stage_pts.ravel()).reshape(n, 2)
    mesh = _Mesh(x, hs, q_node, q_stage, mode_n, seg_n, th_n, mode_s, seg_s, th_s, vp.side_p(side))
    for arr in (x, hs, q_node, q_stage, mode_n, seg_n, th_n, mode_s, seg_s, th_s):
        arr.setflags(write=False)
    return mesh


# -- the integrator kernel ---------------------------------------------------

@numba.njit(cache=True)
def _hermite(h, th, y0, m0, y1, m1):
    t2 = th * th
    t3 = t2 * th
    return ((2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + th) * h * m0
            + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * m1)


@numba.njit(cache=True)
def _lookup(mode, seg, th, u_stage, x, u, du, ddu0):
    if mode == 0:
        return u_stage
    if mode == 1:
        return u[seg]
    if mode == 2 or seg >= 0:
        h = x[seg + 1] - x[seg]
        return _hermite(h, th, u[seg], du[seg], u[seg + 1], du[seg + 1])
    # first step: Taylor polynomial about the initial node, th is the offset
    return u[0] + du[0] * th + 0.5 * ddu0 * th * th


@numba.njit(cache=True)
def _rk4(lam2, inv_p2, u0, du0, x, hs, q_node, q_stage,
         mode_n, seg_n, th_n, mode_s, seg_s, th_s):
    n = hs.shape[0]
    u = np.empty(n + 1)
    du = np.empty(n + 1)
    ddu = np.empty(n + 1)
    u[0] = u0
    du[0] = du0
    # the retarded point of the first node is the node itself
    ddu[0] = (q_node[0] * u0 - lam2 * u0) * inv_p2
    ddu0 = ddu[0]
    for i in range(n):
        h = hs[i]
        ui = u[i]
        vi = du[i]
        k1u = vi
        k1v = ddu[i]

        u2 = ui + 0.5 * h * k1u
        v2 = vi + 0.5 * h * k1v
        ud = _lookup(mode_s[i, 0], seg_s[i, 0], th_s[i, 0], u2, x, u, du, ddu0)
        k2u = v2
        k2v = (q_stage[i, 0] * ud - lam2 * u2) * inv_p2

        u3 = ui + 0.5 * h * k2u
        v3 = vi + 0.5 * h * k2v
        ud = _lookup(mode_s[i, 0], seg_s[i, 0], th_s[i, 0], u3, x, u, du, ddu0)
        k3u = v3
        k3v = (q_stage[i, 0] * ud - lam2 * u3) * inv_p2

        u4 = ui + h * k3u
        v4 = vi + h * k3v
        ud = _lookup(mode_s[i, 1], seg_s[i, 1], th_s[i, 1], u4, x, u, du, ddu0)
        k4u = v4
        k4v = (q_stage[i, 1] * ud - lam2 * u4) * inv_p2

        u[i + 1] = ui + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        du[i + 1] = vi + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)
        ud = _lookup(mode_n[i + 1], seg_n[i + 1], th_n[i + 1], u[i + 1], x, u, du, ddu0)
        ddu[i + 1] = (q_node[i + 1] * ud - lam2 * u[i + 1]) * inv_p2
    return u, du, ddu


# -- trajectories ------------------------------------------------------------

class Trajectory:
    """Dense RK4 solution on one piece: nodes ``x`` with ``u``, ``du`` and ``ddu``."""

    def __init__(self, side: str, lam: float, x, u, du, ddu):
        self.side = side
        self.lam = lam
        self.x, self.u, self.du, self.ddu = x, u, du, ddu
        for arr in (u, du, ddu):
            arr.setflags(write=False)

    @property
    def bounds(self) -> tuple[float, float]:
        return float(self.x[0]), float(self.x[-1])

    @property
    def start(self) -> State:
        return State(float(self.u[0]), float(self.du[0]))

    @property
    def end(self) -> State:
        return State(float(self.u[-1]), float(self.du[-1]))

    def __len__(self) -> int:
        return len(self.x)

    def at(self, x: float) -> State:
        lo, hi = self.bounds
        if not lo <= x <= hi:
            raise OutOfRange(f"x={x!r} outside [{lo}, {hi}]")
        k = int(np.searchsorted(self.x, x, side="right")) - 1
        k = min(max(k, 0), len(self.x) - 2)
        if x == self.x[k]:
            return State(float(self.u[k]), float(self.du[k]))
        if x == self.x[k + 1]:
            return State(float(self.u[k + 1]), float(self.du[k + 1]))
        h = self.x[k + 1] - self.x[k]
        th = (x - self.x[k]) / h
        u = _hermite(h, th, self.u[k], self.du[k], self.u[k + 1], self.du[k + 1])
        du = _hermite(h, th, self.du[k], self.ddu[k], self.du[k + 1], self.ddu[k + 1])
        return State(float(u), float(du))

    def sample(self, xs) -> np.ndarray:
        """(len(xs), 2) array of interpolated (u, du)."""
        return np.array([self.at(float(x)) for x in xs])

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u", "du"])
        for row in zip(self.x, self.u, self.du):
            w.writerow([f"{v:.17g}" for v in row])


def integrate(vp: ValidatedProblem, side: str, lam: float, init: State, h: float) -> Trajectory:
    """RK4 with Hermite history on one piece, starting from ``init`` at its left end."""
    if not h > 0.0:
        raise ValueError("step h must be positive")
    u0, du0 = float(init[0]), float(init[1])
    if not (math.isfinite(u0) and math.isfinite(du0)):
        raise NonfiniteState(f"initial state {init!r} is not finite")
    if u0 == 0.0 and du0 == 0.0:
        warnings.warn(f"zero initial state on the {side} piece at lambda={lam!r}; "
                      "the solution vanishes identically", DegenerateInitialState, stacklevel=2)
    m = _mesh(vp, side, float(h))
    u, du, ddu = _rk4(lam * lam, 1.0 / (m.p * m.p), u0, du0, m.x, m.hs, m.q_node, m.q_stage,
                      m.mode_node, m.seg_node, m.theta_node, m.mode_stage, m.seg_stage, m.theta_stage)
    if not (np.isfinite(u[-1]) and np.isfinite(du[-1]) and np.all(np.isfinite(u))):
        raise NonfiniteState(f"solution blew up on the {side} piece at lambda={lam!r}")
    return Trajectory(side, lam, m.x, u, du, ddu)


class JumpRecord(NamedTuple):
    left_end: State
    right_start: State
    denominator: float


@dataclass(frozen=True)
class FullSolution:
    left: Trajectory
    right: Trajectory
    lam: float
    jump: JumpRecord

    def at(self, x: float, limit: str = "left") -> State:
        return eval_solution(self, x, limit)

    @property
    def end(self) -> State:
        return self.right.end


def default_step(vp: ValidatedProblem) -> float:
    """Default RK4 step: length/4096, or tighter when the delay is bounded away from 0."""
    length = min(vp.c - vp.a, vp.b - vp.c)
    if vp.delay_min > 0.0:
        return min(vp.delay_min / 4.0, length / 2000.0)
    return length / 4096.0


def solve(vp: ValidatedProblem, lam: float, h: float | None = None) -> FullSolution:
    """Shoot from a with the boundary-adapted initial state, jump across c, continue to b."""
    if h is None:
        h = default_step(vp)
    init = initial_state_left(vp, lam)
    left = integrate(vp, "left", lam, init, h)
    start = transmission_jump(vp, lam, left.end)
    with warnings.catch_warnings():
        # already reported for the left piece
        if init == (0.0, 0.0):
            warnings.simplefilter("ignore", DegenerateInitialState)
        right = integrate(vp, "right", lam, start, h)
    return FullSolution(left, right, lam, JumpRecord(left.end, start, transmission_denominator(vp, lam)))


def eval_solution(sol: FullSolution, x: float, limit: str = "left") -> State:
    """(u, u') at ``x``; at the interface ``limit`` picks the one-sided value."""
    a, c = sol.left.bounds
    b = sol.right.bounds[1]
    if not a <= x <= b:
        raise OutOfRange(f"x={x!r} outside [{a}, {b}]")
    if x < c or (x == c and limit == "left"):
        return sol.left.at(x)
    if x == c and limit != "right":
        raise ValueError("limit must be 'left' or 'right'")
    return sol.right.at(x)


def _relative(terms: list[float]) -> float:
    scale = sum(abs(t) for t in terms)
    return abs(sum(terms)) / scale if scale > 0.0 else 0.0


def boundary_residual_left(vp: ValidatedProblem, lam: float, state: State) -> float:
    """Relative residual of the boundary condition at a for the state (u(a), u'(a))."""
    u, du = state
    lam2 = lam * lam
    return _relative([vp.d10 * u, -vp.d11 * du, -lam2 * vp.dt10 * u, lam2 * vp.dt11 * du])


def transmission_residuals(vp: ValidatedProblem, lam: float, left_end: State,
                           right_start: State) -> tuple[float, float]:
    """Relative residuals of both transmission conditions at c."""
    um, dum = left_end
    up, dup = right_start
    lam2 = lam * lam
    g20p, g21p = vp.gamma2_plus
    g20m, g21m = vp.gamma2_minus
    t20p, t21p = vp.gamma2_t_plus
    t20m, t21m = vp.gamma2_t_minus
    first = _relative([vp.gamma10_plus * up, vp.gamma10_minus * um])
    second = _relative([
        g20p * up, g21p * dup, g20m * um, g21m * dum,
        -lam2 * t20p * up, -lam2 * t21p * dup, -lam2 * t20m * um, -lam2 * t21m * dum,
    ])
    return first, second
