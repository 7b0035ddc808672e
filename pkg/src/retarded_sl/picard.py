"""Successive approximation of the Volterra form of the problem.

Independent check on :mod:`retarded_sl.ode`.  On the left piece, with
``w = lam / p1``,

    u(x) = A cos(w (x-a)) + p1 B / lam * sin(w (x-a))
           + 1/(p1 lam) * int_a^x q(t) sin(w (x-t)) u(t - delay(t)) dt

with ``A = d11 - lam^2 d11~`` and ``B = d10 - lam^2 d10~``; the right piece
has the same shape around ``c`` with the jump values as head.  Each iterate
replaces ``u`` under the integral by the previous iterate.  The kernel is
split as ``sin(w x) cos(w t) - cos(w x) sin(w t)`` so the moving upper limit
becomes two cumulative integrals, computed with composite Simpson on even
nodes and a closing 3/8 panel on odd nodes.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import NonconvergenceWarning, SingularTransmission
from .expr import evaluate_array
from .ode import SING_EPS, State
from .problem import DomainViolation, ValidatedProblem

__all__ = ["PicardRun", "picard_left", "picard_right", "picard_solve", "cumulative_integral"]

DEFAULT_ITERS = 60
DEFAULT_GRID = 2048


@dataclass
class PicardRun:
    side: str
    lam: float
    x: np.ndarray
    u: np.ndarray
    du: np.ndarray
    iterations: int
    residual_history: list[float] = field(default_factory=list)
    converged: bool = False

    @property
    def end(self) -> State:
        return State(float(self.u[-1]), float(self.du[-1]))

    @property
    def start(self) -> State:
        return State(float(self.u[0]), float(self.du[0]))

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "u", "du"])
        for row in zip(self.x, self.u, self.du):
            w.writerow([f"{v:.17g}" for v in row])

    def write_residuals(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "residual"])
        for k, r in enumerate(self.residual_history, start=1):
            w.writerow([k, f"{r:.17g}"])


def cumulative_integral(f: np.ndarray, H: float) -> np.ndarray:
    """F[i] = integral of the sampled ``f`` from node 0 to node i, fourth order."""
    n = len(f) - 1
    if n < 3:
        raise ValueError("need at least 4 nodes")
    F = np.zeros(n + 1)
    panels = H / 3.0 * (f[0:n - 1:2] + 4.0 * f[1:n:2] + f[2:n + 1:2])
    F[2::2] = np.cumsum(panels)[: len(F[2::2])]
    F[1] = H / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    odd = np.arange(3, n + 1, 2)
    F[odd] = F[odd - 3] + 3.0 * H / 8.0 * (f[odd - 3] + 3.0 * f[odd - 2] + 3.0 * f[odd - 1] + f[odd])
    return F


def _cubic_lookup(lo: float, H: float, table: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Four-point Lagrange interpolation of a uniform table at abscissae ``t``."""
    n = len(table) - 1
    pos = (t - lo) / H
    j = np.clip(np.floor(pos).astype(np.int64), 1, n - 2)
    s = pos - j
    y0, y1, y2, y3 = table[j - 1], table[j], table[j + 1], table[j + 2]
    return (-s * (s - 1.0) * (s - 2.0) / 6.0 * y0
            + (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0 * y1
            - (s + 1.0) * s * (s - 2.0) / 2.0 * y2
            + (s + 1.0) * s * (s - 1.0) / 6.0 * y3)


def _iterate(vp: ValidatedProblem, side: str, lam: float, head_u, head_du,
             n_iter: int, n_grid: int) -> PicardRun:
    if not lam > 0.0:
        raise ValueError("the integral form needs lambda > 0")
    if n_grid < 64:
        raise ValueError("n_grid must be at least 64")
    lo, hi = vp.side_bounds(side)
    p = vp.side_p(side)
    x = np.linspace(lo, hi, n_grid + 1)
    H = (hi - lo) / n_grid
    qx = evaluate_array(vp.q, x)
    t = x - evaluate_array(vp.delay, x)
    if np.any(t < lo - 1e-12 * (hi - lo)):
        bad = int(np.argmax(t < lo - 1e-12 * (hi - lo)))
        raise DomainViolation(f"retarded argument leaves the {side} piece", float(x[bad]))
    t = np.maximum(t, lo)

    w = lam / p
    phase = w * (x - lo)
    cs, sn = np.cos(phase), np.sin(phase)
    u0 = head_u(cs, sn)
    du0 = head_du(cs, sn)

    def sweep(u_prev):
        wd = qx * _cubic_lookup(lo, H, u_prev, t)
        C = cumulative_integral(wd * cs, H)
        S = cumulative_integral(wd * sn, H)
        return u0 + (sn * C - cs * S) / (p * lam), du0 + (cs * C + sn * S) / (p * p)

    u = u0
    history: list[float] = []
    converged = False
    k = 0
    for k in range(1, n_iter + 1):
        u_next, _ = sweep(u)
        r = float(np.max(np.abs(u_next - u)))
        history.append(r)
        u = u_next
        if r < 1e-12 * max(1.0, float(np.max(np.abs(u)))):
            converged = True
            break
    u_fin, du_fin = sweep(u)
    if not converged and len(history) >= 3 and not (history[-1] < history[-2] < history[-3]):
        warnings.warn(f"Picard iteration on the {side} piece stalled at lambda={lam!r} "
                      f"(last residuals {history[-3:]})", NonconvergenceWarning, stacklevel=3)
    return PicardRun(side, lam, x, u_fin, du_fin, k, history, converged)


def picard_left(vp: ValidatedProblem, lam: float, n_iter: int = DEFAULT_ITERS,
                n_grid: int = DEFAULT_GRID) -> PicardRun:
    lam2 = lam * lam
    A = vp.d11 - lam2 * vp.dt11
    B = vp.d10 - lam2 * vp.dt10
    p1 = vp.p1
    return _iterate(
        vp, "left", lam,
        lambda cs, sn: A * cs + p1 * B / lam * sn,
        lambda cs, sn: -lam * A / p1 * sn + B * cs,
        n_iter, n_grid)


def picard_right(vp: ValidatedProblem, lam: float, left_run: PicardRun,
                 n_iter: int = DEFAULT_ITERS, n_grid: int = DEFAULT_GRID) -> PicardRun:
    lam2 = lam * lam
    g20p, g21p = vp.gamma2_plus
    g20m, g21m = vp.gamma2_minus
    t20p, t21p = vp.gamma2_t_plus
    t20m, t21m = vp.gamma2_t_minus
    g10p, g10m = vp.gamma10_plus, vp.gamma10_minus
    den = g21p - lam2 * t21p
    if abs(den) < SING_EPS * (abs(g21p) + lam2 * abs(t21p) + 1.0):
        raise SingularTransmission(lam, den)
    um, dum = left_run.end
    U = -g10m * um / g10p
    bracket = (g10p * (lam2 * t21m - g21m) * dum
               + (g10p * (lam2 * t20m - g20m) - g10m * (lam2 * t20p - g20p)) * um)
    D = bracket / (g10p * den)
    p2 = vp.p2
    return _iterate(
        vp, "right", lam,
        lambda cs, sn: U * cs + p2 * D / lam * sn,
        lambda cs, sn: -lam * U / p2 * sn + D * cs,
        n_iter, n_grid)


def picard_solve(vp: ValidatedProblem, lam: float, n_iter: int = DEFAULT_ITERS,
                 n_grid: int = DEFAULT_GRID) -> tuple[PicardRun, PicardRun]:
    left = picard_left(vp, lam, n_iter, n_grid)
    return left, picard_right(vp, lam, left, n_iter, n_grid)


def contraction_bound(vp: ValidatedProblem, side: str, lam: float, n_grid: int = DEFAULT_GRID) -> float:
    """sup|q| * length / (p * lam): bound on the ratio of successive residuals."""
    lo, hi = vp.side_bounds(side)
    qmax = float(np.max(np.abs(evaluate_array(vp.q, np.linspace(lo, hi, n_grid + 1)))))
    return qmax * (hi - lo) / (vp.side_p(side) * lam)
