"""Characteristic function and the search for its positive real roots.

``xi(lam)`` substitutes the shooting solution into the boundary condition at
``b``.  Its positive roots are the eigenvalues.  Roots are bracketed on a
uniform scan and refined by plain bisection.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import MissedRootWarning, SingularTransmission
from .ode import State, solve
from .problem import ValidatedProblem

__all__ = [
    "CharSample", "EigenvalueRecord", "RootSearch", "xi", "xi_from_end", "singular_lambdas",
    "scan", "search", "find_roots", "default_scan_step", "classify", "write_scan_csv",
    "write_roots_csv", "BRANCH_A", "BRANCH_B", "UNCLASSIFIED",
]

BRANCH_A = "A_left"
BRANCH_B = "B_right"
UNCLASSIFIED = "unclassified"


@dataclass(frozen=True)
class CharSample:
    lam: float
    xi: float
    near_singular: bool = False

    @property
    def xi_scaled(self) -> float:
        return self.xi * (1.0 + abs(self.lam)) ** -7


@dataclass(frozen=True)
class EigenvalueRecord:
    index: int
    lam: float
    bracket: tuple[float, float]
    residual: float
    branch: str
    branch_n: int
    branch_error: float


@dataclass
class RootSearch:
    roots: list[EigenvalueRecord]
    # sign changes that straddle an excluded singular point; not eigenvalues
    unresolved: list[tuple[float, float]] = field(default_factory=list)
    samples: list[CharSample] = field(default_factory=list)


def xi_from_end(vp: ValidatedProblem, lam: float, end: State) -> float:
    """Boundary form at b; note the + sign in front of lam^2 at this end."""
    u, du = end
    lam2 = lam * lam
    return vp.d20 * u - vp.d21 * du + lam2 * (vp.dt20 * u - vp.dt21 * du)


def xi(vp: ValidatedProblem, lam: float, h: float | None = None) -> float:
    return xi_from_end(vp, lam, solve(vp, lam, h).end)


def singular_lambdas(vp: ValidatedProblem, lambda_max: float) -> list[float]:
    """Positive lam at which gamma21+ - lam^2 gamma21+~ vanishes, up to ``lambda_max``."""
    g21p = vp.gamma2_plus[1]
    t21p = vp.gamma2_t_plus[1]
    if t21p == 0.0:
        return []
    ratio = g21p / t21p
    if ratio <= 0.0:
        return []
    lam_star = math.sqrt(ratio)
    return [lam_star] if lam_star <= lambda_max else []


def _exclusion_radius(lam_star: float, step: float) -> float:
    return max(step, 1e-6 * lam_star)


def scan(vp: ValidatedProblem, lambda_min: float, lambda_max: float, step: float,
         h: float | None = None) -> list[CharSample]:
    """Uniform samples of xi on [lambda_min, lambda_max]; near-singular samples carry nan."""
    if not 0.0 <= lambda_min < lambda_max:
        raise ValueError("need 0 <= lambda_min < lambda_max")
    if not step > 0.0:
        raise ValueError("step must be positive")
    count = int(math.floor((lambda_max - lambda_min) / step + 1e-9)) + 1
    stars = singular_lambdas(vp, lambda_max + step)
    out = []
    for i in range(count):
        lam = lambda_min + i * step
        if any(abs(lam - s) <= _exclusion_radius(s, step) for s in stars):
            out.append(CharSample(lam, math.nan, True))
            continue
        try:
            out.append(CharSample(lam, xi(vp, lam, h)))
        except SingularTransmission:
            out.append(CharSample(lam, math.nan, True))
    return out


def default_scan_step(vp: ValidatedProblem) -> float:
    """A quarter of the largest admissible step, half the finer asymptotic spacing."""
    return _max_step(vp) / 4.0


def _max_step(vp: ValidatedProblem) -> float:
    return 0.5 * min(vp.p1 * math.pi / (vp.c - vp.a), vp.p2 * math.pi / (vp.b - vp.c))


def classify(vp: ValidatedProblem, lam: float) -> tuple[str, int, float]:
    """Nearest prediction among both asymptotic families.

    Returns ``(branch, n, |lam - prediction|)``; roots farther than a quarter of
    the family spacing from every prediction are unclassified.
    """
    spacing_a = vp.p1 * math.pi / (vp.c - vp.a)
    spacing_b = vp.p2 * math.pi / (vp.b - vp.c)
    n_a = max(1, round(lam / spacing_a))
    n_b = max(1, round(lam / spacing_b - 0.5))
    err_a = abs(lam - spacing_a * n_a)
    err_b = abs(lam - spacing_b * (n_b + 0.5))
    if err_a <= err_b:
        branch, n, err, spacing = BRANCH_A, n_a, err_a, spacing_a
    else:
        branch, n, err, spacing = BRANCH_B, n_b, err_b, spacing_b
    if err > 0.25 * spacing:
        return UNCLASSIFIED, n, err
    return branch, n, err


def _bisect(f, lo: float, hi: float, f_lo: float, f_hi: float, tol: float):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = f(mid)
        if f_mid == 0.0:
            return mid, lo, hi, 0.0, f_lo, f_hi
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    # at round-off width the midpoint collapses onto an endpoint
    mid = 0.5 * (lo + hi)
    f_mid = f(mid) if lo < mid < hi else min(f_lo, f_hi, key=abs)
    return mid, lo, hi, f_mid, f_lo, f_hi


def _opposite(f1: float, f2: float) -> bool:
    return (f1 < 0.0 and f2 > 0.0) or (f1 > 0.0 and f2 < 0.0)


def search(vp: ValidatedProblem, lambda_min: float, lambda_max: float,
           step: float | None = None, h: float | None = None,
           tol_lambda: float | None = None) -> RootSearch:
    """Scan, bracket and bisect; see :func:`find_roots`."""
    if step is None:
        step = default_scan_step(vp)
    if step > _max_step(vp) * (1 + 1e-12):
        raise ValueError(f"scan step {step} exceeds half the finer asymptotic spacing "
                         f"({_max_step(vp)})")
    samples = scan(vp, lambda_min, lambda_max, step, h)
    for star in singular_lambdas(vp, lambda_max + step):
        if star >= lambda_min - step:
            r = _exclusion_radius(star, step)
            warnings.warn(f"[{star - r:.6g}, {star + r:.6g}] around the singular point "
                          f"lambda*={star:.6g} is excluded from the search",
                          RuntimeWarning, stacklevel=2)

    def f(lam):
        return xi(vp, lam, h)

    found = []
    unresolved = []
    sign_cells = []
    i = 0
    while i < len(samples):
        s = samples[i]
        if s.near_singular:
            # a sign change across the excluded zone is a pole, not a root
            j = i
            while j < len(samples) and samples[j].near_singular:
                j += 1
            if i > 0 and j < len(samples) and _opposite(samples[i - 1].xi, samples[j].xi):
                unresolved.append((samples[i - 1].lam, samples[j].lam))
            i = j
            continue
        if s.xi == 0.0 and s.lam > 0.0:
            lo = samples[i - 1].lam if i > 0 else s.lam
            hi = samples[i + 1].lam if i + 1 < len(samples) else s.lam
            found.append((s.lam, (lo, hi), 0.0))
        elif i + 1 < len(samples) and not samples[i + 1].near_singular \
                and _opposite(s.xi, samples[i + 1].xi):
            nxt = samples[i + 1]
            sign_cells.append(i)
            tol = tol_lambda if tol_lambda is not None else 1e-10 * max(1.0, nxt.lam)
            lam, lo, hi, f_mid, _, _ = _bisect(f, s.lam, nxt.lam, s.xi, nxt.xi, tol)
            if lam > 0.0:
                found.append((lam, (lo, hi), abs(f_mid)))
        i += 1

    for k in range(1, len(sign_cells)):
        if sign_cells[k] == sign_cells[k - 1] + 1:
            c = samples[sign_cells[k]].lam
            warnings.warn(f"sign changes in adjacent scan cells near lambda={c:.6g}; "
                          "a pair of roots may be missed, consider a finer step",
                          MissedRootWarning, stacklevel=2)

    records = []
    for idx, (lam, bracket, res) in enumerate(sorted(found), start=1):
        branch, n, err = classify(vp, lam)
        records.append(EigenvalueRecord(idx, lam, bracket, res, branch, n, err))
    if unresolved:
        warnings.warn(f"{len(unresolved)} sign change(s) straddle an excluded singular "
                      "point of the transmission jump; not reported as eigenvalues",
                      RuntimeWarning, stacklevel=2)
    return RootSearch(records, unresolved, samples)


def find_roots(vp: ValidatedProblem, lambda_min: float, lambda_max: float,
               step: float | None = None, h: float | None = None,
               tol_lambda: float | None = None) -> list[EigenvalueRecord]:
    """Positive eigenvalues in ``[lambda_min, lambda_max]``, indexed by increasing value.

    ``step`` defaults to a quarter of half the finer asymptotic spacing and
    ``tol_lambda`` to ``1e-10 * max(1, lam)``.
    """
    return search(vp, lambda_min, lambda_max, step, h, tol_lambda).roots


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_scan_csv(fh, samples: list[CharSample]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["lambda", "xi", "xi_scaled", "near_singular"])
    for s in samples:
        w.writerow([_fmt(s.lam), _fmt(s.xi), _fmt(s.xi_scaled), int(s.near_singular)])


def write_roots_csv(fh, records: list[EigenvalueRecord]) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["index", "lambda", "residual", "branch", "branch_n", "branch_error"])
    for r in records:
        w.writerow([r.index, _fmt(r.lam), _fmt(r.residual), r.branch, r.branch_n,
                    _fmt(r.branch_error)])


def sign_changes(samples: list[CharSample]) -> int:
    """Number of sign changes between consecutive regular samples."""
    vals = np.array([s.xi for s in samples if not s.near_singular])
    return int(np.count_nonzero(vals[:-1] * vals[1:] < 0.0))
