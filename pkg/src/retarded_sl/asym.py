"""Closed-form large-lambda asymptotics and their comparison with the numerics.

Eigenfunctions follow the shooting normalisation fixed by the initial state
at ``a`` (``u(a) = d11 - lam^2 d11~``), which is what the prefactors below
carry.  The leading terms require ``gamma21+~ = 0``: otherwise the jump
denominator grows like ``lam^2`` and the orders change.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .charfn import BRANCH_A, BRANCH_B, UNCLASSIFIED, default_scan_step, search
from .errors import DegenerateLeadingTerm
from .problem import ValidatedProblem

__all__ = [
    "BranchPrediction", "AsymRow", "AsymReport", "gamma_branch", "xi_leading",
    "leading_coefficient", "lemma2_estimate", "eigenfunction_asym", "compare",
]

_BRANCH_ALIASES = {"A": BRANCH_A, "A_left": BRANCH_A, 1: BRANCH_A,
                   "B": BRANCH_B, "B_right": BRANCH_B, 2: BRANCH_B}


@dataclass(frozen=True)
class BranchPrediction:
    branch: str
    n: int
    lam_hat: float


def gamma_branch(vp: ValidatedProblem, branch, n: int) -> BranchPrediction:
    """n-th predicted eigenvalue of one family.

    ``A_left``: ``p1 pi n / (c - a)``; ``B_right``: ``p2 pi (n + 1/2) / (b - c)``.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    name = _BRANCH_ALIASES[branch]
    if name == BRANCH_A:
        lam = vp.p1 * math.pi * n / (vp.c - vp.a)
    else:
        lam = vp.p2 * math.pi * (n + 0.5) / (vp.b - vp.c)
    return BranchPrediction(name, n, lam)


def leading_coefficient(vp: ValidatedProblem) -> float:
    """Coefficient K of ``K lam^7 sin(lam (c-a)/p1) cos(lam (b-c)/p2)``."""
    g21p = vp.gamma2_plus[1]
    if g21p == 0.0:
        raise DegenerateLeadingTerm("gamma21+ = 0: the leading term is undefined")
    prod = vp.dt11 * vp.dt21 * vp.gamma2_t_minus[1]
    if prod == 0.0:
        raise DegenerateLeadingTerm(
            "d11~ * d21~ * gamma21-~ = 0: the lam^7 term of xi vanishes")
    return -prod / (g21p * vp.p1)


def xi_leading(vp: ValidatedProblem, lam: float) -> float:
    k = leading_coefficient(vp)
    return (k * lam ** 7 * math.sin(lam * (vp.c - vp.a) / vp.p1)
            * math.cos(lam * (vp.b - vp.c) / vp.p2))


def lemma2_estimate(vp: ValidatedProblem, lam: float, x: float, which: str) -> float:
    """Leading term of u or u' on either piece as lam grows."""
    a, b, c, p1, p2 = vp.a, vp.b, vp.c, vp.p1, vp.p2
    dt11 = vp.dt11
    if which in ("u_minus", "du_minus"):
        if not a <= x <= c:
            raise ValueError(f"x={x!r} not on the left piece")
        arg = lam * (x - a) / p1
        if which == "u_minus":
            return -lam ** 2 * dt11 * math.cos(arg)
        return lam ** 3 * dt11 / p1 * math.sin(arg)
    if which not in ("u_plus", "du_plus"):
        raise ValueError(f"unknown estimate {which!r}")
    if not c <= x <= b:
        raise ValueError(f"x={x!r} not on the right piece")
    amp = dt11 * vp.gamma2_t_minus[1] / (p1 * vp.gamma2_plus[1]) * math.sin(lam * (c - a) / p1)
    arg = lam * (x - c) / p2
    if which == "u_plus":
        return lam ** 4 * p2 * amp * math.sin(arg)
    return lam ** 5 * amp * math.cos(arg)


def eigenfunction_asym(vp: ValidatedProblem, n: int, branch: int, side: str, x: float) -> float:
    """Asymptotic eigenfunction for the n-th eigenvalue of family 1 (left) or 2 (right).

    Family-2 right-piece formula keeps its printed 1/n correction terms.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a, b, c, p1, p2 = vp.a, vp.b, vp.c, vp.p1, vp.p2
    dt11 = vp.dt11
    g21p = vp.gamma2_plus[1]
    tg21m = vp.gamma2_t_minus[1]
    L1, L2 = c - a, b - c
    pi = math.pi
    m = n + 0.5
    if side == "minus":
        if not a <= x <= c:
            raise ValueError(f"x={x!r} not on the left piece")
        if branch == 1:
            return -(n * pi * p1 / L1) ** 2 * dt11 * math.cos(n * pi * (x - a) / L1)
        if branch == 2:
            return -(m * pi * p2 / L2) ** 2 * dt11 * math.cos(m * pi * p2 * (x - a) / (p1 * L2))
        raise ValueError("branch must be 1 or 2")
    if side != "plus":
        raise ValueError("side must be 'minus' or 'plus'")
    if not c <= x <= b:
        raise ValueError(f"x={x!r} not on the right piece")
    if branch == 1:
        return (n ** 3 * pi ** 4 * p1 ** 2 * p2 * dt11 * tg21m / (g21p * L1 ** 3)
                * math.sin(n * pi * p1 * (x - c) / (p2 * L1)))
    if branch == 2:
        amp = m ** 4 * pi ** 4 * p2 ** 5 * dt11 * tg21m / (p1 * g21p * L2 ** 4)
        phase_c = m * pi * p2 * L1 / (p1 * L2)
        phase_x = m * pi * (x - c) / L2
        return amp * (math.sin(phase_c) * (math.cos(phase_x) - (x - c) / (n * p2) * math.sin(phase_x))
                      - L1 / (n * p1) * math.cos(phase_c) * math.cos(phase_x))
    raise ValueError("branch must be 1 or 2")


@dataclass(frozen=True)
class AsymRow:
    n: int
    branch: str
    lam_hat: float
    lam_numeric: float
    abs_err: float

    @property
    def scaled_err(self) -> float:
        return self.n * self.abs_err


@dataclass
class AsymReport:
    rows: list[AsymRow] = field(default_factory=list)
    degenerate_leading: bool = False
    note: str = ""

    @property
    def max_scaled_err(self) -> float:
        return max((r.scaled_err for r in self.rows), default=0.0)

    def branch_rows(self, branch: str) -> list[AsymRow]:
        return [r for r in self.rows if r.branch == branch]

    def write_csv(self, fh) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["n", "branch", "lambda_hat", "lambda_numeric", "abs_err", "scaled_err"])
        for r in self.rows:
            w.writerow([r.n, r.branch, f"{r.lam_hat:.17g}", f"{r.lam_numeric:.17g}",
                        f"{r.abs_err:.17g}", f"{r.scaled_err:.17g}"])


def compare(vp: ValidatedProblem, N: int, h: float | None = None,
            step: float | None = None, tol_lambda: float | None = None) -> AsymReport:
    """Pair numeric eigenvalues with the two asymptotic families up to index N.

    When several roots classify to the same (family, n) the closest one is kept.
    """
    if N < 3:
        raise ValueError("N must be at least 3")
    if step is None:
        step = default_scan_step(vp)
    top = max(gamma_branch(vp, BRANCH_A, N).lam_hat, gamma_branch(vp, BRANCH_B, N).lam_hat)
    spacing = min(vp.p1 * math.pi / (vp.c - vp.a), vp.p2 * math.pi / (vp.b - vp.c))
    result = search(vp, step / 2.0, top + 0.5 * spacing, step, h, tol_lambda)
    best: dict[tuple[str, int], AsymRow] = {}
    for rec in result.roots:
        if rec.branch == UNCLASSIFIED or rec.branch_n > N:
            continue
        pred = gamma_branch(vp, rec.branch, rec.branch_n)
        row = AsymRow(rec.branch_n, rec.branch, pred.lam_hat, rec.lam, abs(rec.lam - pred.lam_hat))
        key = (rec.branch, rec.branch_n)
        if key not in best or row.abs_err < best[key].abs_err:
            best[key] = row
    report = AsymReport(sorted(best.values(), key=lambda r: r.lam_numeric))
    try:
        leading_coefficient(vp)
    except DegenerateLeadingTerm as exc:
        report.degenerate_leading = True
        report.note = str(exc)
    return report
