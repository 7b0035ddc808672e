"""Command line front end.

    retarded-sl solve   --problem P [--lmin --lmax --step --h --tol --out]
    retarded-sl scan    --problem P [--lmin --lmax --step --h --out]
    retarded-sl eigfun  --problem P --lambda L [--h --xsamples --out]
    retarded-sl compare --problem P [--n N --step --h --tol --out]
    retarded-sl verify  --problem P --lambda L [--h --grid --iters]

Exit codes: 0 success, 2 usage or validation error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import io
import sys
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import asym, charfn, ode, picard
from .errors import NumericalError
from .problem import DEFAULT_GRID, ProblemError, ValidatedProblem, load, validate

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_NUMERIC = 3

VERIFY_TOL = 1e-6
COMMANDS = ("solve", "scan", "eigfun", "compare", "verify")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    problem_path: str
    command: str
    lmin: float = 0.0
    lmax: float = 20.0
    step: float | None = None
    h: float | None = None
    tol: float | None = None
    n: int = 10
    out: str | None = None
    lam: float | None = None
    grid: int = picard.DEFAULT_GRID
    iters: int = picard.DEFAULT_ITERS
    xsamples: int = 201

    def check(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        for name in ("step", "h", "tol"):
            value = getattr(self, name)
            if value is not None and not value > 0.0:
                raise UsageError(f"--{name} must be positive")
        if self.command in ("solve", "scan"):
            if not 0.0 <= self.lmin < self.lmax:
                raise UsageError("need 0 <= --lmin < --lmax")
        if self.command in ("eigfun", "verify") and self.lam is None:
            raise UsageError("--lambda is required")
        if self.grid < 64:
            raise UsageError("--grid must be at least 64")
        if self.iters < 1:
            raise UsageError("--iters must be positive")
        if self.xsamples < 2:
            raise UsageError("--xsamples must be at least 2")


def _fmt(v: float) -> str:
    return f"{v:.17g}"


@contextlib.contextmanager
def _output(path: str | None):
    if path is None:
        yield sys.stdout
        return
    buf = io.StringIO()
    yield buf
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _load(cfg: RunConfig) -> ValidatedProblem:
    return validate(load(cfg.problem_path), DEFAULT_GRID)


def cmd_solve(cfg: RunConfig) -> int:
    vp = _load(cfg)
    result = charfn.search(vp, cfg.lmin, cfg.lmax, cfg.step, cfg.h, cfg.tol)
    if all(s.near_singular for s in result.samples):
        print("warning: the whole range lies inside the singular exclusion zone", file=sys.stderr)
    for lo, hi in result.unresolved:
        print(f"warning: unresolved sign change near singularity in [{lo:.6g}, {hi:.6g}]",
              file=sys.stderr)
    with _output(cfg.out) as fh:
        charfn.write_roots_csv(fh, result.roots)
    return EXIT_OK


def cmd_scan(cfg: RunConfig) -> int:
    vp = _load(cfg)
    step = cfg.step if cfg.step is not None else charfn.default_scan_step(vp)
    samples = charfn.scan(vp, cfg.lmin, cfg.lmax, step, cfg.h)
    with _output(cfg.out) as fh:
        charfn.write_scan_csv(fh, samples)
    return EXIT_OK


def eigfun_rows(vp: ValidatedProblem, sol: ode.FullSolution, xsamples: int) -> list[tuple[float, float, float]]:
    """Uniform samples of [a, b] with the interface listed twice, left then right limit."""
    xs = np.linspace(vp.a, vp.b, xsamples)
    rows = []
    for x in xs[xs < vp.c]:
        rows.append((float(x), *sol.at(float(x))))
    rows.append((vp.c, *sol.at(vp.c, "left")))
    rows.append((vp.c, *sol.at(vp.c, "right")))
    for x in xs[xs > vp.c]:
        rows.append((float(x), *sol.at(float(x))))
    return rows


def cmd_eigfun(cfg: RunConfig) -> int:
    vp = _load(cfg)
    sol = ode.solve(vp, cfg.lam, cfg.h)
    with _output(cfg.out) as fh:
        fh.write("x,u,du\n")
        for row in eigfun_rows(vp, sol, cfg.xsamples):
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    return EXIT_OK


def cmd_compare(cfg: RunConfig) -> int:
    if cfg.n < 3:
        raise UsageError("--n must be at least 3")
    vp = _load(cfg)
    report = asym.compare(vp, cfg.n, cfg.h, cfg.step, cfg.tol)
    with _output(cfg.out) as fh:
        report.write_csv(fh)
    summary = f"max_scaled_err={_fmt(report.max_scaled_err)}"
    if report.degenerate_leading:
        summary += f" note=degenerate leading term ({report.note})"
    print(summary, file=sys.stderr)
    return EXIT_OK


def verify_report(vp: ValidatedProblem, lam: float, h: float | None, n_grid: int,
                  n_iter: int) -> dict[str, float]:
    """Shooting vs integral-equation discrepancies and condition residuals at ``lam``.

    Discrepancies are sup-norms over the Picard grid divided by ``max(1, sup|u|)``.
    """
    sol = ode.solve(vp, lam, h)
    left, right = picard.picard_solve(vp, lam, n_iter, n_grid)
    out = {}
    for name, traj, run in (("left", sol.left, left), ("right", sol.right, right)):
        shot = traj.sample(run.x)
        scale_u = max(1.0, float(np.max(np.abs(run.u))))
        scale_du = max(1.0, float(np.max(np.abs(run.du))))
        out[f"{name}_u"] = float(np.max(np.abs(shot[:, 0] - run.u))) / scale_u
        out[f"{name}_du"] = float(np.max(np.abs(shot[:, 1] - run.du))) / scale_du
    out["bc_a"] = ode.boundary_residual_left(vp, lam, sol.left.start)
    out["tc_1"], out["tc_2"] = ode.transmission_residuals(vp, lam, sol.jump.left_end, sol.jump.right_start)
    return out


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.lam > 0.0:
        raise UsageError("verify needs --lambda > 0 (the integral form divides by lambda)")
    vp = _load(cfg)
    report = verify_report(vp, cfg.lam, cfg.h, cfg.grid, cfg.iters)
    for key, value in report.items():
        print(f"{key}={_fmt(value)}")
    ok = all(v <= VERIFY_TOL for v in report.values())
    print("verify: " + ("PASS" if ok else "FAIL"))
    return EXIT_OK if ok else EXIT_NUMERIC


_HANDLERS = {"solve": cmd_solve, "scan": cmd_scan, "eigfun": cmd_eigfun,
             "compare": cmd_compare, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retarded-sl",
        description="Eigenvalues and eigenfunctions of a discontinuous Sturm-Liouville "
                    "problem with retarded argument.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--problem", required=True, help="problem JSON file")
        p.add_argument("--lmin", type=float, default=0.0)
        p.add_argument("--lmax", type=float, default=20.0)
        p.add_argument("--step", type=float, default=None, help="scan step in lambda")
        p.add_argument("--h", type=float, default=None, help="RK4 step")
        p.add_argument("--tol", type=float, default=None, help="bisection tolerance")
        p.add_argument("--n", type=int, default=10, help="largest branch index (compare)")
        p.add_argument("--out", default=None, help="output CSV (default: stdout)")
        p.add_argument("--lambda", dest="lam", type=float, default=None)
        p.add_argument("--grid", type=int, default=picard.DEFAULT_GRID)
        p.add_argument("--iters", type=int, default=picard.DEFAULT_ITERS)
        p.add_argument("--xsamples", type=int, default=201)
    return parser


def run(cfg: RunConfig) -> int:
    try:
        cfg.check()
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            return _HANDLERS[cfg.command](cfg)
    except (ProblemError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    cfg = RunConfig(
        problem_path=ns.problem, command=ns.command, lmin=ns.lmin, lmax=ns.lmax,
        step=ns.step, h=ns.h, tol=ns.tol, n=ns.n, out=ns.out, lam=ns.lam,
        grid=ns.grid, iters=ns.iters, xsamples=ns.xsamples)
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
