import io
import math
import random
import warnings

import numpy as np
import pytest

from retarded_sl import ode
from retarded_sl.errors import DegenerateInitialState, OutOfRange, SingularTransmission
from retarded_sl.ode import State
from retarded_sl.picard import picard_left, picard_solve

from conftest import CLAMPED_DELAY, CLASSICAL, make, random_problem, vp_of

CONTINUITY = {
    "transmission.gamma10": {"plus": 1.0, "minus": -1.0},
    "transmission.gamma2": {"plus": [0.0, 1.0], "minus": [0.0, -1.0]},
}


def test_rhs_harmonic():
    vp = vp_of(make())
    assert ode.rhs(vp, "left", 2.0, 0.5, 1.0, 1.0) == -4.0


def test_rhs_pure_delay_term():
    vp = vp_of(make(q="1"))
    assert ode.rhs(vp, "left", 0.0, 0.5, 7.0, 3.0) == 3.0


def test_rhs_right_piece_arithmetic():
    vp = vp_of(make(q="x", **{"p.p2": 2.0}))
    assert ode.rhs(vp, "right", 1.0, 1.5, 2.0, 1.0) == pytest.approx(-0.125, abs=1e-15)


def test_rhs_out_of_piece():
    with pytest.raises(OutOfRange):
        ode.rhs(vp_of(make()), "left", 1.0, 1.5, 0.0, 0.0)


def test_initial_state_examples():
    vp = vp_of(make(**{"boundary.delta": [[1.0, 0.0], [1.0, 0.0]]}))
    assert ode.initial_state_left(vp, 3.7) == (0.0, 1.0)
    vp = vp_of(make(**{"boundary.delta": [[0.0, 1.0], [1.0, 0.0]],
                       "boundary.delta_tilde": [[0.0, 1.0], [0.0, 0.0]]}))
    assert ode.initial_state_left(vp, 2.0).u == -3.0
    vp = vp_of(make(**{"boundary.delta": [[1.0, 1.0], [1.0, 0.0]],
                       "boundary.delta_tilde": [[1.0, 1.0], [0.0, 0.0]]}))
    assert ode.initial_state_left(vp, 1.0) == (0.0, 0.0)


def test_degenerate_initial_state_warns():
    vp = vp_of(make(**{"boundary.delta": [[1.0, 1.0], [1.0, 0.0]],
                       "boundary.delta_tilde": [[1.0, 1.0], [0.0, 0.0]]}))
    with pytest.warns(DegenerateInitialState):
        sol = ode.solve(vp, 1.0, 1e-2)
    assert np.all(sol.left.u == 0.0) and np.all(sol.right.u == 0.0)


def test_integrate_sine_closed_form():
    vp = vp_of(make())
    traj = ode.integrate(vp, "left", math.pi, State(0.0, 1.0), 1e-3)
    assert abs(traj.end.u) < 1e-10
    xs = np.linspace(0, 1, 17)
    np.testing.assert_allclose(traj.sample(xs)[:, 0], np.sin(math.pi * xs) / math.pi, atol=1e-11)


def test_integrate_tilde_initial_state_closed_form():
    vp = vp_of(make(**{"boundary.delta": [[0.0, 0.0], [1.0, 0.0]],
                       "boundary.delta_tilde": [[1.0, 0.0], [0.0, 0.0]]}))
    init = ode.initial_state_left(vp, 2.0)
    assert init == (0.0, -4.0)
    traj = ode.integrate(vp, "left", 2.0, init, 1e-3)
    assert traj.end.u == pytest.approx(-2.0 * math.sin(2.0), abs=1e-10)
    assert traj.end.u == pytest.approx(-1.81859, abs=1e-5)


def test_integrate_delayed_matches_picard():
    # constant delay 0.2, clamped so the retarded point never precedes a
    vp = vp_of(make(q="1", delay=CLAMPED_DELAY.format(d=0.2, a=0.0, c=1.0),
                    **{"boundary.delta": [[0.0, -1.0], [1.0, 0.0]]}))
    lam = 5.0
    traj = ode.integrate(vp, "left", lam, ode.initial_state_left(vp, lam), 1e-3)
    assert traj.start == (-1.0, 0.0)
    run = picard_left(vp, lam, 60, 4096)
    assert abs(traj.end.u - run.end.u) <= 1e-6
    assert abs(traj.end.du - run.end.du) <= 1e-6


def test_trajectory_layout():
    vp = vp_of(make())
    traj = ode.integrate(vp, "left", 1.0, State(0.0, 1.0), 0.3)
    assert traj.x[0] == 0.0 and traj.x[-1] == 1.0
    steps = np.diff(traj.x)
    assert np.all(steps > 0)
    np.testing.assert_allclose(steps[:-1], 0.3)
    assert steps[-1] <= 0.3
    with pytest.raises(ValueError):
        traj.u[0] = 1.0


def test_trajectory_csv():
    vp = vp_of(make())
    traj = ode.integrate(vp, "left", 1.0, State(0.0, 1.0), 0.25)
    buf = io.StringIO()
    traj.write_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,u,du"
    assert len(lines) == len(traj) + 1
    assert float(lines[-1].split(",")[1]) == traj.end.u


@pytest.mark.parametrize("minus,expected", [(-1.0, (0.3, -0.7)), (-2.0, (0.6, -0.7))])
def test_transmission_jump_examples(minus, expected):
    vp = vp_of(make(**{"transmission.gamma10": {"plus": 1.0, "minus": minus}}))
    out = ode.transmission_jump(vp, 2.3, State(0.3, -0.7))
    assert out == pytest.approx(expected, abs=1e-15)


def test_transmission_singular():
    vp = vp_of(make(**{"transmission.gamma2_tilde": {"plus": [0.0, 1.0], "minus": [0.0, 0.0]}}))
    with pytest.raises(SingularTransmission):
        ode.transmission_jump(vp, 1.0, State(1.0, 1.0))
    ode.transmission_jump(vp, 1.1, State(1.0, 1.0))


def test_solve_classical_closed_form(classical):
    sol = ode.solve(classical, math.pi / 2, 1e-3)
    assert abs(sol.end.u) < 1e-9
    sol = ode.solve(classical, math.pi / 4, 1e-3)
    assert sol.end.u == pytest.approx(4.0 / math.pi, abs=1e-9)


def test_solve_delayed_matches_picard():
    vp = vp_of(make(q="1", delay=CLAMPED_DELAY.format(d=0.1, a=0.0, c=1.0), **{"p.p2": 2.0}))
    sol = ode.solve(vp, 6.0, 1e-3)
    left, right = picard_solve(vp, 6.0, 60, 4096)
    assert abs(sol.end.u - right.end.u) <= 1e-6
    assert abs(sol.end.du - right.end.du) <= 1e-6


def test_eval_solution(classical):
    sol = ode.solve(classical, 1.3, 1e-2)
    k = 17
    assert ode.eval_solution(sol, float(sol.left.x[k])) == (sol.left.u[k], sol.left.du[k])
    assert ode.eval_solution(sol, 0.0) == (0.0, 1.0)
    assert ode.eval_solution(sol, 1.0) == sol.at(1.0, "right")
    with pytest.raises(OutOfRange):
        ode.eval_solution(sol, 2.5)


def test_eval_solution_jump_limits():
    vp = vp_of(make(**{"transmission.gamma10": {"plus": 1.0, "minus": -2.0}}))
    sol = ode.solve(vp, 1.3, 1e-2)
    assert sol.at(1.0, "right").u == pytest.approx(2.0 * sol.at(1.0, "left").u, rel=1e-15)


def test_hermite_interpolation_accuracy(classical):
    lam = 3.0
    sol = ode.solve(classical, lam, 1e-2)
    xs = np.linspace(0.0, 2.0, 71)
    got = np.array([sol.at(x) for x in xs])
    np.testing.assert_allclose(got[:, 0], np.sin(lam * xs) / lam, atol=1e-8)
    np.testing.assert_allclose(got[:, 1], np.cos(lam * xs), atol=1e-7)


# -- invariants --------------------------------------------------------------

def _random_vps(n, seed):
    rng = random.Random(seed)
    return [vp_of(random_problem(rng)) for _ in range(n)]


@pytest.mark.parametrize("lam", [0.7, 3.1, 9.4])
def test_boundary_identity_at_a(lam):
    for vp in _random_vps(10, 1):
        state = ode.initial_state_left(vp, lam)
        assert ode.boundary_residual_left(vp, lam, state) <= 1e-12


@pytest.mark.parametrize("lam", [0.7, 3.1, 9.4])
def test_transmission_residuals(lam):
    for vp in _random_vps(10, 2):
        sol = ode.solve(vp, lam, 1e-2)
        r1, r2 = ode.transmission_residuals(vp, lam, sol.jump.left_end, sol.jump.right_start)
        assert r1 <= 1e-10 and r2 <= 1e-10


def test_linearity():
    vp = vp_of(make(q="0.5 + sin(3*x)", delay=CLAMPED_DELAY.format(d=0.3, a=0.0, c=1.0)))
    base = ode.integrate(vp, "left", 4.0, State(0.4, -1.1), 1e-2)
    for s in (-2.5, 1e-3, 7.0):
        scaled = ode.integrate(vp, "left", 4.0, State(0.4 * s, -1.1 * s), 1e-2)
        np.testing.assert_allclose(scaled.u, s * base.u, rtol=1e-10, atol=1e-14 * abs(s))
        np.testing.assert_allclose(scaled.du, s * base.du, rtol=1e-10, atol=1e-14 * abs(s))


def test_fourth_order_convergence(classical):
    lam = 5.0
    exact = math.sin(2 * lam) / lam
    errs = [abs(ode.solve(classical, lam, h).end.u - exact) for h in (1e-2, 5e-3, 2.5e-3)]
    for coarse, fine in zip(errs, errs[1:]):
        assert 16 * 0.7 <= coarse / fine <= 16 * 1.3


def test_fourth_order_with_delay():
    vp = vp_of(make(q="1", delay=CLAMPED_DELAY.format(d=0.2, a=0.0, c=1.0)))
    ends = [ode.solve(vp, 5.0, h).end.u for h in (2e-2, 1e-2, 5e-3, 2.5e-3)]
    diffs = np.abs(np.diff(ends))
    ratios = diffs[:-1] / diffs[1:]
    assert np.all(ratios > 16 * 0.7) and np.all(ratios < 16 * 1.3)


def test_local_residual_second_difference():
    vp = vp_of(make(q="1 + x", delay=CLAMPED_DELAY.format(d=0.25, a=0.0, c=1.0)))
    lam = 3.0
    worst = []
    for h in (1e-2, 5e-3):
        traj = ode.solve(vp, lam, h).left
        u, x = traj.u, traj.x
        second = (u[2:] - 2 * u[1:-1] + u[:-2]) / h ** 2
        # rhs through the public scalar path
        expect = []
        for xi_, ui in zip(x[1:-1], u[1:-1]):
            d = min(0.25, min(xi_, abs(xi_ - 1.0)))
            expect.append(ode.rhs(vp, "left", lam, xi_, ui, traj.at(xi_ - d).u))
        # the clamped delay kinks at 0.25 and 0.75, where u''' jumps
        smooth = np.min(np.abs(x[1:-1, None] - np.array([0.25, 0.75])), axis=1) > 2 * h
        worst.append(np.max(np.abs(second - np.array(expect))[smooth]))
    assert 4 * 0.7 < worst[0] / worst[1] < 4 * 1.3
    assert worst[1] < 1e-3


def test_default_step(classical):
    assert ode.default_step(classical) == 1.0 / 4096


def test_solve_accepts_negative_lambda(classical):
    a = ode.solve(classical, 1.7, 1e-2).end
    b = ode.solve(classical, -1.7, 1e-2).end
    assert a == b


def test_no_warnings_on_regular_solve(generalized):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        ode.solve(generalized, 3.3, 1e-2)
