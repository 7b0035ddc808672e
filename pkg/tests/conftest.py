import copy
import json
import random

import pytest

from retarded_sl.problem import from_dict, validate

CLASSICAL = {
    "interval": {"a": 0.0, "c": 1.0, "b": 2.0},
    "p": {"p1": 1.0, "p2": 1.0},
    "q": "0",
    "delay": "0",
    "boundary": {"delta": [[1.0, 0.0], [1.0, 0.0]], "delta_tilde": [[0.0, 0.0], [0.0, 0.0]]},
    "transmission": {
        "gamma10": {"plus": 1.0, "minus": -1.0},
        "gamma2": {"plus": [0.0, 1.0], "minus": [0.0, -1.0]},
        "gamma2_tilde": {"plus": [0.0, 0.0], "minus": [0.0, 0.0]},
    },
}

# tilde coefficients nonzero except gamma21+~, so the lam^7 term is live
GENERALIZED = {
    "interval": {"a": 0.0, "c": 1.0, "b": 2.0},
    "p": {"p1": 1.0, "p2": 1.0},
    "q": "0.3",
    "delay": "0.1*min(x, abs(x - 1))",
    "boundary": {"delta": [[1.0, 0.5], [0.7, 0.4]], "delta_tilde": [[0.3, 1.0], [0.2, 1.0]]},
    "transmission": {
        "gamma10": {"plus": 1.0, "minus": -1.5},
        "gamma2": {"plus": [0.3, 1.0], "minus": [0.2, -0.8]},
        "gamma2_tilde": {"plus": [0.1, 0.0], "minus": [0.2, 1.0]},
    },
}

# a constant delay breaks x - delay(x) >= a near a; clamp it to the distance from a and c
CLAMPED_DELAY = "min({d}, min(x - {a}, abs(x - {c})))"


def make(base=CLASSICAL, **changes):
    """Deep-copied problem dict with dotted-key overrides, e.g. ``**{"p.p2": 2}``."""
    data = copy.deepcopy(base)
    for dotted, value in changes.items():
        keys = dotted.split(".")
        node = data
        for k in keys[:-1]:
            node = node[k]
        node[keys[-1]] = value
    return data


def vp_of(data, M=256):
    return validate(from_dict(data), M)


def random_problem(rng: random.Random, tilde_scale=1.0):
    """Desk-scale problem with smooth q and delay and no transmission singularity."""
    a = 0.0
    c = rng.uniform(0.8, 1.2)
    b = c + rng.uniform(0.8, 1.2)

    def u(lo=-1.0, hi=1.0):
        return round(rng.uniform(lo, hi), 6)

    g21p = u(0.5, 1.5) * rng.choice([-1, 1])
    data = {
        "interval": {"a": a, "c": c, "b": b},
        "p": {"p1": u(0.7, 1.5), "p2": u(0.7, 1.5)},
        "q": f"{u()} + {u()}*sin({u(0.5, 3)}*x)",
        "delay": f"{u(0.05, 0.5)}*min(x - {a}, abs(x - {c}))*(1 + 0.5*cos(x))",
        "boundary": {
            "delta": [[u(), u()], [u(), u()]],
            "delta_tilde": [[u() * tilde_scale, u() * tilde_scale], [u() * tilde_scale, u() * tilde_scale]],
        },
        "transmission": {
            "gamma10": {"plus": u(0.5, 1.5), "minus": u(-1.5, -0.5)},
            "gamma2": {"plus": [u(), g21p], "minus": [u(), u()]},
            # opposite sign to gamma21+ keeps the jump denominator away from zero
            "gamma2_tilde": {"plus": [u() * tilde_scale, -0.5 * tilde_scale * (1 if g21p > 0 else -1)],
                             "minus": [u() * tilde_scale, u() * tilde_scale]},
        },
    }
    return data


@pytest.fixture
def classical():
    return vp_of(CLASSICAL)


@pytest.fixture
def generalized():
    return vp_of(GENERALIZED)


@pytest.fixture
def write_problem(tmp_path):
    def _write(data, name="problem.json"):
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding="utf-8")
        return path
    return _write


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
