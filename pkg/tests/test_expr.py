import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from retarded_sl.expr import (
    BinOp, Call, Const, ExprDomainError, ExprSyntaxError, Neg, Num, UnknownIdentifier, Var,
    evaluate, evaluate_array, parse, to_text,
)


def test_precedence_add_mul():
    assert parse("2*x+1") == BinOp("+", BinOp("*", Num(2.0), Var()), Num(1.0))


def test_power_binds_tighter_than_call_argument():
    assert parse("sin(x)^2") == BinOp("^", Call("sin", (Var(),)), Num(2.0))


def test_unary_minus_below_power():
    assert parse("-x^2") == Neg(BinOp("^", Var(), Num(2.0)))


def test_power_right_associative():
    assert parse("2^3^2") == BinOp("^", Num(2.0), BinOp("^", Num(3.0), Num(2.0)))
    assert evaluate(parse("2^3^2"), 0.0) == 512.0


def test_left_associative_minus_div():
    assert evaluate(parse("10-4-3"), 0.0) == 3.0
    assert evaluate(parse("8/4/2"), 0.0) == 1.0


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse("2*)x(")
    assert info.value.offset == 2


@pytest.mark.parametrize("text", ["", "   ", "sin(", "1 +", "(x", "x)", "2 3", "min(x)"])
def test_malformed(text):
    with pytest.raises(ExprSyntaxError):
        parse(text)


def test_unknown_identifier():
    with pytest.raises(UnknownIdentifier) as info:
        parse("1 + y")
    assert info.value.offset == 4
    assert info.value.name == "y"


def test_constants():
    assert parse("pi") == Const("pi")
    assert evaluate(parse("pi"), 0.0) == math.pi
    assert evaluate(parse("e"), 0.0) == math.e
    assert evaluate(parse("2e1"), 0.0) == 20.0


@pytest.mark.parametrize("text,x,expected", [
    ("2*x+1", 1.5, 4.0),
    ("sin(x)", 0.0, 0.0),
    ("pos(x - 1)", 0.5, 0.0),
    ("pos(x - 1)", 3.0, 2.0),
    ("max(x, 2) + min(x, 2)", 5.0, 7.0),
    ("abs(-x)", 3.0, 3.0),
    ("sqrt(x)*exp(0)*cos(0)", 4.0, 2.0),
    ("log(e^2)", 0.0, 2.0),
    ("2^-1", 0.0, 0.5),
])
def test_evaluate(text, x, expected):
    assert evaluate(parse(text), x) == pytest.approx(expected, rel=1e-15, abs=0)


@pytest.mark.parametrize("text,x", [
    ("log(x)", -1.0), ("log(x)", 0.0), ("sqrt(x)", -1.0), ("1/x", 0.0),
    ("x^0.5", -2.0), ("x^-1", 0.0), ("exp(x)", 1000.0),
])
def test_domain_errors(text, x):
    with pytest.raises(ExprDomainError):
        evaluate(parse(text), x)


def test_array_matches_scalar():
    e = parse("0.3 + sin(2*x)^2 - pos(x - 0.5)*exp(-x) + max(x, 0.2)/sqrt(1 + x^2)")
    xs = np.linspace(-1.0, 2.0, 101)
    got = evaluate_array(e, xs)
    want = [evaluate(e, float(x)) for x in xs]
    np.testing.assert_allclose(got, want, rtol=1e-14, atol=1e-15)


def test_array_domain_error_names_point():
    with pytest.raises(ExprDomainError) as info:
        evaluate_array(parse("log(x)"), np.array([1.0, 0.5, -0.25, 2.0]))
    assert info.value.x == -0.25


# -- properties --------------------------------------------------------------

_leaves = st.one_of(
    st.floats(min_value=0.0, max_value=1e6, allow_nan=False, allow_infinity=False).map(Num),
    st.just(Var()),
    st.sampled_from([Const("pi"), Const("e")]),
)


def _extend(children):
    unary = st.sampled_from(["sin", "cos", "tan", "exp", "log", "sqrt", "abs", "pos"])
    return st.one_of(
        children.map(Neg),
        st.tuples(st.sampled_from(["+", "-", "*", "/", "^"]), children, children).map(
            lambda t: BinOp(*t)),
        st.tuples(unary, children).map(lambda t: Call(t[0], (t[1],))),
        st.tuples(st.sampled_from(["min", "max"]), children, children).map(
            lambda t: Call(t[0], (t[1], t[2]))),
    )


exprs = st.recursive(_leaves, _extend, max_leaves=12)


@settings(max_examples=300, deadline=None)
@given(exprs)
def test_round_trip(e):
    assert parse(to_text(e)) == e


@settings(max_examples=200, deadline=None)
@given(exprs, st.floats(min_value=-10, max_value=10))
def test_evaluation_is_pure(e, x):
    def once():
        try:
            return ("ok", evaluate(e, x))
        except ExprDomainError:
            return ("domain", None)
    first, second = once(), once()
    assert first == second
    if first[0] == "ok":
        assert math.isfinite(first[1])


def test_parse_deterministic():
    text = "sin(x)^2 + cos(2*x)/(1 + x^2) - -3"
    assert parse(text) == parse(text)
