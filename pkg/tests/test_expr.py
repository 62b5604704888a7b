import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slz.expr import (
    ExprDomainError,
    ExprError,
    ExprNode,
    ExprOverflowError,
    ExprSyntaxError,
    compile_expr,
    eval_expr,
    parse_expr,
    pretty,
)

X = ExprNode("variable", "x")


def test_parse_power():
    assert parse_expr("x^2") == ExprNode("binary", "^", (X, ExprNode("constant", 2.0)))


def test_parse_weight_family():
    e = parse_expr("x^g * exp(-x)", ["g"])
    pw = ExprNode("binary", "^", (X, ExprNode("parameter", "g")))
    ex = ExprNode("call", "exp", (ExprNode("unary", "-", (X,)),))
    assert e == ExprNode("binary", "*", (pw, ex))
    assert e.params() == {"g"}


def test_syntax_error_offset():
    with pytest.raises(ExprSyntaxError) as info:
        parse_expr("2 + * x")
    assert info.value.offset == 4


@pytest.mark.parametrize("src", ["x +", "(x", "exp(x, 1)", "x 2", ""])
def test_malformed(src):
    with pytest.raises(ExprSyntaxError):
        parse_expr(src)


def test_undeclared_parameter():
    with pytest.raises(ExprError):
        parse_expr("x^g")


def test_eval_examples():
    assert eval_expr(parse_expr("x^2"), 3.0) == 9.0
    e = parse_expr("x^g * exp(-x)", ["g"])
    assert math.isclose(eval_expr(e, 1.0, {"g": 1.0}), math.exp(-1.0), rel_tol=1e-15)


@pytest.mark.parametrize("src", ["ln(x)", "sqrt(x)", "1/(x+1)"])
def test_domain_errors(src):
    with pytest.raises(ExprDomainError):
        eval_expr(parse_expr(src), -1.0)


def test_overflow():
    with pytest.raises(ExprOverflowError):
        eval_expr(parse_expr("exp(x)"), 1000.0)


def test_compile_matches_eval():
    e = parse_expr("x*exp(-x) + sin(x)^2 - abs(x)/3", [])
    f = compile_expr(e)
    for x in (0.1, 1.0, 2.5, 7.0):
        assert math.isclose(f(x), eval_expr(e, x), rel_tol=1e-14)


_leaf = st.one_of(
    st.just(X),
    st.integers(0, 9).map(lambda k: ExprNode("constant", float(k))),
)


def _extend(children):
    binary = st.tuples(st.sampled_from("+-*"), children, children).map(
        lambda t: ExprNode("binary", t[0], (t[1], t[2]))
    )
    unary = children.map(lambda c: ExprNode("unary", "-", (c,)))
    call = st.tuples(st.sampled_from(["sin", "cos"]), children).map(
        lambda t: ExprNode("call", t[0], (t[1],))
    )
    return st.one_of(binary, unary, call)


@settings(max_examples=100, deadline=None)
@given(st.recursive(_leaf, _extend, max_leaves=8), st.floats(-3, 3))
def test_pretty_round_trip(e, x):
    back = parse_expr(pretty(e))
    assert pretty(back) == pretty(e)
    assert math.isclose(eval_expr(back, x), eval_expr(e, x), rel_tol=1e-12, abs_tol=1e-12)
