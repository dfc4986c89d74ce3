"""Expression parsing, evaluation, and matrix compilation."""

import numpy as np
import pytest

from hetindex import (
    ParseError,
    UnboundVariable,
    compile_expr,
    compile_matrix,
    evaluate,
    free_variables,
    parse,
    parse_matrix,
    pretty,
)
from hetindex.expr import FUNCTIONS, eval_matrix


def test_precedence():
    assert evaluate(parse("2+3*4^2"), {}) == 50.0
    assert evaluate(parse("2*3+4"), {}) == 10.0
    assert evaluate(parse("(2+3)*4"), {}) == 20.0


def test_power_is_right_associative():
    assert evaluate(parse("2^3^2"), {}) == 512.0


def test_unary_minus_binds_below_power():
    assert evaluate(parse("-2^2"), {}) == -4.0
    assert evaluate(parse("(-2)^2"), {}) == 4.0


def test_variables_and_env():
    e = parse("lambda*t + 1", variables=("lambda", "t"))
    assert evaluate(e, {"lambda": 2.0, "t": 3.0}) == 7.0


def test_functions():
    assert evaluate(parse("cos(0)"), {}) == 1.0
    assert abs(evaluate(parse("sech(0.7)"), {}) - 1.0 / np.cosh(0.7)) < 1e-15
    assert abs(evaluate(parse("exp(log(3))"), {}) - 3.0) < 1e-12
    assert "sech" in FUNCTIONS and "tanh" in FUNCTIONS


def test_parse_error_reports_offset():
    with pytest.raises(ParseError) as exc:
        parse("2+*3")
    assert exc.value.offset == 2


def test_parse_error_on_trailing_garbage():
    with pytest.raises(ParseError):
        parse("1 + 2 )")


def test_disallowed_variable_rejected_at_parse():
    with pytest.raises(ParseError):
        parse("t + lambda", variables=("t",))


def test_unbound_variable_at_evaluation():
    with pytest.raises(UnboundVariable):
        evaluate(parse("t + 1"), {})


def test_unknown_function_rejected():
    with pytest.raises((ParseError, UnboundVariable)):
        parse("frobnicate(1)")


def test_free_variables():
    e = parse("sin(t)*lambda + t", variables=("t", "lambda"))
    assert free_variables(e) == {"t", "lambda"}
    assert free_variables(parse("1+2")) == set()


def test_pretty_round_trip():
    rng = np.random.default_rng(11)
    sources = [
        "1 - 2.5*lambda*sech(t)^2",
        "-t^3 + sin(t)*cos(lambda)",
        "(t + lambda)/(1 + t^2)",
        "exp(-abs(t))",
    ]
    for src in sources:
        e = parse(src, variables=("t", "lambda"))
        back = parse(pretty(e), variables=("t", "lambda"))
        for _ in range(10):
            env = {"t": float(rng.normal()), "lambda": float(rng.uniform())}
            assert abs(evaluate(e, env) - evaluate(back, env)) < 1e-12


def test_compile_expr_matches_evaluate():
    e = parse("tanh(t) + lambda^2", variables=("t", "lambda"))
    f = compile_expr(e, ("t", "lambda"))
    for t, lam in ((0.0, 0.0), (1.5, 0.3), (-2.0, 1.0)):
        assert abs(f(t, lam) - evaluate(e, {"t": t, "lambda": lam})) < 1e-15


def test_compile_expr_broadcasts():
    e = parse("t*lambda", variables=("t", "lambda"))
    f = compile_expr(e, ("t", "lambda"))
    t = np.linspace(0, 1, 5)
    out = f(t, 2.0)
    assert np.allclose(out, 2.0 * t)


def test_parse_matrix_and_eval():
    m = parse_matrix([["0", "1"], ["1 - lambda*sech(t)^2", "0"]])
    A = eval_matrix(m, {"t": 0.0, "lambda": 1.0})
    assert A.shape == (2, 2)
    assert np.allclose(A, [[0.0, 1.0], [0.0, 0.0]])


def test_compile_matrix_vectorizes():
    m = parse_matrix([["t", "0"], ["0", "lambda"]])
    f = compile_matrix(m, ("lambda", "t"))
    t = np.array([0.0, 1.0, 2.0])
    out = f(0.5, t)
    assert out.shape == (3, 2, 2)
    assert np.allclose(out[:, 0, 0], t)
    assert np.allclose(out[:, 1, 1], 0.5)


def test_matrix_rejects_ragged_rows():
    with pytest.raises((ParseError, ValueError)):
        parse_matrix([["1", "0"], ["1"]])
