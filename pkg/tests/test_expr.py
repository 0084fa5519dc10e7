import math

import numpy as np
import pytest

from statcurv.expr import (
    BinOp,
    Call,
    Const,
    Coord,
    ExprSyntaxError,
    Neg,
    NormSq,
    Pow,
    differentiate,
    max_coordinate,
    parse_expression,
    to_source,
)
from statcurv.jets import evaluate


class TestParseExpression:
    def test_precedence(self):
        e = parse_expression("1 + 2 * x1", 2)
        assert e == BinOp("+", Const(1.0), BinOp("*", Const(2.0), Coord(0)))

    def test_left_associative(self):
        e = parse_expression("x1 - x2 - 1", 2)
        assert e == BinOp("-", BinOp("-", Coord(0), Coord(1)), Const(1.0))

    def test_unary_minus_and_parens(self):
        e = parse_expression("-(x1 + x2)", 2)
        assert e == Neg(BinOp("+", Coord(0), Coord(1)))

    def test_functions_and_pow(self):
        e = parse_expression("exp(normsq) / pow(1 - x1, -2)", 2)
        assert e == BinOp(
            "/",
            Call("exp", NormSq()),
            Pow(BinOp("-", Const(1.0), Coord(0)), -2),
        )

    def test_scientific_notation(self):
        assert parse_expression("1.5e-3", 1) == Const(1.5e-3)

    def test_coordinate_out_of_range(self):
        with pytest.raises(ExprSyntaxError, match="coordinate index out of range"):
            parse_expression("x5", 4)

    def test_unknown_identifier(self):
        with pytest.raises(ExprSyntaxError, match="unknown"):
            parse_expression("tan(x1)", 2)

    @pytest.mark.parametrize("source", ["", "1 +", "(x1", "x1 x2", "pow(x1, 1.5)"])
    def test_malformed(self, source):
        with pytest.raises(ExprSyntaxError):
            parse_expression(source, 2)

    def test_max_coordinate(self):
        assert max_coordinate(parse_expression("x1 * sin(x3)", 4)) == 3
        assert max_coordinate(parse_expression("normsq + 2", 4)) == 0


class TestToSource:
    @pytest.mark.parametrize(
        "source",
        [
            "x1 - (x2 - x3)",
            "x1 / (x2 * x3)",
            "-x1 * (-2.5)",
            "4 / pow(1 - normsq, 2)",
            "exp(-normsq) + sqrt(2 + sin(x1))",
        ],
    )
    def test_reparse_evaluates_identically(self, source):
        e = parse_expression(source, 3)
        again = parse_expression(to_source(e), 3)
        p = np.array([0.3, -0.2, 0.7])
        assert evaluate(again, p) == evaluate(e, p)

    def test_negative_constant_is_parenthesized(self):
        assert to_source(BinOp("*", Const(-2.0), Coord(0))) == "(-2.0) * x1"


class TestDifferentiate:
    def test_polynomial(self):
        e = parse_expression("x1 * x1 * x2 + 3 * x2", 2)
        d = differentiate(e, 0)
        assert evaluate(d, np.array([2.0, 5.0])) == pytest.approx(20.0)

    def test_chain_rule(self):
        e = parse_expression("exp(sin(x1))", 1)
        d = differentiate(e, 0)
        x = 0.4
        assert evaluate(d, np.array([x])) == pytest.approx(
            math.exp(math.sin(x)) * math.cos(x)
        )

    def test_quotient_and_pow(self):
        e = parse_expression("4 / pow(1 - normsq, 2)", 2)
        d = differentiate(e, 1)
        p = np.array([0.1, 0.3])
        r2 = 0.1
        assert evaluate(d, p) == pytest.approx(16 * 0.3 / (1 - r2) ** 3)

    def test_independent_variable_is_pruned_to_zero(self):
        assert differentiate(parse_expression("exp(x1) * 7", 2), 1) == Const(0.0)
