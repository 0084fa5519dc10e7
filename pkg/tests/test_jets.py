import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from statcurv.expr import BinOp, Call, Const, Coord, Expr, NormSq, Pow, parse_expression
from statcurv.jets import ExprDomainError, Jet2, eval_jet2, evaluate

H = 1e-4


def _fd_gradient(e: Expr, p: np.ndarray) -> np.ndarray:
    out = np.empty(len(p))
    for i in range(len(p)):
        step = np.zeros(len(p))
        step[i] = H
        out[i] = (evaluate(e, p + step) - evaluate(e, p - step)) / (2 * H)
    return out


def _fd_hessian(e: Expr, p: np.ndarray) -> np.ndarray:
    # central differences of the exact gradient
    n = len(p)
    out = np.empty((n, n))
    for j in range(n):
        step = np.zeros(n)
        step[j] = H
        plus = eval_jet2(e, p + step).gradient
        minus = eval_jet2(e, p - step).gradient
        out[:, j] = (plus - minus) / (2 * H)
    return out


class TestJet2:
    def test_coordinate(self):
        jet = Jet2.coordinate(1, np.array([0.5, 2.0]))
        assert jet.value == 2.0
        assert jet.gradient.tolist() == [0.0, 1.0]
        assert not jet.hessian.any()

    def test_product_rule(self):
        p = np.array([2.0, 3.0])
        jet = eval_jet2(parse_expression("x1 * x2", 2), p)
        assert jet.value == 6.0
        assert jet.gradient.tolist() == [3.0, 2.0]
        assert jet.hessian.tolist() == [[0.0, 1.0], [1.0, 0.0]]

    def test_norm_squared(self):
        jet = eval_jet2(NormSq(), np.array([1.0, -2.0, 0.5]))
        assert jet.value == pytest.approx(5.25)
        assert jet.hessian.tolist() == (2.0 * np.eye(3)).tolist()

    def test_exp_of_sum(self):
        jet = eval_jet2(parse_expression("exp(x1 + x2)", 2), np.zeros(2))
        assert jet.value == 1.0
        assert jet.gradient.tolist() == [1.0, 1.0]
        assert jet.hessian.tolist() == [[1.0, 1.0], [1.0, 1.0]]

    def test_hessian_is_exactly_symmetric(self):
        e = parse_expression("sin(x1 * x2) / (2 + cos(x3)) * exp(x1 - x3)", 3)
        h = eval_jet2(e, np.array([0.3, -0.7, 1.1])).hessian
        assert np.array_equal(h, h.T)

    def test_negative_power(self):
        jet = eval_jet2(Pow(Coord(0), -2), np.array([2.0]))
        assert jet.value == 0.25
        assert jet.gradient[0] == pytest.approx(-0.25)
        assert jet.hessian[0, 0] == pytest.approx(0.375)

    def test_arrays_are_read_only(self):
        jet = eval_jet2(Coord(0), np.array([1.0]))
        with pytest.raises(ValueError):
            jet.gradient[0] = 2.0


class TestDomainErrors:
    @pytest.mark.parametrize(
        "source, p",
        [
            ("1 / x1", [0.0]),
            ("log(x1)", [-1.0]),
            ("log(x1)", [0.0]),
            ("sqrt(x1 - 1)", [0.5]),
            ("pow(x1, -1)", [0.0]),
        ],
    )
    def test_raises_with_subexpression(self, source, p):
        with pytest.raises(ExprDomainError) as info:
            eval_jet2(parse_expression(source, 1), np.array(p))
        assert info.value.subexpression

    def test_overflow(self):
        with pytest.raises(ExprDomainError):
            eval_jet2(parse_expression("exp(exp(exp(x1)))", 1), np.array([3.0]))

    @pytest.mark.parametrize("func", ["sin", "cos", "exp", "sqrt", "log"])
    def test_overflowed_product_inside_a_function(self, func):
        # exp(400)² overflows to inf without raising
        e = parse_expression(f"{func}(exp(x1) * exp(x1))", 1)
        with pytest.raises(ExprDomainError, match="non-finite") as info:
            eval_jet2(e, np.array([400.0]))
        assert "exp(x1)" in info.value.subexpression


_leaves = st.one_of(
    st.floats(min_value=-1.0, max_value=1.0).map(Const),
    st.integers(min_value=0, max_value=2).map(Coord),
    st.just(NormSq()),
)


def _extend(children: st.SearchStrategy[Expr]) -> st.SearchStrategy[Expr]:
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*"]), children, children).map(
            lambda t: BinOp(t[0], t[1], t[2])
        ),
        # Denominators stay at least 1 away from zero.
        children.map(lambda c: BinOp("/", c, BinOp("+", Const(1.0), Pow(c, 2)))),
        st.tuples(children, st.integers(min_value=2, max_value=3)).map(
            lambda t: Pow(Call("sin", t[0]), t[1])
        ),
        st.tuples(st.sampled_from(["sin", "cos"]), children).map(
            lambda t: Call(t[0], t[1])
        ),
        children.map(lambda c: Call("exp", Call("sin", c))),
        children.map(lambda c: Call("sqrt", BinOp("+", Const(2.0), Call("cos", c)))),
    )


expressions = st.recursive(_leaves, _extend, max_leaves=6)
points = st.lists(
    st.floats(min_value=-0.8, max_value=0.8), min_size=3, max_size=3
).map(np.array)


class TestAgainstFiniteDifferences:
    @settings(max_examples=100, derandomize=True, deadline=None)
    @given(e=expressions, p=points)
    def test_gradient_and_hessian(self, e, p):
        jet = eval_jet2(e, p)
        for exact, approx in (
            (jet.gradient, _fd_gradient(e, p)),
            (jet.hessian, _fd_hessian(e, p)),
        ):
            scale = 1.0 + np.max(np.abs(approx))
            assert np.max(np.abs(exact - approx)) <= 1e-6 * scale

    def test_known_closed_form(self):
        # f = exp(x1) * sin(x2)
        x1, x2 = 0.2, -0.4
        jet = eval_jet2(parse_expression("exp(x1) * sin(x2)", 2), np.array([x1, x2]))
        e, s, c = math.exp(x1), math.sin(x2), math.cos(x2)
        assert jet.gradient == pytest.approx([e * s, e * c])
        assert jet.hessian == pytest.approx(np.array([[e * s, e * c], [e * c, -e * s]]))
