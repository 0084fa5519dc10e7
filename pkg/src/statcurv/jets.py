"""Second-order forward-mode jets: value, gradient and Hessian carried together."""

from __future__ import annotations

import dataclasses
import math
from collections.abc import Callable

import numpy as np
import numpy.typing as npt

from .expr import BinOp, Call, Const, Coord, Expr, ExprError, Neg, NormSq, Pow, to_source

type Vector = npt.NDArray[np.float64]
type Matrix = npt.NDArray[np.float64]


class ExprDomainError(ExprError):
    def __init__(self, message: str, subexpression: Expr):
        self.subexpression = to_source(subexpression)
        super().__init__(f"{message} in {self.subexpression!r}")


def _frozen(a: npt.ArrayLike) -> npt.NDArray[np.float64]:
    arr = np.array(a, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclasses.dataclass(frozen=True, eq=False)
class Jet2:
    """A scalar with its exact gradient and Hessian at a point.

    Every rule below builds the Hessian from symmetric pieces only, so it is
    symmetric bit-for-bit.
    """

    value: float
    gradient: Vector
    hessian: Matrix

    @classmethod
    def constant(cls, value: float, dimension: int) -> Jet2:
        return cls(
            float(value),
            _frozen(np.zeros(dimension)),
            _frozen(np.zeros((dimension, dimension))),
        )

    @classmethod
    def coordinate(cls, index: int, point: Vector) -> Jet2:
        n = len(point)
        gradient = np.zeros(n)
        gradient[index] = 1.0
        return cls(float(point[index]), _frozen(gradient), _frozen(np.zeros((n, n))))

    @classmethod
    def norm_squared(cls, point: Vector) -> Jet2:
        n = len(point)
        return cls(
            float(np.dot(point, point)),
            _frozen(2.0 * point),
            _frozen(2.0 * np.eye(n)),
        )

    def __add__(self, other: Jet2) -> Jet2:
        return Jet2(
            self.value + other.value,
            _frozen(self.gradient + other.gradient),
            _frozen(self.hessian + other.hessian),
        )

    def __sub__(self, other: Jet2) -> Jet2:
        return Jet2(
            self.value - other.value,
            _frozen(self.gradient - other.gradient),
            _frozen(self.hessian - other.hessian),
        )

    def __neg__(self) -> Jet2:
        return Jet2(-self.value, _frozen(-self.gradient), _frozen(-self.hessian))

    def __mul__(self, other: Jet2) -> Jet2:
        cross = np.outer(self.gradient, other.gradient)
        return Jet2(
            self.value * other.value,
            _frozen(self.value * other.gradient + other.value * self.gradient),
            _frozen(
                self.value * other.hessian
                + other.value * self.hessian
                + (cross + cross.T)
            ),
        )

    def scale(self, factor: float) -> Jet2:
        return Jet2(
            factor * self.value,
            _frozen(factor * self.gradient),
            _frozen(factor * self.hessian),
        )

    def chain(self, d0: float, d1: float, d2: float) -> Jet2:
        """Compose with a scalar function h given h(v), h'(v), h''(v) at v = value."""
        return Jet2(
            d0,
            _frozen(d1 * self.gradient),
            _frozen(d1 * self.hessian + d2 * np.outer(self.gradient, self.gradient)),
        )

    def reciprocal(self) -> Jet2:
        v = self.value
        return self.chain(1.0 / v, -1.0 / (v * v), 2.0 / (v * v * v))

    def power(self, exponent: int) -> Jet2:
        v = self.value
        n = len(self.gradient)
        if exponent == 0:
            return Jet2.constant(1.0, n)
        if exponent == 1:
            return self
        d1 = exponent * v ** (exponent - 1)
        d2 = exponent * (exponent - 1) * v ** (exponent - 2)
        return self.chain(v**exponent, d1, d2)

    def exp(self) -> Jet2:
        e = math.exp(self.value)
        return self.chain(e, e, e)

    def log(self) -> Jet2:
        v = self.value
        return self.chain(math.log(v), 1.0 / v, -1.0 / (v * v))

    def sqrt(self) -> Jet2:
        r = math.sqrt(self.value)
        return self.chain(r, 0.5 / r, -0.25 / (r * self.value))

    def sin(self) -> Jet2:
        s, c = math.sin(self.value), math.cos(self.value)
        return self.chain(s, c, -s)

    def cos(self) -> Jet2:
        s, c = math.sin(self.value), math.cos(self.value)
        return self.chain(c, -s, -c)

    def is_finite(self) -> bool:
        return bool(
            math.isfinite(self.value)
            and np.all(np.isfinite(self.gradient))
            and np.all(np.isfinite(self.hessian))
        )


_UNARY: dict[str, Callable[[Jet2], Jet2]] = {
    "exp": Jet2.exp,
    "log": Jet2.log,
    "sqrt": Jet2.sqrt,
    "sin": Jet2.sin,
    "cos": Jet2.cos,
}


def eval_jet2(e: Expr, point: Vector) -> Jet2:
    point = np.asarray(point, dtype=np.float64)
    try:
        jet = _eval(e, point)
    except OverflowError:
        raise ExprDomainError("overflow", e) from None
    if not jet.is_finite():
        raise ExprDomainError("non-finite result", e)
    return jet


def evaluate(e: Expr, point: Vector) -> float:
    return eval_jet2(e, point).value


def _eval(e: Expr, point: Vector) -> Jet2:
    match e:
        case Const(value):
            return Jet2.constant(value, len(point))
        case Coord(index):
            return Jet2.coordinate(index, point)
        case NormSq():
            return Jet2.norm_squared(point)
        case Neg(operand):
            return -_eval(operand, point)
        case BinOp(op, left, right):
            a = _eval(left, point)
            b = _eval(right, point)
            match op:
                case "+":
                    return a + b
                case "-":
                    return a - b
                case "*":
                    return a * b
                case "/":
                    if b.value == 0.0:
                        raise ExprDomainError("division by zero", e)
                    return a * b.reciprocal()
        case Pow(base, exponent):
            b = _eval(base, point)
            if exponent < 0 and b.value == 0.0:
                raise ExprDomainError("zero raised to a negative power", e)
            return b.power(exponent)
        case Call(func, arg):
            a = _eval(arg, point)
            # float products overflow to inf silently; math.sin(inf) raises ValueError
            if not a.is_finite():
                raise ExprDomainError("non-finite value", arg)
            if func == "log" and a.value <= 0.0:
                raise ExprDomainError("log of non-positive value", e)
            if func == "sqrt" and a.value <= 0.0:
                raise ExprDomainError("sqrt of non-positive value", e)
            return _UNARY[func](a)
    raise ExprError(f"cannot evaluate {e!r}")
