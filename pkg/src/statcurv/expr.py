"""Expression DSL for scalar fields on a chart.

Grammar (whitespace-insensitive)::

    expr   := term (('+' | '-') term)*
    term   := factor (('*' | '/') factor)*
    factor := '-'? atom
    atom   := number | ident | func '(' args ')' | '(' expr ')'
    func   := exp | log | sqrt | sin | cos | pow
    ident  := x1 .. xn | normsq

``pow`` takes an integer literal exponent, ``pow(base, -2)``. ``normsq`` is
``x1^2 + ... + xn^2``.
"""

from __future__ import annotations

import dataclasses
import re
import typing

FUNCTIONS: typing.Final = frozenset({"exp", "log", "sqrt", "sin", "cos"})


class ExprError(Exception): ...


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, source: str, position: int):
        super().__init__(f"{message} at position {position}: {source!r}")
        self.position = position


@dataclasses.dataclass(frozen=True)
class Const:
    value: float


@dataclasses.dataclass(frozen=True)
class Coord:
    # 0-based; printed as x{index + 1}
    index: int


@dataclasses.dataclass(frozen=True)
class NormSq:
    pass


@dataclasses.dataclass(frozen=True)
class Neg:
    operand: Expr


@dataclasses.dataclass(frozen=True)
class BinOp:
    op: typing.Literal["+", "-", "*", "/"]
    left: Expr
    right: Expr


@dataclasses.dataclass(frozen=True)
class Pow:
    base: Expr
    exponent: int


@dataclasses.dataclass(frozen=True)
class Call:
    func: str
    arg: Expr


type Expr = Const | Coord | NormSq | Neg | BinOp | Pow | Call

ZERO: typing.Final = Const(0.0)
ONE: typing.Final = Const(1.0)

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/(),]))"
)
_COORD_RE = re.compile(r"x(\d+)")


@dataclasses.dataclass(frozen=True)
class _Token:
    kind: typing.Literal["number", "ident", "op", "end"]
    text: str
    position: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        match = _TOKEN_RE.match(source, pos)
        if match is None or match.end() == pos:
            offset = len(source[pos:]) - len(source[pos:].lstrip())
            raise ExprSyntaxError("unexpected character", source, pos + offset)
        kind = typing.cast(typing.Any, match.lastgroup)
        tokens.append(_Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, dimension: int):
        self.source = source
        self.dimension = dimension
        self.tokens = _tokenize(source)
        self.pos = 0

    @property
    def current(self) -> _Token:
        return self.tokens[self.pos]

    def error(self, message: str, token: _Token | None = None) -> ExprSyntaxError:
        token = token or self.current
        return ExprSyntaxError(message, self.source, token.position)

    def advance(self) -> _Token:
        token = self.current
        self.pos += 1
        return token

    def expect(self, text: str) -> None:
        if self.current.text != text or self.current.kind != "op":
            raise self.error(f"expected {text!r}")
        self.advance()

    def parse(self) -> Expr:
        expr = self.expr()
        if self.current.kind != "end":
            raise self.error(f"unexpected {self.current.text!r}")
        return expr

    def expr(self) -> Expr:
        node = self.term()
        while self.current.kind == "op" and self.current.text in ("+", "-"):
            op = typing.cast(typing.Literal["+", "-"], self.advance().text)
            node = BinOp(op, node, self.term())
        return node

    def term(self) -> Expr:
        node = self.factor()
        while self.current.kind == "op" and self.current.text in ("*", "/"):
            op = typing.cast(typing.Literal["*", "/"], self.advance().text)
            node = BinOp(op, node, self.factor())
        return node

    def factor(self) -> Expr:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Neg(self.atom())
        return self.atom()

    def atom(self) -> Expr:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Const(float(token.text))
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        if token.kind == "ident":
            self.advance()
            return self.identifier(token)
        if token.kind == "end":
            raise self.error("unexpected end of expression")
        raise self.error(f"unexpected {token.text!r}")

    def identifier(self, token: _Token) -> Expr:
        name = token.text
        if name == "normsq":
            return NormSq()
        if coord := _COORD_RE.fullmatch(name):
            index = int(coord.group(1))
            if not 1 <= index <= self.dimension:
                raise self.error(
                    f"coordinate index out of range ({name}, n={self.dimension})",
                    token,
                )
            return Coord(index - 1)
        if name == "pow":
            self.expect("(")
            base = self.expr()
            self.expect(",")
            negative = False
            if self.current.kind == "op" and self.current.text == "-":
                negative = True
                self.advance()
            exponent_token = self.current
            if exponent_token.kind != "number" or not exponent_token.text.isdigit():
                raise self.error("pow exponent must be an integer literal")
            self.advance()
            self.expect(")")
            exponent = int(exponent_token.text)
            return Pow(base, -exponent if negative else exponent)
        if name in FUNCTIONS:
            self.expect("(")
            arg = self.expr()
            self.expect(")")
            return Call(name, arg)
        raise self.error(f"unknown identifier {name!r}", token)


def parse_expression(source: str, dimension: int) -> Expr:
    if not source.strip():
        raise ExprSyntaxError("empty expression", source, 0)
    return _Parser(source, dimension).parse()


def max_coordinate(e: Expr) -> int:
    """Highest 1-based coordinate index referenced (0 if none)."""
    match e:
        case Coord(index):
            return index + 1
        case Const() | NormSq():
            return 0
        case Neg(operand):
            return max_coordinate(operand)
        case BinOp(_, left, right):
            return max(max_coordinate(left), max_coordinate(right))
        case Pow(base, _):
            return max_coordinate(base)
        case Call(_, arg):
            return max_coordinate(arg)


# Printing


_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def to_source(e: Expr) -> str:
    match e:
        case Const(value):
            text = repr(float(value))
            return f"({text})" if value < 0 or text.startswith("-") else text
        case Coord(index):
            return f"x{index + 1}"
        case NormSq():
            return "normsq"
        case Neg(operand):
            return f"-{_atom(operand)}"
        case BinOp(op, left, right):
            prec = _PRECEDENCE[op]
            left_text = to_source(left)
            if _precedence(left) < prec:
                left_text = f"({left_text})"
            right_text = to_source(right)
            if _precedence(right) <= prec:
                right_text = f"({right_text})"
            return f"{left_text} {op} {right_text}"
        case Pow(base, exponent):
            return f"pow({to_source(base)}, {exponent})"
        case Call(func, arg):
            return f"{func}({to_source(arg)})"


def _precedence(e: Expr) -> int:
    if isinstance(e, BinOp):
        return _PRECEDENCE[e.op]
    return 3


def _atom(e: Expr) -> str:
    if isinstance(e, Coord | NormSq | Pow | Call) or (
        isinstance(e, Const) and e.value >= 0
    ):
        return to_source(e)
    return f"({to_source(e)})"


# Symbolic differentiation. Literal zeros and ones are dropped so repeated
# derivatives of potentials stay small; nothing else is simplified.


def add(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return b
    if b == ZERO:
        return a
    return BinOp("+", a, b)


def sub(a: Expr, b: Expr) -> Expr:
    if b == ZERO:
        return a
    if a == ZERO:
        return Neg(b)
    return BinOp("-", a, b)


def mul(a: Expr, b: Expr) -> Expr:
    if a == ZERO or b == ZERO:
        return ZERO
    if a == ONE:
        return b
    if b == ONE:
        return a
    return BinOp("*", a, b)


def div(a: Expr, b: Expr) -> Expr:
    if a == ZERO:
        return ZERO
    if b == ONE:
        return a
    return BinOp("/", a, b)


def neg(a: Expr) -> Expr:
    return ZERO if a == ZERO else Neg(a)


def differentiate(e: Expr, index: int) -> Expr:
    """Partial derivative with respect to the 0-based coordinate ``index``."""
    match e:
        case Const():
            return ZERO
        case Coord(i):
            return ONE if i == index else ZERO
        case NormSq():
            return mul(Const(2.0), Coord(index))
        case Neg(operand):
            return neg(differentiate(operand, index))
        case BinOp("+", left, right):
            return add(differentiate(left, index), differentiate(right, index))
        case BinOp("-", left, right):
            return sub(differentiate(left, index), differentiate(right, index))
        case BinOp("*", left, right):
            return add(
                mul(differentiate(left, index), right),
                mul(left, differentiate(right, index)),
            )
        case BinOp("/", left, right):
            numerator = sub(
                mul(differentiate(left, index), right),
                mul(left, differentiate(right, index)),
            )
            return div(numerator, Pow(right, 2))
        case Pow(base, exponent):
            if exponent == 0:
                return ZERO
            inner = differentiate(base, index)
            if exponent == 1:
                return inner
            return mul(mul(Const(float(exponent)), Pow(base, exponent - 1)), inner)
        case Call(func, arg):
            inner = differentiate(arg, index)
            if inner == ZERO:
                return ZERO
            match func:
                case "exp":
                    return mul(e, inner)
                case "log":
                    return div(inner, arg)
                case "sqrt":
                    return div(inner, mul(Const(2.0), e))
                case "sin":
                    return mul(Call("cos", arg), inner)
                case "cos":
                    return neg(mul(Call("sin", arg), inner))
            raise ExprError(f"unknown function {func!r}")
        case _:
            raise ExprError(f"cannot differentiate {e!r}")
