"""Parser and evaluator for the coefficient mini-language.

Grammar (see GRAMMAR.md for the user-facing description)::

    expr    := term  (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('+' | '-') unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | 'pi' | VARIABLE | FUNC '(' expr (',' expr)* ')'
             | '(' expr ')'

Variables are x1, x2, x3 and t; ``pi`` is the constant.  Functions: sin,
cos, exp, log, abs (one argument) and min, max (two or more).  Unary minus
binds looser than '^', so -x1^2 is -(x1^2).  Evaluation broadcasts over
numpy arrays; non-finite results are the caller's concern (the samplers
reject them with a named cell).
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import ExpressionError, UnknownIdentifierError

VARIABLES = ("x1", "x2", "x3", "t")

_UNARY_FUNCS: dict[str, Callable] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "log": np.log,
    "abs": np.abs,
}
_VARIADIC_FUNCS: dict[str, Callable] = {
    "min": np.minimum,
    "max": np.maximum,
}

_TOKEN_RE = re.compile(
    r"(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # number | name | op | end
    text: str
    pos: int


def _tokenize(source: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(source)
    while pos < n:
        if source[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExpressionError(f"unexpected character {source[pos]!r}", source, pos)
        kind = m.lastgroup
        tokens.append(_Token(kind, m.group(), pos))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


# Expression nodes.  Each evaluates against an environment mapping variable
# names to scalars or broadcastable numpy arrays.


class _Num:
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = value

    def evaluate(self, env):
        return self.value


class _Var:
    __slots__ = ("name",)

    def __init__(self, name: str):
        self.name = name

    def evaluate(self, env):
        return env[self.name]


class _Unary:
    __slots__ = ("sign", "operand")

    def __init__(self, sign: float, operand):
        self.sign = sign
        self.operand = operand

    def evaluate(self, env):
        return self.sign * self.operand.evaluate(env)


class _BinOp:
    __slots__ = ("op", "left", "right")

    _OPS = {
        "+": np.add,
        "-": np.subtract,
        "*": np.multiply,
        "/": np.divide,
        "^": np.power,
    }

    def __init__(self, op: str, left, right):
        self.op = self._OPS[op]
        self.left = left
        self.right = right

    def evaluate(self, env):
        return self.op(self.left.evaluate(env), self.right.evaluate(env))


class _Call:
    __slots__ = ("func", "args")

    def __init__(self, func: Callable, args: list):
        self.func = func
        self.args = args

    def evaluate(self, env):
        vals = [a.evaluate(env) for a in self.args]
        if len(vals) == 1:
            return self.func(vals[0])
        out = vals[0]
        for v in vals[1:]:
            out = self.func(out, v)
        return out


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _tokenize(source)
        self.index = 0
        self.variables: set[str] = set()

    def peek(self) -> _Token:
        return self.tokens[self.index]

    def advance(self) -> _Token:
        tok = self.tokens[self.index]
        self.index += 1
        return tok

    def expect_op(self, text: str) -> None:
        tok = self.peek()
        if tok.kind != "op" or tok.text != text:
            raise ExpressionError(f"expected {text!r}", self.source, tok.pos)
        self.advance()

    def parse(self):
        root = self.parse_expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ExpressionError(f"unexpected {tok.text!r}", self.source, tok.pos)
        return root

    def parse_expr(self):
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.advance().text
            node = _BinOp(op, node, self.parse_term())
        return node

    def parse_term(self):
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.advance().text
            node = _BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        tok = self.peek()
        if tok.kind == "op" and tok.text in "+-":
            self.advance()
            operand = self.parse_unary()
            return operand if tok.text == "+" else _Unary(-1.0, operand)
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            return _BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        tok = self.advance()
        if tok.kind == "number":
            return _Num(float(tok.text))
        if tok.kind == "name":
            return self.finish_name(tok)
        if tok.kind == "op" and tok.text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        raise ExpressionError("expected a number, name, or '('", self.source, tok.pos)

    def finish_name(self, tok: _Token):
        name = tok.text
        if name == "pi":
            if self._at_call():
                raise ExpressionError("'pi' is a constant, not a function", self.source, tok.pos)
            return _Num(math.pi)
        if name in VARIABLES:
            self.variables.add(name)
            return _Var(name)
        if name in _UNARY_FUNCS or name in _VARIADIC_FUNCS:
            self.expect_op("(")
            args = [self.parse_expr()]
            while self.peek().kind == "op" and self.peek().text == ",":
                self.advance()
                args.append(self.parse_expr())
            self.expect_op(")")
            if name in _UNARY_FUNCS:
                if len(args) != 1:
                    raise ExpressionError(f"{name} takes exactly one argument", self.source, tok.pos)
                return _Call(_UNARY_FUNCS[name], args)
            if len(args) < 2:
                raise ExpressionError(f"{name} takes at least two arguments", self.source, tok.pos)
            return _Call(_VARIADIC_FUNCS[name], args)
        raise UnknownIdentifierError(f"unknown identifier {name!r}", self.source, tok.pos)

    def _at_call(self) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.text == "("


@dataclass(frozen=True)
class CoefficientExpr:
    """Parsed coefficient expression with its source retained."""

    source: str
    root: object
    variables: frozenset[str]

    @property
    def uses_t(self) -> bool:
        return "t" in self.variables

    def evaluate(self, coords: dict[str, np.ndarray], t: float | None = None):
        """Evaluate on broadcastable coordinate arrays, optionally at time t.

        Raises ExpressionError if the expression references a variable that
        the caller did not supply (e.g. x2 on a 1-D grid, or t in a
        spatial-only slot).
        """
        env = dict(coords)
        if t is not None:
            env["t"] = t
        missing = self.variables - set(env)
        if missing:
            name = sorted(missing)[0]
            raise ExpressionError(
                f"variable {name!r} is not available in this context",
                self.source,
                self.source.find(name),
            )
        with np.errstate(all="ignore"):
            return self.root.evaluate(env)


def parse_expression(source: str) -> CoefficientExpr:
    """Parse the mini-language; syntax errors carry the source offset."""
    parser = _Parser(source)
    root = parser.parse()
    return CoefficientExpr(source=source, root=root, variables=frozenset(parser.variables))
