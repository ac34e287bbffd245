"""Tiny expression language for wave data such as ``sin(2*x)+0.3``.

Text is parsed with :mod:`ast` and then restricted to numbers, the variables
``x``, ``y`` and ``t`` (one per expression unless more are allowed),
``+ - * /``, integer powers (``^`` or ``**``), ``sin``, ``cos`` and ``pi``.
"""
from __future__ import annotations

import ast
import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError

FUNCS = {"sin": np.sin, "cos": np.cos}
CONSTS = {"pi": math.pi}
VARIABLES = ("x", "y", "t")


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: object


def neg(e):
    """Negation in the normal form produced by ``parse`` (constants absorb the sign)."""
    return Num(-e.value) if isinstance(e, Num) else Neg(e)


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    func: str
    arg: object


_BINOPS = {ast.Add: "+", ast.Sub: "-", ast.Mult: "*", ast.Div: "/", ast.Pow: "^"}
_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def _convert(node):
    if isinstance(node, ast.Expression):
        return _convert(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
            and not isinstance(node.value, bool):
        return Num(float(node.value))
    if isinstance(node, ast.Name):
        if node.id in CONSTS:
            return Num(CONSTS[node.id])
        if node.id in VARIABLES:
            return Var(node.id)
        raise InvalidInputError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        arg = _convert(node.operand)
        if isinstance(node.op, ast.UAdd):
            return arg
        return neg(arg)
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        op = _BINOPS[type(node.op)]
        left, right = _convert(node.left), _convert(node.right)
        if op == "^" and not (isinstance(right, Num) and float(right.value).is_integer()
                              and right.value >= 0):
            raise InvalidInputError("powers must be non-negative integers")
        return BinOp(op, left, right)
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) \
            and node.func.id in FUNCS and len(node.args) == 1 and not node.keywords:
        return Call(node.func.id, _convert(node.args[0]))
    raise InvalidInputError(f"unsupported syntax: {ast.dump(node)[:60]}")


def parse(text: str, max_vars: int = 1):
    # Python's ^ is xor with lower precedence than +, so rewrite it first
    try:
        tree = ast.parse(text.strip().replace("^", "**"), mode="eval")
    except SyntaxError as exc:
        raise InvalidInputError(f"cannot parse expression {text!r}: {exc.msg}") from None
    e = _convert(tree)
    names = variables(e)
    if len(names) > max_vars:
        raise InvalidInputError(f"expression uses too many variables: {sorted(names)}")
    return e


def variables(e) -> set:
    if isinstance(e, Var):
        return {e.name}
    if isinstance(e, Num):
        return set()
    if isinstance(e, (Neg, Call)):
        return variables(e.arg)
    return variables(e.left) | variables(e.right)


def evaluate(e, value):
    """Evaluate at ``value`` (scalar or array) bound to the expression's variable.

    ``value`` may also be a dict ``{name: array}`` binding several variables.
    """
    if isinstance(e, Num):
        v = next(iter(value.values())) if isinstance(value, dict) else value
        return e.value + 0 * np.asarray(v, dtype=float)
    if isinstance(e, Var):
        if isinstance(value, dict):
            if e.name not in value:
                raise InvalidInputError(f"no value bound to {e.name!r}")
            return np.asarray(value[e.name], dtype=float)
        return np.asarray(value, dtype=float)
    if isinstance(e, Neg):
        return -evaluate(e.arg, value)
    if isinstance(e, Call):
        return FUNCS[e.func](evaluate(e.arg, value))
    a, b = evaluate(e.left, value), evaluate(e.right, value)
    if e.op == "+":
        return a + b
    if e.op == "-":
        return a - b
    if e.op == "*":
        return a * b
    if e.op == "/":
        return a / b
    return a ** int(e.right.value)


def to_text(e, parent: int = 0, right_side: bool = False) -> str:
    """Print with the minimum parentheses needed for ``parse`` to round-trip."""
    if isinstance(e, Num):
        s = repr(e.value)
        return f"({s})" if e.value < 0 or s.startswith("-") else s
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Call):
        return f"{e.func}({to_text(e.arg)})"
    if isinstance(e, Neg):
        s = "-" + to_text(e.arg, 3)
        return f"({s})" if parent >= 1 else s
    p = _PREC[e.op]
    if e.op == "^":
        s = f"{to_text(e.left, p + 1)}^{to_text(e.right, p + 1)}"
    else:
        s = f"{to_text(e.left, p)} {e.op} {to_text(e.right, p, True)}"
    if p < parent or (p == parent and right_side):
        return f"({s})"
    return s


@dataclass(frozen=True)
class ExprSpec:
    """A parsed expression together with its source text."""

    text: str
    tree: object

    @classmethod
    def parse(cls, text: str, max_vars: int = 1) -> "ExprSpec":
        return cls(text, parse(text, max_vars))

    @property
    def variables(self) -> set:
        return variables(self.tree)

    def __call__(self, value):
        return evaluate(self.tree, value)

    def __str__(self):
        return to_text(self.tree)
