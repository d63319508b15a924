"""Arithmetic expressions for user-defined velocity, source and input terms.

Grammar: numbers, ``+ - * /``, unary minus, parentheses, the names bound by
the caller and the functions ``sin cos exp min max floor``. Expressions are
parsed with :mod:`ast` and only whitelisted nodes are compiled; evaluation
is vectorized through numpy.
"""

from __future__ import annotations

import ast
import math
import operator
from collections.abc import Callable, Iterable, Mapping
from typing import Any

import numpy as np

FUNCTIONS: dict[str, Callable[..., Any]] = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "floor": np.floor,
    "min": np.minimum,
    "max": np.maximum,
}
CONSTANTS = {"pi": math.pi}

_BINARY = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}


class ExpressionError(ValueError):
    pass


class Expression:
    """Compiled expression over a fixed set of variable names."""

    def __init__(self, text: str, variables: Iterable[str]) -> None:
        self.text = text.strip()
        self.variables = frozenset(variables)
        try:
            tree = ast.parse(self.text, mode="eval")
        except SyntaxError as exc:
            raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
        self.names: set[str] = set()
        self._fn = self._compile(tree.body)

    def __call__(self, **values: Any) -> Any:
        return self._fn(values)

    def __repr__(self) -> str:
        return f"Expression({self.text!r})"

    def _compile(self, node: ast.AST) -> Callable[[Mapping[str, Any]], Any]:
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) \
                and not isinstance(node.value, bool):
            value = float(node.value)
            return lambda env: value

        if isinstance(node, ast.Name):
            name = node.id
            if name in CONSTANTS:
                value = CONSTANTS[name]
                return lambda env: value
            if name not in self.variables:
                raise ExpressionError(f"unknown name {name!r} in {self.text!r}")
            self.names.add(name)
            return lambda env: env[name]

        if isinstance(node, ast.BinOp) and type(node.op) in _BINARY:
            op = _BINARY[type(node.op)]
            left, right = self._compile(node.left), self._compile(node.right)
            return lambda env: op(left(env), right(env))

        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            op = _UNARY[type(node.op)]
            operand = self._compile(node.operand)
            return lambda env: op(operand(env))

        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
            fname = node.func.id
            if fname not in FUNCTIONS:
                raise ExpressionError(f"unknown function {fname!r} in {self.text!r}")
            arity = 2 if fname in ("min", "max") else 1
            if len(node.args) != arity:
                raise ExpressionError(f"{fname} takes {arity} argument(s) in {self.text!r}")
            fn = FUNCTIONS[fname]
            args = [self._compile(a) for a in node.args]
            return lambda env: fn(*(a(env) for a in args))

        raise ExpressionError(f"unsupported syntax {ast.dump(node)[:40]}... in {self.text!r}")
