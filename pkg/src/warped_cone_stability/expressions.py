"""Closed-form expressions in t for user-supplied warping functions.

Grammar: numeric constants, the variable ``t``, the constants ``pi`` and ``E``,
the operators ``+ - * /`` and ``**`` (``^`` is accepted as a power), ``pow(a, b)``
and the functions ``sin, cos, sinh, cosh, exp, log``. Anything else is rejected
before sympy sees it.
"""

import re
from dataclasses import dataclass, field
from tokenize import TokenError
from typing import Any, Callable

import numpy as np
import sympy
from sympy.parsing.sympy_parser import (
    convert_xor,
    parse_expr,
    standard_transformations,
)

from .errors import ExpressionError

T = sympy.Symbol("t", real=True)

ALLOWED_FUNCTIONS: dict[str, Any] = {
    "sin": sympy.sin,
    "cos": sympy.cos,
    "sinh": sympy.sinh,
    "cosh": sympy.cosh,
    "exp": sympy.exp,
    "log": sympy.log,
    "pow": sympy.Pow,
}
ALLOWED_CONSTANTS: dict[str, Any] = {"pi": sympy.pi, "E": sympy.E}

_IDENTIFIER = re.compile(r"[A-Za-z_][A-Za-z_0-9]*")
_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_ALLOWED_CHARS = re.compile(r"^[0-9A-Za-z_+\-*/^().,\s]*$")
_SYMPY_CLASSES = (sympy.sin, sympy.cos, sympy.sinh, sympy.cosh, sympy.exp, sympy.log)


def _check_tokens(source: str) -> None:
    if not source.strip():
        raise ExpressionError("Empty expression")
    if not _ALLOWED_CHARS.match(source):
        raise ExpressionError(f"Expression {source!r} contains unsupported characters")
    # Strip numeric literals first so exponents like 1e-3 are not read as names
    stripped = _NUMBER.sub(" ", source)
    allowed = {"t"} | set(ALLOWED_FUNCTIONS) | set(ALLOWED_CONSTANTS)
    for name in _IDENTIFIER.findall(stripped):
        if name not in allowed:
            raise ExpressionError(f"Unknown name {name!r} in expression {source!r}")


def _check_tree(expr: sympy.Expr, source: str) -> None:
    extra = expr.free_symbols - {T}
    if extra:
        names = ", ".join(sorted(str(s) for s in extra))
        raise ExpressionError(f"Expression {source!r} uses unknown symbols: {names}")
    for func in expr.atoms(sympy.Function):
        if not isinstance(func, _SYMPY_CLASSES):
            raise ExpressionError(f"Function {func.func} is not allowed in {source!r}")
    if expr.has(sympy.I) or expr.has(sympy.zoo) or expr.has(sympy.nan):
        raise ExpressionError(f"Expression {source!r} is not a finite real expression")


@dataclass(frozen=True)
class Expression:
    """A parsed expression compiled to a numpy callable of t."""

    source: str
    expr: sympy.Expr = field(repr=False)
    _func: Callable[[Any], Any] = field(repr=False, compare=False)

    def __call__(self, t: Any) -> Any:
        values = self._func(t)
        if np.ndim(t) == 0:
            return float(np.real(values))
        # Constant expressions come back as scalars from lambdify
        return np.broadcast_to(np.real(np.asarray(values, dtype=float)), np.shape(t)).copy()

    def __str__(self) -> str:
        return self.source


def parse_expression(source: str) -> Expression:
    """Parse and compile an expression of t.

    Raises:
        ExpressionError: The text uses names, functions or symbols outside the grammar.
    """
    if not isinstance(source, str):
        source = str(source)
    _check_tokens(source)
    local_dict = {"t": T, **ALLOWED_FUNCTIONS, **ALLOWED_CONSTANTS}
    try:
        expr = parse_expr(
            source,
            local_dict=local_dict,
            transformations=standard_transformations + (convert_xor,),
            evaluate=True,
        )
    except (SyntaxError, TokenError, TypeError, ValueError, sympy.SympifyError) as e:
        raise ExpressionError(f"Cannot parse expression {source!r}: {e}") from e
    expr = sympy.sympify(expr)
    _check_tree(expr, source)
    func = sympy.lambdify(T, expr, "numpy")
    return Expression(source=source, expr=expr, _func=func)
