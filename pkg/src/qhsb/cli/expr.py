"""Small expression language for time functions in config files.

Grammar: numbers (including imaginary literals such as ``0.3j``), the
variable ``t``, the constant ``pi``, the operators ``+ - * /`` and integer
powers ``**``, parentheses, and the calls ``sin``, ``cos``, ``exp``,
``conj`` and ``ramp(center, width)``. Anything else is rejected; no Python
code is ever evaluated.
"""

from __future__ import annotations

import ast
import math

from .. import trajectories as tr


class ExpressionError(ValueError):
    pass


_UNARY = {"sin": tr.sin, "cos": tr.cos, "exp": tr.exp, "conj": lambda f: tr._as_tf(f).conj()}


def _const_value(f) -> complex:
    f = tr._as_tf(f)
    if not f.is_constant:
        raise ExpressionError("expected a constant")
    return f.value


def _convert(node):
    if isinstance(node, ast.Expression):
        return _convert(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, complex)) and not isinstance(
        node.value, bool
    ):
        return tr.const(node.value)
    if isinstance(node, ast.Name):
        if node.id == "t":
            return tr.t
        if node.id == "pi":
            return tr.const(math.pi)
        raise ExpressionError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _convert(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp):
        a, b = _convert(node.left), _convert(node.right)
        if isinstance(node.op, ast.Add):
            return a + b
        if isinstance(node.op, ast.Sub):
            return a - b
        if isinstance(node.op, ast.Mult):
            return a * b
        if isinstance(node.op, ast.Div):
            return a / _const_value(b)
        if isinstance(node.op, ast.Pow):
            k = _const_value(b)
            if k.imag != 0 or k.real != int(k.real) or k.real < 0:
                raise ExpressionError("only non-negative integer powers are allowed")
            return a ** int(k.real)
        raise ExpressionError(f"operator {type(node.op).__name__} is not allowed")
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and not node.keywords:
        name = node.func.id
        args = [_convert(a) for a in node.args]
        if name in _UNARY:
            if len(args) != 1:
                raise ExpressionError(f"{name}() takes one argument")
            return _UNARY[name](args[0])
        if name == "ramp":
            if len(args) != 2:
                raise ExpressionError("ramp() takes (center, width)")
            c, w = (_const_value(x) for x in args)
            if c.imag or w.imag:
                raise ExpressionError("ramp arguments must be real")
            return tr.ramp(c.real, w.real)
        raise ExpressionError(f"unknown function {name!r}")
    raise ExpressionError(f"syntax not allowed: {type(node).__name__}")


def parse_expression(text: str) -> tr.TimeFunction:
    """Parse an expression string into a :class:`~qhsb.trajectories.TimeFunction`."""
    try:
        tree = ast.parse(text.strip(), mode="eval")
    except SyntaxError as exc:
        raise ExpressionError(f"cannot parse {text!r}: {exc.msg}") from None
    return _convert(tree)


def parse_number(text: str) -> complex:
    """Parse a constant expression (e.g. ``2*pi/3``) to a complex number."""
    return _const_value(parse_expression(text))
