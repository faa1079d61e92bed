"""Expression trees for closed-form test functions.

An expression is a nested list such as ``["log", ["abs_coord", 1]]``.
Evaluation is vectorized over numpy arrays and carried out in a mixed
representation: strictly positive subexpressions are kept as logarithms
for as long as possible, so that ``log(|z1|^2 + |z2|^(1/2))`` stays exact at
``log|z_k| = -1e5`` where the plain formula would underflow to ``log 0``.

Supported nodes::

    ["const", c]
    ["abs_coord", k]          |z_k|, k is 1-based
    ["norm"]                  |z|
    ["abs_lin", [[re, im], ...]]   |sum_k c_k z_k| (needs complex coordinates)
    ["log", e]
    ["pow", e, c]
    ["*", a, b, ...]          factors may be bare numbers
    ["+", a, b, ...]
    ["max", a, b, ...]
"""

import numpy as np

from .errors import SchemaError

_ARITY = {
    "const": (1, 1),
    "abs_coord": (1, 1),
    "norm": (0, 0),
    "abs_lin": (1, 1),
    "log": (1, 1),
    "pow": (2, 2),
    "*": (1, None),
    "+": (1, None),
    "max": (1, None),
}


def validate(expr, dimension):
    """Check the structure of ``expr``; return the set of node names used."""
    used = set()

    def walk(node, path):
        if isinstance(node, (int, float)) and not isinstance(node, bool):
            used.add("const")
            return
        if not isinstance(node, (list, tuple)) or not node or not isinstance(node[0], str):
            raise SchemaError(f"malformed expression node at {path}: {node!r}")
        op, args = node[0], list(node[1:])
        if op not in _ARITY:
            raise SchemaError(f"unknown expression operator {op!r} at {path}")
        lo, hi = _ARITY[op]
        if len(args) < lo or (hi is not None and len(args) > hi):
            raise SchemaError(f"wrong number of arguments for {op!r} at {path}")
        used.add(op)
        if op == "const":
            if not _is_number(args[0]):
                raise SchemaError(f"const needs a number at {path}")
        elif op == "abs_coord":
            k = args[0]
            if not isinstance(k, int) or isinstance(k, bool) or not 1 <= k <= dimension:
                raise SchemaError(f"abs_coord index {k!r} out of range 1..{dimension} at {path}")
        elif op == "abs_lin":
            coeffs = args[0]
            if (not isinstance(coeffs, (list, tuple)) or len(coeffs) != dimension
                    or not all(isinstance(c, (list, tuple)) and len(c) == 2
                               and all(_is_number(x) for x in c) for c in coeffs)):
                raise SchemaError(f"abs_lin needs {dimension} [re, im] pairs at {path}")
        elif op == "pow":
            walk(args[0], path + [1])
            if not _is_number(args[1]):
                raise SchemaError(f"pow exponent must be a number at {path}")
        else:
            for i, a in enumerate(args):
                walk(a, path + [i + 1])

    walk(expr, [])
    return used


def _is_number(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


class _Ctx:
    __slots__ = ("logabs", "z")

    def __init__(self, logabs, z=None):
        self.logabs = logabs
        self.z = z


def _lin(val):
    kind, v = val
    if kind == "log":
        return np.exp(v)
    return v


def _eval(node, ctx):
    if isinstance(node, (int, float)):
        return ("lin", np.float64(node))
    op, args = node[0], node[1:]
    if op == "const":
        return ("lin", np.float64(args[0]))
    if op == "abs_coord":
        return ("log", ctx.logabs[args[0] - 1])
    if op == "norm":
        if ctx.logabs.shape[0] == 1:
            return ("log", ctx.logabs[0])
        with np.errstate(divide="ignore"):
            return ("log", 0.5 * np.logaddexp.reduce(2.0 * ctx.logabs, axis=0))
    if op == "abs_lin":
        if ctx.z is None:
            raise SchemaError("abs_lin needs complex coordinates; it is not available for toric profiles")
        c = np.array([complex(re, im) for re, im in args[0]])
        w = np.tensordot(c, ctx.z, axes=(0, 0))
        with np.errstate(divide="ignore"):
            return ("log", np.log(np.abs(w)))
    if op == "log":
        kind, v = _eval(args[0], ctx)
        if kind == "log":
            return ("lin", v)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.log(v)
        return ("lin", np.where(v < 0, np.nan, out))
    if op == "pow":
        kind, v = _eval(args[0], ctx)
        c = float(args[1])
        if kind == "log":
            with np.errstate(invalid="ignore"):
                return ("log", c * v)
        with np.errstate(divide="ignore", invalid="ignore"):
            return ("lin", np.power(v, c))
    if op == "*":
        vals = [_eval(a, ctx) for a in args]
        if all(k == "log" or np.all(np.asarray(v) > 0) and np.ndim(v) == 0 for k, v in vals):
            acc = 0.0
            for k, v in vals:
                acc = acc + (v if k == "log" else np.log(v))
            return ("log", acc)
        acc = np.float64(1.0)
        with np.errstate(invalid="ignore"):
            for val in vals:
                acc = acc * _lin(val)
        return ("lin", acc)
    if op == "+":
        vals = [_eval(a, ctx) for a in args]
        if all(k == "log" or (np.ndim(v) == 0 and v > 0) for k, v in vals):
            logs = [v if k == "log" else np.log(v) for k, v in vals]
            acc = logs[0]
            for v in logs[1:]:
                acc = np.logaddexp(acc, v)
            return ("log", acc)
        acc = np.float64(0.0)
        with np.errstate(invalid="ignore"):
            for val in vals:
                acc = acc + _lin(val)
        return ("lin", acc)
    if op == "max":
        vals = [_eval(a, ctx) for a in args]
        if all(k == "log" for k, _ in vals):
            acc = vals[0][1]
            for _, v in vals[1:]:
                acc = np.maximum(acc, v)
            return ("log", acc)
        acc = _lin(vals[0])
        for val in vals[1:]:
            acc = np.maximum(acc, _lin(val))
        return ("lin", acc)
    raise SchemaError(f"unknown expression operator {op!r}")


def evaluate_log(expr, logabs, z=None):
    """Evaluate ``expr`` given ``log|z_k|`` stacked along axis 0.

    ``logabs`` has shape ``(n, ...)``; ``z`` (complex, same shape) is only
    needed for ``abs_lin`` nodes. Returns a float array; ``-inf`` marks the
    polar set. ``+inf`` and NaN results are not psh values and are left for
    the caller to reject.
    """
    logabs = np.asarray(logabs, dtype=float)
    out = _lin(_eval(expr, _Ctx(logabs, z)))
    return np.broadcast_to(np.asarray(out, dtype=float), logabs.shape[1:]).copy()


def evaluate_profile(expr, t):
    """Evaluate a radial expression written in terms of ``["norm"]`` at ``|z| = e^t``."""
    t = np.asarray(t, dtype=float)
    return evaluate_log(expr, t[np.newaxis, ...])


def scale(expr, c):
    return ["*", float(c), expr]


def shift(expr, c):
    return ["+", expr, ["const", float(c)]]


def clip_below(expr, c):
    return ["max", expr, ["const", float(c)]]
