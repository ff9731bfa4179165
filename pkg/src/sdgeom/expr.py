"""Scalar expression AST: construction, symbolic differentiation, and
evaluation on floats or W-valued (nilpotent) arguments.

The AST is deliberately tiny: literals, variables, +, -, *, /, unary minus,
integer pow, and the smooth primitives sin/cos/exp/ln/sqrt.  Differentiation
does light constant folding only; no general simplifier.
"""

import math

from .errors import DomainError
from .nil import NilElement, lift_smooth

FUNCTIONS = ("sin", "cos", "exp", "ln", "sqrt")


class Expr:
    __slots__ = ()

    def __add__(self, other):
        return Add(self, as_expr(other))

    def __radd__(self, other):
        return Add(as_expr(other), self)

    def __sub__(self, other):
        return Sub(self, as_expr(other))

    def __rsub__(self, other):
        return Sub(as_expr(other), self)

    def __mul__(self, other):
        return Mul(self, as_expr(other))

    def __rmul__(self, other):
        return Mul(as_expr(other), self)

    def __truediv__(self, other):
        return Div(self, as_expr(other))

    def __rtruediv__(self, other):
        return Div(as_expr(other), self)

    def __neg__(self):
        return Neg(self)

    def __repr__(self):
        return f"Expr<{to_str(self)}>"


class Const(Expr):
    __slots__ = ("value",)

    def __init__(self, value):
        self.value = float(value)


class Var(Expr):
    __slots__ = ("name",)

    def __init__(self, name):
        self.name = name


class _Binary(Expr):
    __slots__ = ("left", "right")

    def __init__(self, left, right):
        self.left = left
        self.right = right


class Add(_Binary):
    __slots__ = ()


class Sub(_Binary):
    __slots__ = ()


class Mul(_Binary):
    __slots__ = ()


class Div(_Binary):
    __slots__ = ()


class Neg(Expr):
    __slots__ = ("arg",)

    def __init__(self, arg):
        self.arg = arg


class Pow(Expr):
    __slots__ = ("base", "power")

    def __init__(self, base, power):
        if not isinstance(power, int):
            raise TypeError("pow exponent must be an integer")
        self.base = base
        self.power = power


class Call(Expr):
    __slots__ = ("fn", "arg")

    def __init__(self, fn, arg):
        if fn not in FUNCTIONS:
            raise ValueError(f"unknown function {fn!r}")
        self.fn = fn
        self.arg = arg


def as_expr(x):
    if isinstance(x, Expr):
        return x
    if isinstance(x, (int, float)):
        return Const(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Expr")


def _const(e):
    return e.value if isinstance(e, Const) else None


def _fold_add(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca + cb)
    if ca == 0.0:
        return b
    if cb == 0.0:
        return a
    return Add(a, b)


def _fold_sub(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca - cb)
    if cb == 0.0:
        return a
    if ca == 0.0:
        return Neg(b)
    return Sub(a, b)


def _fold_mul(a, b):
    ca, cb = _const(a), _const(b)
    if ca is not None and cb is not None:
        return Const(ca * cb)
    if ca == 0.0 or cb == 0.0:
        return Const(0.0)
    if ca == 1.0:
        return b
    if cb == 1.0:
        return a
    return Mul(a, b)


def diff(e, var):
    """Exact symbolic derivative of `e` with respect to variable name `var`."""
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Var):
        return Const(1.0 if e.name == var else 0.0)
    if isinstance(e, Add):
        return _fold_add(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Sub):
        return _fold_sub(diff(e.left, var), diff(e.right, var))
    if isinstance(e, Mul):
        return _fold_add(_fold_mul(diff(e.left, var), e.right),
                         _fold_mul(e.left, diff(e.right, var)))
    if isinstance(e, Div):
        num = _fold_sub(_fold_mul(diff(e.left, var), e.right),
                        _fold_mul(e.left, diff(e.right, var)))
        if _const(num) == 0.0:
            return Const(0.0)
        return Div(num, Pow(e.right, 2))
    if isinstance(e, Neg):
        d = diff(e.arg, var)
        return Const(0.0) if _const(d) == 0.0 else Neg(d)
    if isinstance(e, Pow):
        d = diff(e.base, var)
        if _const(d) == 0.0 or e.power == 0:
            return Const(0.0)
        return _fold_mul(_fold_mul(Const(e.power), Pow(e.base, e.power - 1)), d)
    if isinstance(e, Call):
        d = diff(e.arg, var)
        if _const(d) == 0.0:
            return Const(0.0)
        if e.fn == "sin":
            outer = Call("cos", e.arg)
        elif e.fn == "cos":
            outer = Neg(Call("sin", e.arg))
        elif e.fn == "exp":
            outer = Call("exp", e.arg)
        elif e.fn == "ln":
            outer = Div(Const(1.0), e.arg)
        else:  # sqrt
            outer = Div(Const(0.5), Call("sqrt", e.arg))
        return _fold_mul(outer, d)
    raise TypeError(f"cannot differentiate {type(e).__name__}")


_MATH = {"sin": math.sin, "cos": math.cos, "exp": math.exp}


def _apply_fn(fn, v):
    if isinstance(v, NilElement):
        return lift_smooth(fn, v)
    if fn == "ln":
        if v <= 0:
            raise DomainError(f"ln of {v}")
        return math.log(v)
    if fn == "sqrt":
        if v < 0:
            raise DomainError(f"sqrt of {v}")
        return math.sqrt(v)
    return _MATH[fn](v)


def evaluate(e, env):
    """Evaluate with env: name -> float | NilElement (mixing allowed)."""
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise DomainError(f"unbound variable {e.name!r}") from None
    if isinstance(e, Add):
        return evaluate(e.left, env) + evaluate(e.right, env)
    if isinstance(e, Sub):
        return evaluate(e.left, env) - evaluate(e.right, env)
    if isinstance(e, Mul):
        return evaluate(e.left, env) * evaluate(e.right, env)
    if isinstance(e, Div):
        num = evaluate(e.left, env)
        den = evaluate(e.right, env)
        if isinstance(den, NilElement):
            return num * lift_smooth("reciprocal", den)
        if den == 0.0:
            raise DomainError("division by zero")
        return num / den
    if isinstance(e, Neg):
        return -evaluate(e.arg, env)
    if isinstance(e, Pow):
        base = evaluate(e.base, env)
        if isinstance(base, NilElement):
            return lift_smooth("power", base, exponent=e.power)
        if base == 0.0 and e.power < 0:
            raise DomainError("negative power of zero")
        return base ** e.power
    if isinstance(e, Call):
        return _apply_fn(e.fn, evaluate(e.arg, env))
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def free_vars(e, acc=None):
    if acc is None:
        acc = set()
    if isinstance(e, Var):
        acc.add(e.name)
    elif isinstance(e, _Binary):
        free_vars(e.left, acc)
        free_vars(e.right, acc)
    elif isinstance(e, Neg):
        free_vars(e.arg, acc)
    elif isinstance(e, Pow):
        free_vars(e.base, acc)
    elif isinstance(e, Call):
        free_vars(e.arg, acc)
    return acc


# precedence levels for printing: higher binds tighter
_PREC_ADD, _PREC_MUL, _PREC_NEG, _PREC_ATOM = 1, 2, 3, 4


def _prec(e):
    if isinstance(e, (Add, Sub)):
        return _PREC_ADD
    if isinstance(e, (Mul, Div)):
        return _PREC_MUL
    if isinstance(e, Neg):
        return _PREC_NEG
    return _PREC_ATOM


def to_str(e):
    """Deterministic surface rendering, parseable back by the DSL parser."""
    if isinstance(e, Const):
        v = e.value
        if v == int(v) and abs(v) < 1e15:
            return str(int(v)) if v >= 0 else f"(-{int(-v)})"
        return repr(v) if v >= 0 else f"({v!r})"
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Add):
        return f"{_wrap(e.left, _PREC_ADD)} + {_wrap(e.right, _PREC_ADD)}"
    if isinstance(e, Sub):
        # right side needs strictly higher precedence: a - (b + c)
        return f"{_wrap(e.left, _PREC_ADD)} - {_wrap(e.right, _PREC_ADD + 1)}"
    if isinstance(e, Mul):
        return f"{_wrap(e.left, _PREC_MUL)}*{_wrap(e.right, _PREC_MUL)}"
    if isinstance(e, Div):
        return f"{_wrap(e.left, _PREC_MUL)}/{_wrap(e.right, _PREC_MUL + 1)}"
    if isinstance(e, Neg):
        return f"-{_wrap(e.arg, _PREC_NEG)}"
    if isinstance(e, Pow):
        return f"pow({to_str(e.base)}, {e.power})"
    if isinstance(e, Call):
        return f"{e.fn}({to_str(e.arg)})"
    raise TypeError(f"cannot print {type(e).__name__}")


def _wrap(e, minimum):
    s = to_str(e)
    return f"({s})" if _prec(e) < minimum else s


def compile_numeric(e, varnames):
    """Compile to a fast float-only function of positional arguments."""
    names = {name: f"_v{i}" for i, name in enumerate(varnames)}

    def gen(e):
        if isinstance(e, Const):
            return repr(e.value)
        if isinstance(e, Var):
            return names[e.name]
        if isinstance(e, Add):
            return f"({gen(e.left)} + {gen(e.right)})"
        if isinstance(e, Sub):
            return f"({gen(e.left)} - {gen(e.right)})"
        if isinstance(e, Mul):
            return f"({gen(e.left)} * {gen(e.right)})"
        if isinstance(e, Div):
            return f"({gen(e.left)} / {gen(e.right)})"
        if isinstance(e, Neg):
            return f"(-{gen(e.arg)})"
        if isinstance(e, Pow):
            return f"({gen(e.base)} ** {e.power})"
        if isinstance(e, Call):
            fn = "log" if e.fn == "ln" else e.fn
            return f"_math.{fn}({gen(e.arg)})"
        raise TypeError(type(e).__name__)

    src = f"lambda {', '.join(names[v] for v in varnames)}: {gen(e)}"
    return eval(src, {"_math": math})  # noqa: S307 - generated from our own AST
