"""Symbolic vector fields: expression trees, parsing, differentiation, and
extraction of step-error constants over a bounding box.

The grammar covers what the drift and input fields of an input-affine system
need: variables x1..xn, decimal literals, + - * /, integer powers with ^,
and sin/cos/exp.  Differentiation is exact; evaluation is available over
points and over boxes (natural interval extension).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .interval import (
    Box,
    Interval,
    IntervalMatrix,
    iv_cos,
    iv_exp,
    iv_sin,
    lognorm_inf,
    mat_inf_norm,
    _add_up,
    _mul_up,
)

__all__ = [
    "Expr",
    "Var",
    "Const",
    "Add",
    "Sub",
    "Mul",
    "Div",
    "Neg",
    "Pow",
    "Sin",
    "Cos",
    "Exp",
    "ExprSyntaxError",
    "parse",
    "diff",
    "eval_point",
    "eval_interval",
    "max_var_index",
    "InputAffineSystem",
    "StepErrorBounds",
    "compute_bounds",
]


class Expr:
    """Base class for expression nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    index: int  # 1-based, printed as x<index>

    def __str__(self) -> str:
        return f"x{self.index}"


@dataclass(frozen=True)
class Const(Expr):
    value: float

    def __str__(self) -> str:
        if self.value < 0:
            return f"({self.value!r})"
        return repr(self.value)


@dataclass(frozen=True)
class Add(Expr):
    a: Expr
    b: Expr

    def __str__(self) -> str:
        return f"{self.a} + {self.b}"


@dataclass(frozen=True)
class Sub(Expr):
    a: Expr
    b: Expr

    def __str__(self) -> str:
        return f"{self.a} - {_paren_term(self.b)}"


@dataclass(frozen=True)
class Mul(Expr):
    a: Expr
    b: Expr

    def __str__(self) -> str:
        return f"{_paren_term(self.a)}*{_paren_term(self.b)}"


@dataclass(frozen=True)
class Div(Expr):
    a: Expr
    b: Expr

    def __str__(self) -> str:
        return f"{_paren_term(self.a)}/{_paren_factor(self.b)}"


@dataclass(frozen=True)
class Neg(Expr):
    a: Expr

    def __str__(self) -> str:
        return f"-{_paren_term(self.a)}"


@dataclass(frozen=True)
class Pow(Expr):
    base: Expr
    exponent: int

    def __str__(self) -> str:
        return f"{_paren_factor(self.base)}^{self.exponent}"


@dataclass(frozen=True)
class Sin(Expr):
    a: Expr

    def __str__(self) -> str:
        return f"sin({self.a})"


@dataclass(frozen=True)
class Cos(Expr):
    a: Expr

    def __str__(self) -> str:
        return f"cos({self.a})"


@dataclass(frozen=True)
class Exp(Expr):
    a: Expr

    def __str__(self) -> str:
        return f"exp({self.a})"


def _paren_term(e: Expr) -> str:
    if isinstance(e, (Add, Sub, Neg)):
        return f"({e})"
    return str(e)


def _paren_factor(e: Expr) -> str:
    if isinstance(e, (Add, Sub, Mul, Div, Neg)):
        return f"({e})"
    return str(e)


class ExprSyntaxError(ValueError):
    """Malformed expression text; carries the 1-based offending token index."""

    def __init__(self, message: str, token_index: int):
        super().__init__(f"syntax error at token {token_index}: {message}")
        self.token_index = token_index


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            rest = text[pos:].strip()
            if not rest:
                break
            raise ExprSyntaxError(f"unrecognized input {rest[:10]!r}", len(tokens) + 1)
        pos = m.end()
        if m.group("num") is not None:
            tokens.append(("num", m.group("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
    tokens.append(("end", ""))
    return tokens


_FUNCTIONS = {"sin": Sin, "cos": Cos, "exp": Exp}
_VAR_RE = re.compile(r"^x([1-9][0-9]*)$")


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0

    def _peek(self) -> tuple[str, str]:
        return self.tokens[self.pos]

    def _next(self) -> tuple[str, str]:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def _fail(self, message: str):
        # report the upcoming (1-based) token position
        raise ExprSyntaxError(message, self.pos + 1)

    def _fail_here(self, message: str):
        # report the token just consumed
        raise ExprSyntaxError(message, self.pos)

    def parse(self) -> Expr:
        e = self._expr()
        kind, value = self._peek()
        if kind != "end":
            self._fail(f"unexpected {value!r}")
        return e

    def _expr(self) -> Expr:
        kind, value = self._peek()
        negate = False
        if kind == "op" and value in "+-":
            self._next()
            negate = value == "-"
        e = self._term()
        if negate:
            e = Neg(e)
        while True:
            kind, value = self._peek()
            if kind == "op" and value in "+-":
                self._next()
                rhs = self._term()
                e = Add(e, rhs) if value == "+" else Sub(e, rhs)
            else:
                return e

    def _term(self) -> Expr:
        e = self._power()
        while True:
            kind, value = self._peek()
            if kind == "op" and value in "*/":
                self._next()
                rhs = self._power()
                e = Mul(e, rhs) if value == "*" else Div(e, rhs)
            else:
                return e

    def _power(self) -> Expr:
        base = self._atom()
        kind, value = self._peek()
        if kind == "op" and value == "^":
            self._next()
            sign = 1
            kind, value = self._peek()
            if kind == "op" and value == "-":
                self._next()
                sign = -1
            kind, value = self._peek()
            if kind != "num" or not value.isdigit():
                self._fail("expected integer exponent after '^'")
            self._next()
            return Pow(base, sign * int(value))
        return base

    def _atom(self) -> Expr:
        kind, value = self._next()
        if kind == "num":
            return Const(float(value))
        if kind == "ident":
            m = _VAR_RE.match(value)
            if m:
                return Var(int(m.group(1)))
            fn = _FUNCTIONS.get(value)
            if fn is None:
                self._fail_here(f"unknown identifier {value!r}")
            kind2, value2 = self._next()
            if kind2 != "op" or value2 != "(":
                self._fail_here(f"expected '(' after {value}")
            arg = self._expr()
            kind2, value2 = self._next()
            if kind2 != "op" or value2 != ")":
                self._fail_here("expected ')'")
            return fn(arg)
        if kind == "op" and value == "(":
            e = self._expr()
            kind2, value2 = self._next()
            if kind2 != "op" or value2 != ")":
                self._fail_here("expected ')'")
            return e
        if kind == "op" and value == "-":
            return Neg(self._atom())
        self._fail_here("unexpected end of input" if kind == "end" else f"unexpected {value!r}")


def parse(text: str) -> Expr:
    """Parse expression text; raises ExprSyntaxError with token position."""
    return _Parser(text).parse()


def _exact_binop(x: float, y: float, op: str) -> float | None:
    # fold constants only when the float operation is exact
    try:
        fx, fy = Fraction(x), Fraction(y)
    except (OverflowError, ValueError):
        return None
    if op == "+":
        v = x + y
        exact = fx + fy == Fraction(v) if math.isfinite(v) else False
    elif op == "-":
        v = x - y
        exact = fx - fy == Fraction(v) if math.isfinite(v) else False
    else:
        v = x * y
        exact = fx * fy == Fraction(v) if math.isfinite(v) else False
    return v if exact else None


def _add(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const) and a.value == 0.0:
        return b
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and isinstance(b, Const):
        v = _exact_binop(a.value, b.value, "+")
        if v is not None:
            return Const(v)
    return Add(a, b)


def _sub(a: Expr, b: Expr) -> Expr:
    if isinstance(b, Const) and b.value == 0.0:
        return a
    if isinstance(a, Const) and a.value == 0.0:
        return _neg(b)
    if isinstance(a, Const) and isinstance(b, Const):
        v = _exact_binop(a.value, b.value, "-")
        if v is not None:
            return Const(v)
    return Sub(a, b)


def _neg(a: Expr) -> Expr:
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.a
    return Neg(a)


def _mul(a: Expr, b: Expr) -> Expr:
    if isinstance(a, Const):
        if a.value == 0.0:
            return Const(0.0)
        if a.value == 1.0:
            return b
    if isinstance(b, Const):
        if b.value == 0.0:
            return Const(0.0)
        if b.value == 1.0:
            return a
    if isinstance(a, Const) and isinstance(b, Const):
        v = _exact_binop(a.value, b.value, "*")
        if v is not None:
            return Const(v)
    return Mul(a, b)


def diff(e: Expr, j: int) -> Expr:
    """Exact partial derivative with respect to variable x<j> (1-based)."""
    if isinstance(e, Var):
        return Const(1.0 if e.index == j else 0.0)
    if isinstance(e, Const):
        return Const(0.0)
    if isinstance(e, Add):
        return _add(diff(e.a, j), diff(e.b, j))
    if isinstance(e, Sub):
        return _sub(diff(e.a, j), diff(e.b, j))
    if isinstance(e, Neg):
        return _neg(diff(e.a, j))
    if isinstance(e, Mul):
        return _add(_mul(diff(e.a, j), e.b), _mul(e.a, diff(e.b, j)))
    if isinstance(e, Div):
        num = _sub(_mul(diff(e.a, j), e.b), _mul(e.a, diff(e.b, j)))
        if isinstance(num, Const) and num.value == 0.0:
            return Const(0.0)
        return Div(num, Pow(e.b, 2))
    if isinstance(e, Pow):
        inner = diff(e.base, j)
        if isinstance(inner, Const) and inner.value == 0.0:
            return Const(0.0)
        if e.exponent == 0:
            return Const(0.0)
        return _mul(_mul(Const(float(e.exponent)), Pow(e.base, e.exponent - 1)), inner)
    if isinstance(e, Sin):
        return _mul(Cos(e.a), diff(e.a, j))
    if isinstance(e, Cos):
        return _neg(_mul(Sin(e.a), diff(e.a, j)))
    if isinstance(e, Exp):
        return _mul(Exp(e.a), diff(e.a, j))
    raise TypeError(f"cannot differentiate {type(e).__name__}")


def eval_point(e: Expr, x: Sequence[float]) -> float:
    if isinstance(e, Var):
        return float(x[e.index - 1])
    if isinstance(e, Const):
        return e.value
    if isinstance(e, Add):
        return eval_point(e.a, x) + eval_point(e.b, x)
    if isinstance(e, Sub):
        return eval_point(e.a, x) - eval_point(e.b, x)
    if isinstance(e, Neg):
        return -eval_point(e.a, x)
    if isinstance(e, Mul):
        return eval_point(e.a, x) * eval_point(e.b, x)
    if isinstance(e, Div):
        return eval_point(e.a, x) / eval_point(e.b, x)
    if isinstance(e, Pow):
        return eval_point(e.base, x) ** e.exponent
    if isinstance(e, Sin):
        return math.sin(eval_point(e.a, x))
    if isinstance(e, Cos):
        return math.cos(eval_point(e.a, x))
    if isinstance(e, Exp):
        return math.exp(eval_point(e.a, x))
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def eval_interval(e: Expr, x: Box) -> Interval:
    """Natural interval extension; encloses {e(p) : p in x}."""
    if isinstance(e, Var):
        return x[e.index - 1]
    if isinstance(e, Const):
        return Interval.point(e.value)
    if isinstance(e, Add):
        return eval_interval(e.a, x) + eval_interval(e.b, x)
    if isinstance(e, Sub):
        return eval_interval(e.a, x) - eval_interval(e.b, x)
    if isinstance(e, Neg):
        return -eval_interval(e.a, x)
    if isinstance(e, Mul):
        return eval_interval(e.a, x) * eval_interval(e.b, x)
    if isinstance(e, Div):
        return eval_interval(e.a, x) / eval_interval(e.b, x)
    if isinstance(e, Pow):
        return eval_interval(e.base, x) ** e.exponent
    if isinstance(e, Sin):
        return iv_sin(eval_interval(e.a, x))
    if isinstance(e, Cos):
        return iv_cos(eval_interval(e.a, x))
    if isinstance(e, Exp):
        return iv_exp(eval_interval(e.a, x))
    raise TypeError(f"cannot evaluate {type(e).__name__}")


def max_var_index(e: Expr) -> int:
    if isinstance(e, Var):
        return e.index
    if isinstance(e, (Const,)):
        return 0
    if isinstance(e, (Add, Sub, Mul, Div)):
        return max(max_var_index(e.a), max_var_index(e.b))
    if isinstance(e, (Neg, Sin, Cos, Exp)):
        return max_var_index(e.a)
    if isinstance(e, Pow):
        return max_var_index(e.base)
    raise TypeError(type(e).__name__)


def _is_zero(e: Expr) -> bool:
    return isinstance(e, Const) and e.value == 0.0


class InputAffineSystem:
    """System dx/dt = f(x) + sum_i g_i(x) v_i(t) with |v_i| <= V_i.

    Drift and input fields are expression vectors over x1..xn; first and
    second derivatives are prepared once at construction.
    """

    def __init__(
        self,
        dim: int,
        drift: Sequence[Expr | str],
        inputs: Sequence[Sequence[Expr | str]] = (),
        magnitudes: Sequence[float] = (),
    ):
        def _coerce(e):
            return parse(e) if isinstance(e, str) else e

        self.n = int(dim)
        if self.n < 1:
            raise ValueError("dimension must be >= 1")
        self.f: tuple[Expr, ...] = tuple(_coerce(e) for e in drift)
        self.g: tuple[tuple[Expr, ...], ...] = tuple(tuple(_coerce(e) for e in gi) for gi in inputs)
        self.V: tuple[float, ...] = tuple(float(v) for v in magnitudes)
        if len(self.f) != self.n:
            raise ValueError(f"drift has {len(self.f)} components, expected {self.n}")
        for gi in self.g:
            if len(gi) != self.n:
                raise ValueError("every input field must have one component per state dimension")
        if len(self.V) != len(self.g):
            raise ValueError("need one magnitude per input field")
        if any(v <= 0 for v in self.V):
            raise ValueError("input magnitudes must be positive")
        for e in self.f:
            if max_var_index(e) > self.n:
                raise ValueError(f"expression {e} references a variable beyond x{self.n}")
        for gi in self.g:
            for e in gi:
                if max_var_index(e) > self.n:
                    raise ValueError(f"expression {e} references a variable beyond x{self.n}")

        n = self.n
        self.df = tuple(tuple(diff(self.f[i], j + 1) for j in range(n)) for i in range(n))
        self.dg = tuple(tuple(tuple(diff(gi[i], j + 1) for j in range(n)) for i in range(n)) for gi in self.g)
        self.d2f = tuple(
            tuple(tuple(diff(self.df[i][j], k + 1) for k in range(n)) for j in range(n)) for i in range(n)
        )
        self.d2g = tuple(
            tuple(tuple(tuple(diff(dgi[i][j], k + 1) for k in range(n)) for j in range(n)) for i in range(n))
            for dgi in self.dg
        )

    @property
    def m(self) -> int:
        return len(self.g)

    @property
    def has_constant_inputs(self) -> bool:
        """True when every input field has identically zero Jacobian (additive noise)."""
        return all(_is_zero(entry) for dgi in self.dg for row in dgi for entry in row)

    def drift_jacobian(self, box: Box) -> IntervalMatrix:
        return IntervalMatrix(tuple(tuple(eval_interval(e, box) for e in row) for row in self.df))

    def input_jacobian(self, k: int, box: Box) -> IntervalMatrix:
        return IntervalMatrix(tuple(tuple(eval_interval(e, box) for e in row) for row in self.dg[k]))

    def rhs_interval(self, box: Box, input_ranges: Sequence[Interval]) -> tuple[Interval, ...]:
        """Interval hull of f(x) + sum g_i(x)u_i over x in box, u_i in input_ranges."""
        out = []
        for c in range(self.n):
            acc = eval_interval(self.f[c], box)
            for k, u in enumerate(input_ranges):
                acc = acc + eval_interval(self.g[k][c], box) * u
            out.append(acc)
        return tuple(out)


@dataclass(frozen=True)
class StepErrorBounds:
    """Constants bounding the field and its derivatives over a box.

    Primed values are assembled componentwise (sup-norm of sum_i V_i|g_i|
    and its derivatives), which is what the error formulas consume; the
    plain per-input weighted sums are kept alongside as *_sum.
    """

    K: float
    Kp: float
    L: float
    Lp: float
    H: float
    Hp: float
    Lam: float
    Ki: tuple[float, ...]
    Li: tuple[float, ...]
    Hi: tuple[float, ...]
    Kp_sum: float
    Lp_sum: float
    Hp_sum: float

    def __post_init__(self):
        if min(self.K, self.Kp, self.L, self.Lp, self.H, self.Hp) < 0:
            raise ValueError("bounds must be nonnegative")


def _sup_abs(e: Expr, box: Box) -> float:
    return eval_interval(e, box).mag


def compute_bounds(
    sys: InputAffineSystem, box: Box, hessian_norm: str = "max-entry"
) -> StepErrorBounds:
    """Upper bounds for ||f||, ||Df||, lognorm(Df), ||D^2 f|| and the input
    analogues over box; everything rounded upward.

    hessian_norm selects the convention for ||D^2 f||: "max-entry" (default)
    takes the largest second-derivative magnitude, "max-row-sum" sums each
    Hessian row before maximizing.
    """
    if hessian_norm not in ("max-entry", "max-row-sum"):
        raise ValueError(f"unknown hessian norm {hessian_norm!r}")
    n = sys.n

    K = max(_sup_abs(e, box) for e in sys.f)
    Ki = tuple(max(_sup_abs(e, box) for e in gi) for gi in sys.g)
    L = mat_inf_norm(sys.drift_jacobian(box))
    Li = tuple(mat_inf_norm(sys.input_jacobian(k, box)) for k in range(sys.m))
    Lam = lognorm_inf(sys.drift_jacobian(box))

    def hess_bound(d2):
        if hessian_norm == "max-entry":
            return max(
                (_sup_abs(d2[i][j][k], box) for i in range(n) for j in range(n) for k in range(n)),
                default=0.0,
            )
        best = 0.0
        for i in range(n):
            for j in range(n):
                s = 0.0
                for k in range(n):
                    s = _add_up(s, _sup_abs(d2[i][j][k], box))
                best = max(best, s)
        return best

    H = hess_bound(sys.d2f)
    Hi = tuple(hess_bound(d2gi) for d2gi in sys.d2g)

    # componentwise primes: sup-norm of sum_i V_i |g_i| and derivatives
    Kp = 0.0
    for c in range(n):
        s = 0.0
        for k in range(sys.m):
            s = _add_up(s, _mul_up(sys.V[k], _sup_abs(sys.g[k][c], box)))
        Kp = max(Kp, s)

    Lp = 0.0
    for r in range(n):
        s = 0.0
        for k in range(sys.m):
            row = 0.0
            for j in range(n):
                row = _add_up(row, _sup_abs(sys.dg[k][r][j], box))
            s = _add_up(s, _mul_up(sys.V[k], row))
        Lp = max(Lp, s)

    Hp = 0.0
    if hessian_norm == "max-entry":
        for i in range(n):
            for j in range(n):
                for l in range(n):
                    s = 0.0
                    for k in range(sys.m):
                        s = _add_up(s, _mul_up(sys.V[k], _sup_abs(sys.d2g[k][i][j][l], box)))
                    Hp = max(Hp, s)
    else:
        for i in range(n):
            for j in range(n):
                s = 0.0
                for k in range(sys.m):
                    row = 0.0
                    for l in range(n):
                        row = _add_up(row, _sup_abs(sys.d2g[k][i][j][l], box))
                    s = _add_up(s, _mul_up(sys.V[k], row))
                Hp = max(Hp, s)

    def weighted_sum(values):
        s = 0.0
        for k, v in enumerate(values):
            s = _add_up(s, _mul_up(sys.V[k], v))
        return s

    return StepErrorBounds(
        K=K,
        Kp=Kp,
        L=L,
        Lp=Lp,
        H=H,
        Hp=Hp,
        Lam=Lam,
        Ki=Ki,
        Li=Li,
        Hi=Hi,
        Kp_sum=weighted_sum(Ki),
        Lp_sum=weighted_sum(Li),
        Hp_sum=weighted_sum(Hi),
    )
