"""Polynomial models: multivariate polynomials over the unit box plus a
uniform error bound, representing function enclosures.

A model (p, e) over [-1,1]^v stands for every function within e of p in the
sup norm.  All operations preserve that enclosure: coefficient arithmetic is
done in doubles and the rounding slack is pushed into e, degree-truncated
mass is pushed into e, and composition with elementary functions carries a
Lagrange remainder.

Exponent tuples are packed 4 bits per variable into a single int, so the
degree cap must stay <= 7 (monomial products then never overflow a nibble).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Iterable, Sequence

from .interval import Interval, Box, IntervalDomainError, iv_cos, iv_exp, iv_sin, _add_up, _mul_up
from . import symexpr
from .symexpr import Expr

__all__ = [
    "Role",
    "VarInfo",
    "PolynomialModel",
    "VectorModel",
    "ArityMismatchError",
    "compose_expr",
]

_EPS = 2.220446049250313e-16
_TINY = 5e-324
_SLACK_INFLATE = 1.000000002


class ArityMismatchError(ValueError):
    """Models combined over different variable layouts."""


class Role(str, Enum):
    STATE = "state"
    INPUT = "input"
    NOISE = "noise"
    TIME = "time"


@dataclass(frozen=True)
class VarInfo:
    """One unit-domain variable: its meaning and the affine map into the
    semantic domain (center + radius * z)."""

    role: Role
    born: int = 0
    center: float = 0.0
    radius: float = 1.0
    axis: int | None = None


_DEG_CACHE: dict[int, int] = {}


def _degree_of(key: int) -> int:
    d = _DEG_CACHE.get(key)
    if d is None:
        d = 0
        k = key
        while k:
            d += k & 0xF
            k >>= 4
        _DEG_CACHE[key] = d
    return d


def _odd_mask(arity: int) -> int:
    # low bit of every nibble
    return int("1" * arity, 16) if arity else 0


def _grown(slack: float) -> float:
    """Sound upper bound for a plain-float accumulated slack sum."""
    if slack == 0.0:
        return 0.0
    return slack * _SLACK_INFLATE + _TINY


@dataclass(frozen=True)
class PolynomialModel:
    vars: tuple[VarInfo, ...]
    terms: dict[int, float]
    error: float
    max_degree: int

    def __post_init__(self):
        if self.error < 0 or math.isnan(self.error):
            raise ValueError("model error must be nonnegative")
        if not 0 <= self.max_degree <= 7:
            raise ValueError("degree cap must be between 0 and 7")

    # ------------------------------------------------------------------ build
    @staticmethod
    def constant(value: float, vars: tuple[VarInfo, ...], max_degree: int, error: float = 0.0) -> "PolynomialModel":
        terms = {0: float(value)} if value != 0.0 else {}
        return PolynomialModel(vars, terms, error, max_degree)

    @staticmethod
    def from_var(position: int, vars: tuple[VarInfo, ...], max_degree: int) -> "PolynomialModel":
        if not 0 <= position < len(vars):
            raise IndexError("variable position out of range")
        return PolynomialModel(vars, {1 << (4 * position): 1.0}, 0.0, max_degree)

    @property
    def arity(self) -> int:
        return len(self.vars)

    def _check_compat(self, other: "PolynomialModel") -> None:
        if self.vars is not other.vars and self.vars != other.vars:
            raise ArityMismatchError("models have different variable layouts")

    # ------------------------------------------------------------------ arithmetic
    def __neg__(self) -> "PolynomialModel":
        return PolynomialModel(self.vars, {k: -c for k, c in self.terms.items()}, self.error, self.max_degree)

    def __add__(self, other: "PolynomialModel") -> "PolynomialModel":
        self._check_compat(other)
        out = dict(self.terms)
        slack = 0.0
        for k, c in other.terms.items():
            prev = out.get(k)
            if prev is None:
                out[k] = c
            else:
                v = prev + c
                if v == 0.0:
                    del out[k]
                else:
                    out[k] = v
                slack += abs(v) * _EPS
        e = _add_up(_add_up(self.error, other.error), _grown(slack))
        return PolynomialModel(self.vars, out, e, self.max_degree)

    def __sub__(self, other: "PolynomialModel") -> "PolynomialModel":
        return self + (-other)

    def __mul__(self, other: "PolynomialModel") -> "PolynomialModel":
        self._check_compat(other)
        cap = self.max_degree
        out: dict[int, float] = {}
        slack = 0.0
        dropped = 0.0
        deg = _degree_of
        for k1, c1 in self.terms.items():
            d1 = deg(k1)
            for k2, c2 in other.terms.items():
                c = c1 * c2
                if d1 + deg(k2) > cap:
                    dropped += abs(c)
                    slack += abs(c) * _EPS
                    continue
                k = k1 + k2
                prev = out.get(k)
                if prev is None:
                    out[k] = c
                else:
                    v = prev + c
                    if v == 0.0:
                        del out[k]
                    else:
                        out[k] = v
                    slack += abs(v) * _EPS
                slack += abs(c) * _EPS
        pa = self.poly_magnitude()
        pb = other.poly_magnitude()
        e = _mul_up(pa, other.error)
        e = _add_up(e, _mul_up(pb, self.error))
        e = _add_up(e, _mul_up(self.error, other.error))
        e = _add_up(e, _grown(dropped))
        e = _add_up(e, _grown(slack))
        return PolynomialModel(self.vars, out, e, self.max_degree)

    def scale(self, s: float) -> "PolynomialModel":
        if s == 0.0:
            return PolynomialModel.constant(0.0, self.vars, self.max_degree)
        out = {}
        slack = 0.0
        for k, c in self.terms.items():
            v = c * s
            out[k] = v
            slack += abs(v) * _EPS
        e = _add_up(_mul_up(abs(s), self.error), _grown(slack))
        return PolynomialModel(self.vars, out, e, self.max_degree)

    def add_scalar(self, v: float) -> "PolynomialModel":
        if v == 0.0:
            return self
        out = dict(self.terms)
        prev = out.get(0, 0.0)
        s = prev + v
        if s == 0.0:
            out.pop(0, None)
        else:
            out[0] = s
        e = _add_up(self.error, _grown(abs(s) * _EPS))
        return PolynomialModel(self.vars, out, e, self.max_degree)

    def add_error(self, extra: float) -> "PolynomialModel":
        if extra < 0:
            raise ValueError("error increment must be nonnegative")
        return replace(self, error=_add_up(self.error, extra))

    def poly_magnitude(self) -> float:
        """Upper bound of sup|p| over the unit box (term-magnitude sum)."""
        s = 0.0
        for c in self.terms.values():
            s += abs(c)
        return s * _SLACK_INFLATE + _TINY if s else 0.0

    # ------------------------------------------------------------------ range
    def range(self, method: str = "term-sum") -> Interval:
        """Enclosure of {p(z)+d : z in unit box, |d| <= error}."""
        if method == "term-sum":
            r = self._range_term_sum(self.terms)
        elif method == "subdivide":
            r = self._range_subdivide()
        else:
            raise ValueError(f"unknown range method {method!r}")
        return r.inflate(self.error) if self.error else r

    def _range_term_sum(self, terms: dict[int, float]) -> Interval:
        # monomials with any odd exponent span [-1,1]; all-even span [0,1]
        lo = hi = terms.get(0, 0.0)
        odd = _odd_mask(self.arity)
        for k, c in terms.items():
            if k == 0:
                continue
            a = abs(c)
            if k & odd:
                lo = -_add_up(-lo, a)
                hi = _add_up(hi, a)
            elif c >= 0:
                hi = _add_up(hi, c)
            else:
                lo = -_add_up(-lo, a)
        return Interval(lo, hi)

    def _range_subdivide(self) -> Interval:
        v = self.arity
        if v == 0 or v > 10:
            return self._range_term_sum(self.terms)
        result: Interval | None = None
        for mask in range(1 << v):
            lo = hi = self.terms.get(0, 0.0)
            for k, c in self.terms.items():
                if k == 0:
                    continue
                # sign of the monomial over this orthant: parity of
                # odd-exponent variables sitting in negative halves
                neg_parity = 0
                kk = k
                pos = 0
                while kk:
                    e = kk & 0xF
                    if (e & 1) and (mask >> pos) & 1:
                        neg_parity ^= 1
                    kk >>= 4
                    pos += 1
                a = abs(c)
                if neg_parity == 0:
                    # monomial in [0, 1] here
                    if c >= 0:
                        hi = _add_up(hi, a)
                    else:
                        lo = -_add_up(-lo, a)
                else:
                    # monomial in [-1, 0] here
                    if c >= 0:
                        lo = -_add_up(-lo, a)
                    else:
                        hi = _add_up(hi, a)
            piece = Interval(lo, hi)
            result = piece if result is None else result.hull(piece)
        return result if result is not None else Interval.point(0.0)

    # ------------------------------------------------------------------ structure ops
    def truncate(self, cap: int) -> "PolynomialModel":
        """Reduce the degree cap, folding removed mass into the error."""
        if cap >= self.max_degree:
            return replace(self, max_degree=cap)
        out = {}
        dropped = 0.0
        for k, c in self.terms.items():
            if _degree_of(k) > cap:
                dropped += abs(c)
            else:
                out[k] = c
        return PolynomialModel(self.vars, out, _add_up(self.error, _grown(dropped)), cap)

    def compress(self, threshold: float) -> "PolynomialModel":
        """Fold coefficients with |c| <= threshold into the error."""
        if threshold <= 0.0:
            return self
        out = {}
        dropped = 0.0
        for k, c in self.terms.items():
            if k != 0 and abs(c) <= threshold:
                dropped += abs(c)
            else:
                out[k] = c
        if not dropped:
            return self
        return PolynomialModel(self.vars, out, _add_up(self.error, _grown(dropped)), self.max_degree)

    def sweep(self, positions: Iterable[int], drop: bool = True) -> "PolynomialModel":
        """Replace dependence on the given variables by a uniform error."""
        pos = sorted(set(positions))
        if not pos:
            return self
        mask = 0
        for p in pos:
            if not 0 <= p < self.arity:
                raise IndexError("sweep position out of range")
            mask |= 0xF << (4 * p)
        out = {}
        swept = 0.0
        for k, c in self.terms.items():
            if k & mask:
                swept = _add_up(swept, abs(c))
            else:
                out[k] = c
        e = _add_up(self.error, swept)
        m = PolynomialModel(self.vars, out, e, self.max_degree)
        if drop:
            keep = [i for i in range(self.arity) if i not in set(pos)]
            m = m.reindex(keep)
        return m

    def reindex(self, keep: Sequence[int]) -> "PolynomialModel":
        """Keep only the listed variable positions (they must be inert in
        dropped positions); re-pack keys accordingly."""
        keep = list(keep)
        new_vars = tuple(self.vars[i] for i in keep)
        shift_of = {old: 4 * new for new, old in enumerate(keep)}
        dropped_mask = 0
        keep_set = set(keep)
        for i in range(self.arity):
            if i not in keep_set:
                dropped_mask |= 0xF << (4 * i)
        out = {}
        for k, c in self.terms.items():
            if k & dropped_mask:
                raise ValueError("cannot drop a variable the model still depends on")
            nk = 0
            kk = k
            pos = 0
            while kk:
                e = kk & 0xF
                if e:
                    nk |= e << shift_of[pos]
                kk >>= 4
                pos += 1
            out[nk] = c
        return PolynomialModel(new_vars, out, self.error, self.max_degree)

    def extend(self, new_vars: Sequence[VarInfo]) -> "PolynomialModel":
        """Append fresh (independent) variables; keys are unchanged."""
        return replace(self, vars=self.vars + tuple(new_vars))

    def substitute_unit(self, position: int, value: float) -> "PolynomialModel":
        """Substitute z_position := value with value in {-1.0, 1.0} (exact)."""
        if value not in (-1.0, 1.0):
            raise ValueError("substitute_unit only supports the endpoints -1 and 1")
        shift = 4 * position
        out: dict[int, float] = {}
        slack = 0.0
        for k, c in self.terms.items():
            e = (k >> shift) & 0xF
            if e and value == -1.0 and (e & 1):
                c = -c
            nk = k & ~(0xF << shift)
            prev = out.get(nk)
            if prev is None:
                out[nk] = c
            else:
                v = prev + c
                if v == 0.0:
                    del out[nk]
                else:
                    out[nk] = v
                slack += abs(v) * _EPS
        m = PolynomialModel(self.vars, out, _add_up(self.error, _grown(slack)), self.max_degree)
        keep = [i for i in range(self.arity) if i != position]
        return m.reindex(keep)

    def affine_substitute(self, position: int, offset: float, scale: float) -> "PolynomialModel":
        """Substitute z_position := offset + scale * z_position."""
        shift = 4 * position
        out: dict[int, float] = {}
        slack = 0.0
        for k, c in self.terms.items():
            e = (k >> shift) & 0xF
            base = k & ~(0xF << shift)
            if e == 0:
                prev = out.get(k, 0.0)
                v = prev + c
                out[k] = v
                slack += abs(v) * _EPS
                continue
            for j in range(e + 1):
                coeff = c * math.comb(e, j) * (offset ** (e - j)) * (scale**j)
                if coeff == 0.0:
                    continue
                nk = base | (j << shift)
                prev = out.get(nk, 0.0)
                v = prev + coeff
                out[nk] = v
                slack += (abs(coeff) + abs(v)) * _EPS
        out = {k: c for k, c in out.items() if c != 0.0}
        return PolynomialModel(self.vars, out, _add_up(self.error, _grown(slack)), self.max_degree)

    def antiderivative(self, time_position: int) -> "PolynomialModel":
        """Integral from the interval start in the semantic time variable.

        The time variable has radius h/2; the result models
        t -> integral_{t_k}^{t} p(s) ds, and the error is multiplied by the
        full step length h.
        """
        info = self.vars[time_position]
        if info.role is not Role.TIME:
            raise ValueError("antiderivative requires the time variable")
        r = info.radius
        shift = 4 * time_position
        cap = self.max_degree
        out: dict[int, float] = {}
        slack = 0.0
        dropped = 0.0

        def acc(key: int, value: float):
            nonlocal slack
            if value == 0.0:
                return
            prev = out.get(key)
            if prev is None:
                out[key] = value
            else:
                v = prev + value
                if v == 0.0:
                    del out[key]
                else:
                    out[key] = v
                slack += abs(v) * _EPS

        for k, c in self.terms.items():
            e = (k >> shift) & 0xF
            coeff = c * r / (e + 1)
            slack += abs(coeff) * _EPS * 2
            # antiderivative term
            if _degree_of(k) + 1 > cap:
                dropped += abs(coeff)
            else:
                acc(k + (1 << shift), coeff)
            # subtract the value at tau = -1 (integral starts at t_k)
            acc(k & ~(0xF << shift), coeff if e % 2 == 0 else -coeff)

        h = 2.0 * r
        e_out = _mul_up(self.error, h)
        e_out = _add_up(e_out, _grown(dropped))
        e_out = _add_up(e_out, _grown(slack))
        return PolynomialModel(self.vars, out, e_out, self.max_degree)

    # ------------------------------------------------------------------ queries
    def eval_point(self, z: Sequence[float]) -> float:
        """Value of the polynomial part at z (no error band)."""
        total = 0.0
        for k, c in self.terms.items():
            v = c
            kk = k
            pos = 0
            while kk:
                e = kk & 0xF
                if e:
                    v *= z[pos] ** e
                kk >>= 4
                pos += 1
            total += v
        return total

    def var_mass(self, position: int) -> float:
        """Total coefficient magnitude of terms involving the variable."""
        mask = 0xF << (4 * position)
        return sum(abs(c) for k, c in self.terms.items() if k & mask)

    def depends_on(self, position: int) -> bool:
        mask = 0xF << (4 * position)
        return any(k & mask for k in self.terms)

    def __repr__(self) -> str:
        return f"PolynomialModel(arity={self.arity}, terms={len(self.terms)}, error={self.error:.3g})"


@dataclass(frozen=True)
class VectorModel:
    components: tuple[PolynomialModel, ...]

    def __post_init__(self):
        if not self.components:
            raise ValueError("vector model needs at least one component")
        v0 = self.components[0].vars
        for c in self.components[1:]:
            if c.vars != v0:
                raise ArityMismatchError("vector model components disagree on variables")

    @property
    def vars(self) -> tuple[VarInfo, ...]:
        return self.components[0].vars

    @property
    def n(self) -> int:
        return len(self.components)

    def __iter__(self):
        return iter(self.components)

    def __getitem__(self, i: int) -> PolynomialModel:
        return self.components[i]

    def box(self, method: str = "term-sum") -> Box:
        return Box(tuple(c.range(method) for c in self.components))

    def map(self, fn: Callable[[PolynomialModel], PolynomialModel]) -> "VectorModel":
        return VectorModel(tuple(fn(c) for c in self.components))

    def eval_point(self, z: Sequence[float]) -> tuple[float, ...]:
        return tuple(c.eval_point(z) for c in self.components)


# ---------------------------------------------------------------------- composition


def _factorial(k: int) -> float:
    return float(math.factorial(k))


def _series_coefficients(kind: str, c: float, rng: Interval, d: int) -> tuple[list[Interval], float]:
    """Taylor coefficients of the elementary function about c as intervals,
    plus an upper bound for the Lagrange remainder factor sup|f^(d+1)|/(d+1)!."""
    pt = Interval.point(c)
    if kind == "exp":
        base = iv_exp(pt)
        coeffs = [base / float(math.factorial(k)) for k in range(d + 1)]
        rem = iv_exp(rng).mag / _factorial(d + 1) * _SLACK_INFLATE
        return coeffs, rem
    if kind in ("sin", "cos"):
        s, co = iv_sin(pt), iv_cos(pt)
        cycle = [s, co, -s, -co] if kind == "sin" else [co, -s, -co, s]
        coeffs = [cycle[k % 4] / float(math.factorial(k)) for k in range(d + 1)]
        return coeffs, 1.0 / _factorial(d + 1) * _SLACK_INFLATE
    if kind == "recip":
        if rng.lo <= 0.0 <= rng.hi:
            raise IntervalDomainError("reciprocal of a model whose range contains zero")
        coeffs = []
        for k in range(d + 1):
            denom = pt ** (k + 1)
            val = Interval.point(1.0) / denom
            coeffs.append(val if k % 2 == 0 else -val)
        mig = rng.mig
        rem = (1.0 / mig) ** (d + 2) * _SLACK_INFLATE
        return coeffs, rem
    raise ValueError(kind)


def _compose_elementary(kind: str, inner: PolynomialModel) -> PolynomialModel:
    rng = inner.range()
    if not rng.is_finite:
        raise IntervalDomainError(f"{kind} composition requires a finite range")
    c = rng.mid
    d = inner.max_degree
    coeffs, rem_factor = _series_coefficients(kind, c, rng, d)
    delta = inner.add_scalar(-c)
    drng = rng - Interval.point(c)
    rho = drng.mag
    rho = _add_up(rho, rho * 4 * _EPS)

    result = PolynomialModel.constant(0.0, inner.vars, d)
    power = PolynomialModel.constant(1.0, inner.vars, d)
    extra = 0.0
    for k in range(d + 1):
        a = coeffs[k]
        mid = a.mid
        half = a.rad
        result = result + power.scale(mid)
        if half:
            extra = _add_up(extra, _mul_up(half, power.range().mag))
        if k < d:
            power = power * delta
    # Lagrange remainder over the full range
    rem = _mul_up(rem_factor, _pow_up_pos(rho, d + 1))
    result = result.add_error(_add_up(extra, rem))
    return result


def _pow_up_pos(x: float, n: int) -> float:
    r = 1.0
    for _ in range(n):
        r = _mul_up(r, x)
    return r


def _pow_model(base: PolynomialModel, n: int) -> PolynomialModel:
    if n == 0:
        return PolynomialModel.constant(1.0, base.vars, base.max_degree)
    if n < 0:
        return _pow_model(_compose_elementary("recip", base), -n)
    result = None
    power = base
    while n:
        if n & 1:
            result = power if result is None else result * power
        n >>= 1
        if n:
            power = power * power
    return result


def compose_expr(e: Expr, args: VectorModel | Sequence[PolynomialModel]) -> PolynomialModel:
    """Evaluate an expression over polynomial-model arguments, producing an
    enclosure of the composition."""
    models = tuple(args) if not isinstance(args, VectorModel) else args.components
    if not models:
        raise ValueError("composition needs at least one argument model")
    vars_ = models[0].vars
    cap = models[0].max_degree

    def rec(node: Expr) -> PolynomialModel:
        if isinstance(node, symexpr.Var):
            if node.index > len(models):
                raise IndexError(f"expression references x{node.index} but only {len(models)} args given")
            return models[node.index - 1]
        if isinstance(node, symexpr.Const):
            return PolynomialModel.constant(node.value, vars_, cap)
        if isinstance(node, symexpr.Add):
            return rec(node.a) + rec(node.b)
        if isinstance(node, symexpr.Sub):
            return rec(node.a) - rec(node.b)
        if isinstance(node, symexpr.Neg):
            return -rec(node.a)
        if isinstance(node, symexpr.Mul):
            return rec(node.a) * rec(node.b)
        if isinstance(node, symexpr.Div):
            denom = rec(node.b)
            if isinstance(node.b, symexpr.Const):
                if node.b.value == 0.0:
                    raise ZeroDivisionError("division by zero constant")
                return rec(node.a).scale(1.0 / node.b.value).add_error(
                    _grown(abs(1.0 / node.b.value) * _EPS)
                )
            return rec(node.a) * _compose_elementary("recip", denom)
        if isinstance(node, symexpr.Pow):
            return _pow_model(rec(node.base), node.exponent)
        if isinstance(node, symexpr.Sin):
            return _compose_elementary("sin", rec(node.a))
        if isinstance(node, symexpr.Cos):
            return _compose_elementary("cos", rec(node.a))
        if isinstance(node, symexpr.Exp):
            return _compose_elementary("exp", rec(node.a))
        raise TypeError(f"cannot compose {type(node).__name__}")

    return rec(e)
