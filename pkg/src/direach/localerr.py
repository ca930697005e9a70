"""Uniform single-step analytical error bounds.

Each function bounds ||x(t_{k+1}) - y(t_{k+1})|| for the surrogate system
whose inputs match the stated moments, in terms of the constants of
StepErrorBounds.  Everything is evaluated in point-interval arithmetic and
returned as an upper endpoint, so replacing exact arithmetic by this
implementation can only increase the bound.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .interval import Interval, iv_exp
from .inputs import InputScheme, SchemeKind
from .symexpr import InputAffineSystem, StepErrorBounds

__all__ = [
    "ErrorOrder",
    "InapplicableError",
    "err_o1",
    "err_o2_constant",
    "err_o2_constant_c2",
    "err_o2_affine",
    "err_o3_additive",
    "err_o3_single",
    "select_error",
    "param_requirements",
    "growth_factor",
]


class ErrorOrder(str, Enum):
    O1_ZERO = "O1"
    O2_CONSTANT = "O2-constant"
    O2_CONSTANT_C2 = "O2-constant-C2"
    O2_AFFINE = "O2-affine"
    O3_ADDITIVE = "O3-additive"
    O3_SINGLE = "O3-single-input"


class InapplicableError(ValueError):
    """The formula's hypotheses fail for these bounds / this step size."""


def _pt(x: float) -> Interval:
    return Interval.point(x)


def growth_factor(u: float) -> Interval:
    """Enclosure of (e^u - 1)/u, continued by 1 at u = 0; decreasing below 1
    for negative u."""
    if abs(u) < 1e-8:
        # |phi(u) - (1 + u/2)| <= u^2/6 < 1.7e-17 here
        return (_pt(1.0) + _pt(u) * 0.5).inflate(1e-15)
    return (iv_exp(_pt(u)) - 1.0) / u


def err_o1(b: StepErrorBounds, h: float) -> float:
    """First-order bound for the zero surrogate (w = 0)."""
    if h <= 0:
        raise InapplicableError("step size must be positive")
    return _first_order(b, h, 0.0)


def _first_order(b: StepErrorBounds, h: float, w_factor: float) -> float:
    """min(h*(1+c)K'Phi(Lam h), h*(2K + (1+c)K')) where c bounds sup|w|/V.

    c = 0 is the zero-surrogate theorem; for nonzero surrogates both the
    true and the surrogate solution are compared against the undisturbed
    flow, which inflates the disturbance term by the surrogate's range.
    """
    kp_eff = _pt(b.Kp) * (1.0 + w_factor)
    e1 = (_pt(h) * kp_eff * growth_factor(b.Lam * h)).hi
    e2 = (_pt(h) * (_pt(b.K) * 2.0 + kp_eff)).hi
    return min(e1, e2)


def err_o2_constant(b: StepErrorBounds, h: float) -> float:
    """Second-order bound for the step-mean constant surrogate."""
    if h <= 0:
        raise InapplicableError("step size must be positive")
    phi = growth_factor(b.Lam * h)
    inner = (_pt(b.K) + b.Kp) * _pt(b.Lp) / 3.0 + _pt(b.Kp) * 2.0 * (_pt(b.L) + b.Lp) * phi
    return (_pt(h) ** 2 * inner).hi


def err_o2_constant_c2(b: StepErrorBounds, h: float) -> float:
    """Refined constant-surrogate bound requiring a twice-differentiable
    drift and hL < 2."""
    if h <= 0:
        raise InapplicableError("step size must be positive")
    pre = _pt(1.0) - _pt(h) * b.L * 0.5
    if pre.lo <= 0.0:
        raise InapplicableError(f"needs h*L < 2 (h*L = {h * b.L:g})")
    phi = growth_factor(b.Lam * h)
    hh = _pt(h)
    kp, l, lp, hs, k = _pt(b.Kp), _pt(b.L), _pt(b.Lp), _pt(b.H), _pt(b.K)
    rhs = (hh**2 / 3.0) * (kp * 3.0 * lp * phi + lp * (k + kp))
    rhs = rhs + (hh**3 / 4.0) * kp * (l * lp + l**2 + hs * (k + kp)) * phi
    rhs = rhs + (hh**3 * (11.0 / 24.0)) * (hs * kp + l * lp) * (k + kp)
    return (rhs / pre).hi


def err_o2_affine(b: StepErrorBounds, h: float) -> float:
    """Second-order bound for affine surrogates (general input fields)."""
    if h <= 0:
        raise InapplicableError("step size must be positive")
    pre = _pt(1.0) - _pt(h) * b.L * 0.5 - _pt(h) * b.Lp
    if pre.lo <= 0.0:
        raise InapplicableError(f"needs h*(L/2 + L') < 1 (got {h * (b.L / 2 + b.Lp):g})")
    phi = growth_factor(b.Lam * h)
    hh = _pt(h)
    k, kp, l, lp, hs, hp = _pt(b.K), _pt(b.Kp), _pt(b.L), _pt(b.Lp), _pt(b.H), _pt(b.Hp)
    rhs = (hh**2 / 4.0) * lp * (k * 11.0 + kp * 34.5)
    rhs = rhs + (hh**3 * (7.0 / 8.0)) * kp * (
        (hp * 4.0 + hs) * (k + kp * 2.5) + l**2 + (l * 4.5 + lp * 5.0) * lp
    ) * phi
    rhs = rhs + (hh**3 * (7.0 / 48.0)) * (hs * kp + l * lp) * (k + kp)
    return (rhs / pre).hi


def err_o3_additive(b: StepErrorBounds, h: float) -> float:
    """Third-order bound for additive noise (constant input fields)."""
    if h <= 0:
        raise InapplicableError("step size must be positive")
    if any(v != 0.0 for v in b.Li) or any(v != 0.0 for v in b.Hi):
        raise InapplicableError("third-order additive bound needs constant input fields")
    pre = _pt(1.0) - _pt(h) * b.L * 0.5
    if pre.lo <= 0.0:
        raise InapplicableError(f"needs h*L < 2 (h*L = {h * b.L:g})")
    phi = growth_factor(b.Lam * h)
    hh = _pt(h)
    k, kp, l, hs = _pt(b.K), _pt(b.Kp), _pt(b.L), _pt(b.H)
    rhs = (hh**3 * (7.0 / 48.0)) * kp * hs * (k + kp)
    rhs = rhs + (hh**3 * (7.0 / 8.0)) * kp * (l**2 + hs * (k + kp * 2.5)) * phi
    return (rhs / pre).hi


def err_o3_single(b: StepErrorBounds, h: float, m: int = 1) -> float:
    """Third-order bound for a single (possibly state-dependent) input."""
    if m != 1:
        raise InapplicableError("single-input bound needs exactly one input")
    if h <= 0:
        raise InapplicableError("step size must be positive")
    pre = _pt(1.0) - _pt(h) * b.L * 0.5 - _pt(h) * b.Lp
    if pre.lo <= 0.0:
        raise InapplicableError(f"needs h*(L/2 + L') < 1 (got {h * (b.L / 2 + b.Lp):g})")
    phi = growth_factor(b.Lam * h)
    hh = _pt(h)
    k, kp, l, lp, hs, hp = _pt(b.K), _pt(b.Kp), _pt(b.L), _pt(b.Lp), _pt(b.H), _pt(b.Hp)
    rhs = (hh**3 * (7.0 / 8.0)) * kp * (
        (hs + hp * 10.0) * (k + kp * 2.5) + l**2 + l * lp * 12.5 + lp**2 * 25.0
    ) * phi
    tail = (hs * kp + l * lp) * 7.0 + (hp * k + l * lp) * 28.0 + (hp * kp + lp**2) * 29.0
    rhs = rhs + (hh**3 / 48.0) * (k + kp) * tail
    return (rhs / pre).hi


def param_requirements(m: int) -> tuple[int, int, int]:
    """(independent moment equations, minimal polynomial degree, available
    parameters) for a third-order surrogate with m inputs."""
    if m < 1:
        raise ValueError("input count must be >= 1")
    equations = m * (m + 3) // 2
    degree = math.ceil((m + 1) / 2)
    parameters = m * (degree + 1)
    return equations, degree, parameters


def _candidates(
    sys: InputAffineSystem, scheme: InputScheme, b: StepErrorBounds, h: float
) -> list[tuple[ErrorOrder, float]]:
    # higher-order formulas first, so min() resolves ties to the best order
    out: list[tuple[ErrorOrder, float]] = []
    kind = scheme.kind
    if kind is SchemeKind.ZERO:
        return [(ErrorOrder.O1_ZERO, err_o1(b, h))]
    if kind is SchemeKind.CONSTANT:
        try:
            out.append((ErrorOrder.O2_CONSTANT_C2, err_o2_constant_c2(b, h)))
        except InapplicableError:
            pass
        out.append((ErrorOrder.O2_CONSTANT, err_o2_constant(b, h)))
    else:
        # affine, affine-reduced and step surrogates all match both moments
        additive = not (any(v != 0.0 for v in b.Li) or any(v != 0.0 for v in b.Hi))
        if additive:
            try:
                out.append((ErrorOrder.O3_ADDITIVE, err_o3_additive(b, h)))
            except InapplicableError:
                pass
        elif sys.m == 1:
            try:
                out.append((ErrorOrder.O3_SINGLE, err_o3_single(b, h, m=1)))
            except InapplicableError:
                pass
        try:
            out.append((ErrorOrder.O2_AFFINE, err_o2_affine(b, h)))
        except InapplicableError:
            pass
    out.append((ErrorOrder.O1_ZERO, _first_order(b, h, scheme.w_sup_factor)))
    return out


def select_error(
    sys: InputAffineSystem,
    scheme: InputScheme,
    b: StepErrorBounds,
    h: float,
    forced=None,
) -> tuple[ErrorOrder, float]:
    """Pick the analytical per-step bound.

    forced = None picks the smallest applicable bound; an ErrorOrder forces
    that formula; 1/2/3 force the order (2 = the base theorem of the
    scheme's family, 3 = additive or single-input corollary).
    """
    if sys.m == 0 or b.Kp == 0.0:
        return (ErrorOrder.O1_ZERO, 0.0)
    if isinstance(forced, ErrorOrder):
        if forced is ErrorOrder.O1_ZERO:
            f = scheme.w_sup_factor if scheme.kind is not SchemeKind.ZERO else 0.0
            return (forced, _first_order(b, h, f))
        fn = {
            ErrorOrder.O2_CONSTANT: err_o2_constant,
            ErrorOrder.O2_CONSTANT_C2: err_o2_constant_c2,
            ErrorOrder.O2_AFFINE: err_o2_affine,
            ErrorOrder.O3_ADDITIVE: err_o3_additive,
        }.get(forced)
        if fn is not None:
            return (forced, fn(b, h))
        return (forced, err_o3_single(b, h, m=sys.m))
    if forced is not None:
        order = int(forced)
        if order == 1:
            f = scheme.w_sup_factor if scheme.kind is not SchemeKind.ZERO else 0.0
            return (ErrorOrder.O1_ZERO, _first_order(b, h, f))
        if order == 2:
            if scheme.kind is SchemeKind.CONSTANT:
                return (ErrorOrder.O2_CONSTANT, err_o2_constant(b, h))
            if scheme.kind is SchemeKind.ZERO:
                raise InapplicableError("second-order bounds need a moment-matching surrogate")
            return (ErrorOrder.O2_AFFINE, err_o2_affine(b, h))
        if order == 3:
            if scheme.kind in (SchemeKind.ZERO, SchemeKind.CONSTANT):
                raise InapplicableError("third-order bounds need a two-moment surrogate")
            additive = not (any(v != 0.0 for v in b.Li) or any(v != 0.0 for v in b.Hi))
            if additive:
                return (ErrorOrder.O3_ADDITIVE, err_o3_additive(b, h))
            if sys.m == 1:
                return (ErrorOrder.O3_SINGLE, err_o3_single(b, h, m=1))
            raise InapplicableError(
                "no third-order bound for multiple state-dependent inputs"
            )
        raise ValueError(f"unknown forced order {forced!r}")
    cands = _candidates(sys, scheme, b, h)
    return min(cands, key=lambda t: t[1])
