"""Rigorous reachable-set computation for input-affine differential inclusions."""

from .interval import Box, Interval, IntervalDomainError, IntervalMatrix, iv_cos, iv_exp, iv_sin, lognorm_inf, mat_inf_norm

__all__ = [
    "Box",
    "Interval",
    "IntervalDomainError",
    "IntervalMatrix",
    "iv_cos",
    "iv_exp",
    "iv_sin",
    "lognorm_inf",
    "mat_inf_norm",
]
