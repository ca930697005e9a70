"""Nonvalidated reference integration for containment checking.

This is the oracle side: trajectories of the true inclusion under random
piecewise-constant disturbances, integrated by fixed-step RK4 on a grid much
finer than the reachability grid.  It deliberately shares nothing with the
validated pipeline except the symbolic system definition.
"""
from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import symexpr
from .interval import Box
from .symexpr import Expr, InputAffineSystem

__all__ = ["compile_field", "rk4_segment", "sample_trajectories"]


def _to_numpy(e: Expr) -> Callable[[np.ndarray], np.ndarray]:
    if isinstance(e, symexpr.Var):
        j = e.index - 1
        return lambda X: X[:, j]
    if isinstance(e, symexpr.Const):
        v = e.value
        return lambda X: np.full(X.shape[0], v)
    if isinstance(e, symexpr.Add):
        fa, fb = _to_numpy(e.a), _to_numpy(e.b)
        return lambda X: fa(X) + fb(X)
    if isinstance(e, symexpr.Sub):
        fa, fb = _to_numpy(e.a), _to_numpy(e.b)
        return lambda X: fa(X) - fb(X)
    if isinstance(e, symexpr.Neg):
        fa = _to_numpy(e.a)
        return lambda X: -fa(X)
    if isinstance(e, symexpr.Mul):
        fa, fb = _to_numpy(e.a), _to_numpy(e.b)
        return lambda X: fa(X) * fb(X)
    if isinstance(e, symexpr.Div):
        fa, fb = _to_numpy(e.a), _to_numpy(e.b)
        return lambda X: fa(X) / fb(X)
    if isinstance(e, symexpr.Pow):
        fa, n = _to_numpy(e.base), e.exponent
        return lambda X: fa(X) ** n
    if isinstance(e, symexpr.Sin):
        fa = _to_numpy(e.a)
        return lambda X: np.sin(fa(X))
    if isinstance(e, symexpr.Cos):
        fa = _to_numpy(e.a)
        return lambda X: np.cos(fa(X))
    if isinstance(e, symexpr.Exp):
        fa = _to_numpy(e.a)
        return lambda X: np.exp(fa(X))
    raise TypeError(type(e).__name__)


def compile_field(sys: InputAffineSystem):
    """Vectorized right-hand side: (states (N,n), inputs (N,m)) -> (N,n)."""
    f_fns = [_to_numpy(e) for e in sys.f]
    g_fns = [[_to_numpy(e) for e in gi] for gi in sys.g]

    def rhs(X: np.ndarray, V: np.ndarray) -> np.ndarray:
        cols = []
        for c in range(sys.n):
            acc = f_fns[c](X)
            for k in range(sys.m):
                acc = acc + g_fns[k][c](X) * V[:, k]
            cols.append(acc)
        return np.stack(cols, axis=1)

    return rhs


def rk4_segment(rhs, X: np.ndarray, V: np.ndarray, dt: float, substeps: int) -> np.ndarray:
    """Advance all trajectories by dt with inputs held constant."""
    h = dt / substeps
    for _ in range(substeps):
        k1 = rhs(X, V)
        k2 = rhs(X + 0.5 * h * k1, V)
        k3 = rhs(X + 0.5 * h * k2, V)
        k4 = rhs(X + h * k3, V)
        X = X + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return X


def sample_trajectories(
    sys: InputAffineSystem,
    initial: Box,
    total_time: float,
    steps: int,
    n_traj: int = 200,
    seed: int = 0,
    refine: int = 10,
    substeps: int = 4,
) -> tuple[np.ndarray, np.ndarray]:
    """Integrate n_traj random trajectories of the inclusion.

    Disturbances are piecewise constant on a grid `refine` times finer than
    the reachability grid, resampled uniformly in [-V, V].  Returns
    (times (steps+1,), states (n_traj, steps+1, n)).
    """
    rng = np.random.default_rng(seed)
    rhs = compile_field(sys)
    h = total_time / steps
    lows = np.array([c.lo for c in initial])
    highs = np.array([c.hi for c in initial])
    X = rng.uniform(lows, highs, size=(n_traj, sys.n))
    out = np.empty((n_traj, steps + 1, sys.n))
    out[:, 0, :] = X
    vmag = np.array(sys.V) if sys.m else np.zeros(0)
    for k in range(steps):
        for _ in range(refine):
            if sys.m:
                V = rng.uniform(-vmag, vmag, size=(n_traj, sys.m))
            else:
                V = np.zeros((n_traj, 0))
            X = rk4_segment(rhs, X, V, h / refine, substeps)
        out[:, k + 1, :] = X
    times = np.linspace(0.0, total_time, steps + 1)
    return times, out
