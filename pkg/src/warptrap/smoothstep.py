"""The standard C-infinity step glued from s -> exp(-1/s).

step(s) = phi(s) / (phi(s) + phi(1-s)) with phi(s) = exp(-1/s) for s > 0,
so step == 0 for s <= 0, == 1 for s >= 1, and is strictly increasing in
between with all derivatives vanishing at both ends.  Derivative
evaluators up to order 4 are generated symbolically once and applied only
on the open transition, which keeps numpy clear of the removable
singularities at the endpoints.
"""

from __future__ import annotations

import functools

import numpy as np
import sympy as sp

__all__ = ["SmoothStep", "smooth_step", "bump_expr", "step_expr"]

MAX_ORDER = 4


def step_expr(s: sp.Symbol) -> sp.Expr:
    """Sympy expression of the step on the open interval 0 < s < 1."""
    phi = sp.exp(-1 / s)
    psi = sp.exp(-1 / (1 - s))
    return phi / (phi + psi)


def bump_expr(s: sp.Symbol) -> sp.Expr:
    """Sympy expression of the standard bump exp(-1/(1-s^2)) on |s| < 1."""
    return sp.exp(-1 / (1 - s**2))


@functools.lru_cache(maxsize=None)
def _step_lambdas() -> tuple:
    s = sp.Symbol("s", positive=True)
    expr = step_expr(s)
    funcs = []
    for order in range(MAX_ORDER + 1):
        funcs.append(sp.lambdify(s, sp.diff(expr, s, order), modules="numpy"))
        # keep successive diffs cheap
    return tuple(funcs)


class SmoothStep:
    """Vectorized evaluator of the smooth step and its derivatives."""

    def __call__(self, s, order: int = 0):
        if not 0 <= order <= MAX_ORDER:
            raise ValueError(f"derivative order must be in [0, {MAX_ORDER}]")
        s = np.asarray(s, dtype=float)
        scalar = s.ndim == 0
        s = np.atleast_1d(s)
        out = np.zeros_like(s)
        if order == 0:
            out[s >= 1.0] = 1.0
        interior = (s > 0.0) & (s < 1.0)
        if np.any(interior):
            with np.errstate(over="ignore", under="ignore", divide="ignore"):
                out[interior] = _step_lambdas()[order](s[interior])
        return float(out[0]) if scalar else out


smooth_step = SmoothStep()
