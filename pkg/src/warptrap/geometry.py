"""Warp profile of the surface and the per-mode radial potentials.

The metric is dx^2 + a(x)^2 dsigma^2 on the line times the unit sphere,
with warp a(x) = (x^{2m} + 1)^{1/(2m)}.  Separating in spherical
harmonics reduces the Laplacian (conjugated by a) to the family of 1-D
Schroedinger operators -d^2/dx^2 + V_l with

    V_l(x) = l(l+1) * a(x)^{-2} + a''(x)/a(x).

All derivative formulas below are closed forms obtained by hand from the
warp; tests validate them against central differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "AngularMode",
    "CallableWarpGeometry",
    "WarpGeometry",
    "WarpParams",
    "mode_table",
    "monotone_threshold",
    "potential_is_monotone",
    "warp_eval",
]


@dataclass(frozen=True)
class WarpParams:
    """Warp exponent m >= 1 and boundary location x0 != 0."""

    m: int
    x0: float

    def __post_init__(self):
        if not isinstance(self.m, (int, np.integer)) or self.m < 1:
            raise ValueError(f"warp exponent m must be a positive integer, got {self.m!r}")
        if self.x0 == 0:
            raise ValueError("boundary location x0 = 0 is degenerate (wall on the trapped set)")


@dataclass(frozen=True)
class AngularMode:
    """One spherical-harmonic degree: sigma_sq = l(l+1), multiplicity 2l+1."""

    l: int
    sigma_sq: float
    multiplicity: int

    @property
    def sigma(self) -> float:
        return math.sqrt(self.sigma_sq)


def mode_table(l_max: int) -> list[AngularMode]:
    """Angular modes l = 0..l_max in increasing order."""
    if l_max < 0:
        raise ValueError("l_max must be nonnegative")
    return [AngularMode(l, float(l * (l + 1)), 2 * l + 1) for l in range(l_max + 1)]


class WarpGeometry:
    """Evaluators for a(x), its first two derivatives, and V_l(x).

    Evaluation is vectorized over numpy arrays.  Powers of x are routed
    through log1p so that x^{2m} underflow near x = 0 (large m) degrades
    gracefully to a = 1.
    """

    def __init__(self, params: WarpParams):
        self.params = params

    @classmethod
    def of(cls, m: int, x0: float) -> "WarpGeometry":
        return cls(WarpParams(m, x0))

    # -- warp and derivatives ------------------------------------------------

    def a(self, x):
        m = self.params.m
        t = np.abs(np.asarray(x, dtype=float)) ** (2 * m)
        return np.exp(np.log1p(t) / (2 * m))

    def da(self, x):
        # a' = (x/a)^{2m-1}; |x|/a < 1 keeps this stable everywhere
        m = self.params.m
        x = np.asarray(x, dtype=float)
        return np.sign(x) * (np.abs(x) / self.a(x)) ** (2 * m - 1)

    def d2a(self, x):
        # a'' = (2m-1) x^{2m-2} a^{1-4m}, using a^{2m} - x^{2m} = 1
        m = self.params.m
        x = np.asarray(x, dtype=float)
        return (2 * m - 1) * np.abs(x) ** (2 * m - 2) * self.a(x) ** (1 - 4 * m)

    def a_sq(self, x):
        m = self.params.m
        t = np.abs(np.asarray(x, dtype=float)) ** (2 * m)
        return np.exp(np.log1p(t) / m)

    def inv_a_sq(self, x):
        m = self.params.m
        t = np.abs(np.asarray(x, dtype=float)) ** (2 * m)
        return np.exp(-np.log1p(t) / m)

    # -- potentials ----------------------------------------------------------

    def v0(self, x):
        """Zero-mode potential a''(x)/a(x) = (2m-1) x^{2m-2} (1+x^{2m})^{-2}."""
        m = self.params.m
        x = np.asarray(x, dtype=float)
        t = np.abs(x) ** (2 * m)
        return (2 * m - 1) * np.abs(x) ** (2 * m - 2) * np.exp(-2.0 * np.log1p(t))

    def potential(self, l: int, x):
        """V_l(x) = l(l+1) a^{-2} + a''/a."""
        if l < 0:
            raise ValueError("angular degree l must be nonnegative")
        return l * (l + 1) * self.inv_a_sq(x) + self.v0(x)

    def dpotential(self, l: int, x):
        """Closed-form dV_l/dx."""
        m = self.params.m
        x = np.asarray(x, dtype=float)
        t = np.abs(x) ** (2 * m)
        odd = np.sign(x) * np.abs(x) ** (2 * m - 1)
        dcent = -2.0 * l * (l + 1) * odd * np.exp(-(1.0 + 1.0 / m) * np.log1p(t))
        if m == 1:
            dv0 = -4.0 * x * np.exp(-3.0 * np.log1p(t))
        else:
            odd3 = np.sign(x) * np.abs(x) ** (2 * m - 3)
            odd4 = np.sign(x) * np.abs(x) ** (4 * m - 3)
            dv0 = (2 * m - 1) * np.exp(-3.0 * np.log1p(t)) * (
                (2 * m - 2) * odd3 * (1.0 + t) - 4 * m * odd4
            )
        return dcent + dv0

    def __repr__(self):
        return f"WarpGeometry(m={self.params.m}, x0={self.params.x0})"


class CallableWarpGeometry:
    """Warp defined by user callables (a, a', a'').

    Internal seam for manufactured-solution tests only; the experiments all
    use the closed-form family above.
    """

    def __init__(self, a, da, d2a, x0: float, m: int | None = None):
        self._a, self._da, self._d2a = a, da, d2a
        self.params = _CallableParams(m, x0)

    def a(self, x):
        return np.asarray(self._a(np.asarray(x, dtype=float)), dtype=float)

    def da(self, x):
        return np.asarray(self._da(np.asarray(x, dtype=float)), dtype=float)

    def d2a(self, x):
        return np.asarray(self._d2a(np.asarray(x, dtype=float)), dtype=float)

    def a_sq(self, x):
        return self.a(x) ** 2

    def inv_a_sq(self, x):
        return self.a(x) ** (-2.0)

    def v0(self, x):
        return self.d2a(x) / self.a(x)

    def potential(self, l: int, x):
        return l * (l + 1) * self.inv_a_sq(x) + self.v0(x)


@dataclass(frozen=True)
class _CallableParams:
    m: int | None
    x0: float


def warp_eval(params: WarpParams, x, order: int = 0):
    """a(x), a'(x), or a''(x) for the given warp parameters."""
    if order not in (0, 1, 2):
        raise ValueError("order must be 0, 1 or 2")
    geom = WarpGeometry(params)
    return (geom.a, geom.da, geom.d2a)[order](x)


def potential_is_monotone(geom: WarpGeometry, l: int, n_samples: int = 257) -> bool:
    """Whether V_l is strictly increasing on [x0, x0/2] (x0 < 0), sampled."""
    x0 = geom.params.x0
    if x0 >= 0:
        raise ValueError("monotonicity window [x0, x0/2] requires x0 < 0")
    xs = np.linspace(x0, x0 / 2, n_samples)
    return bool(np.all(np.diff(geom.potential(l, xs)) > 0))


def monotone_threshold(geom: WarpGeometry, l_max: int = 200, n_samples: int = 257) -> int:
    """Smallest L such that V_l is strictly increasing on [x0, x0/2] and
    V_l(x0/2) < V_l(0) for every l in [L, l_max].

    Raises if no such L exists within l_max.
    """
    x0 = geom.params.x0
    ok = np.zeros(l_max + 1, dtype=bool)
    for l in range(l_max + 1):
        ok[l] = potential_is_monotone(geom, l, n_samples) and (
            geom.potential(l, x0 / 2) < geom.potential(l, 0.0)
        )
    if not ok[l_max]:
        raise ValueError(f"V_l hypotheses still failing at l_max={l_max}")
    bad = np.nonzero(~ok)[0]
    return int(bad[-1] + 1) if bad.size else 0
