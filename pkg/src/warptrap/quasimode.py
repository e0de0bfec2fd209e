"""Confined near-eigenfunctions on the trapped side of the neck.

For a wall at x0 < 0 the per-mode potential V_l has its minimum at the
wall and climbs toward the neck, so the lowest Dirichlet eigenfunction
psi on (x0, 0) hugs the wall and decays through the classically
forbidden region.  Multiplying by a smooth cutoff chi that is 1 near the
wall and 0 near the neck, and normalizing,

    u = chi * psi / |chi psi|,

gives a compactly supported state whose eigen-equation residual is as
small as psi is in the cutoff's transition zone, i.e. exponentially
small in the angular frequency sigma.  This module builds these states,
brackets their frequencies, and fits the exponential decay rates of the
residual and of the tail mass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import WarpGeometry, potential_is_monotone
from .smoothstep import smooth_step
from .spectral import (
    EigenPair,
    Grid,
    build_operator,
    eigen_lowest,
    quadrature_hk,
    quadrature_l2,
)

__all__ = [
    "BracketResult",
    "CutoffProfile",
    "DecayFit",
    "FitError",
    "Quasimode",
    "bracket_check",
    "build_quasimode",
    "default_cutoff",
    "fit_exponential_rate",
    "interval_grid",
    "mode_operator",
    "quasimode_csv_rows",
    "QUASIMODE_CSV_COLUMNS",
]

# grid rule: at least this many nodes per 1/sigma length unit (h*sigma <= 0.05)
EIGEN_H_PER_SIGMA = 0.05


@dataclass(frozen=True)
class CutoffProfile:
    """Smooth cutoff: 1 on [x0, plateau_end], 0 on [support_end, 0]."""

    x0: float
    plateau_end: float
    support_end: float

    def __post_init__(self):
        if not (self.x0 < self.plateau_end < self.support_end < 0):
            raise ValueError("cutoff requires x0 < plateau_end < support_end < 0")
        if not self.plateau_end > self.x0 / 2:
            raise ValueError("cutoff plateau must cover [x0, x0/2]")

    @property
    def width(self) -> float:
        return self.support_end - self.plateau_end

    def chi(self, x, order: int = 0):
        """Cutoff value or derivative; monotone nonincreasing transition."""
        s = (self.support_end - np.asarray(x, dtype=float)) / self.width
        val = smooth_step(s, order)
        return val * (-1.0 / self.width) ** order if order else val

    def __call__(self, x):
        return self.chi(x)


def default_cutoff(x0: float) -> CutoffProfile:
    """Plateau through 0.4*x0 and support ending at 0.1*x0.

    The wide transition keeps the cutoff derivatives moderate, so the
    eigen-residual is dominated by the eigenfunction's own tail rather
    than by cutoff sharpness.
    """
    if x0 >= 0:
        raise ValueError("cutoff construction requires the trapped side, x0 < 0")
    return CutoffProfile(x0, 0.4 * x0, 0.1 * x0)


def interval_grid(geom: WarpGeometry, l: int, n: int | None = None) -> Grid:
    """Grid on (x0, 0) resolving the mode-l eigenfunction."""
    sigma = math.sqrt(l * (l + 1))
    if n is not None:
        return Grid.interval(geom.params.x0, n)
    return Grid.for_sigma(geom.params.x0, 0.0, sigma, EIGEN_H_PER_SIGMA)


def mode_operator(geom: WarpGeometry, l: int, grid: Grid):
    return build_operator(grid, lambda x: geom.potential(l, x),
                          potential_id=f"V_l(m={geom.params.m}, x0={geom.params.x0}, l={l})")


@dataclass(frozen=True)
class BracketResult:
    """Frequency bracket check for one angular degree.

    ``below_threshold`` is True when the hypotheses that make the bracket
    argument run (potential increasing on [x0, x0/2] and the square-well
    bound fitting under V(x0/2)) fail at this l; the computed numbers are
    still reported.
    """

    l: int
    V_at_x0: float
    V_at_half: float
    V_at_threequarters_bound: float
    tau_sq: float
    in_bracket: bool
    monotone: bool
    chain_ok: bool
    below_threshold: bool

    @property
    def square_well_ok(self) -> bool:
        return self.tau_sq <= self.V_at_threequarters_bound


def bracket_check(geom: WarpGeometry, l: int, n: int | None = None) -> BracketResult:
    """Locate the lowest Dirichlet eigenvalue on (x0, 0) and test the
    bracket [V(x0), V(x0/2)] plus the square-well upper bound
    V(3 x0/4) + 16 pi^2 / x0^2."""
    x0 = geom.params.x0
    if x0 >= 0:
        raise ValueError("bracket check requires the trapped side, x0 < 0")
    grid = interval_grid(geom, l, n)
    pair = eigen_lowest(mode_operator(geom, l, grid), 1)[0]
    tau_sq = pair.value
    v_lo = float(geom.potential(l, x0))
    v_hi = float(geom.potential(l, x0 / 2))
    swb = float(geom.potential(l, 3 * x0 / 4)) + 16.0 * math.pi**2 / x0**2
    monotone = potential_is_monotone(geom, l)
    chain_ok = swb <= v_hi
    return BracketResult(
        l=l,
        V_at_x0=v_lo,
        V_at_half=v_hi,
        V_at_threequarters_bound=swb,
        tau_sq=float(tau_sq),
        in_bracket=bool(v_lo <= tau_sq <= v_hi),
        monotone=monotone,
        chain_ok=chain_ok,
        below_threshold=not (monotone and chain_ok),
    )


@dataclass
class Quasimode:
    """Cutoff-normalized near-eigenfunction and its certificates."""

    l: int
    sigma: float
    tau_sq: float
    psi: EigenPair
    u: np.ndarray
    grid: Grid
    cutoff: CutoffProfile
    residual_hk: dict[int, float]
    agmon_ratio: float
    chi_psi_norm: float
    bracket: BracketResult
    u_extended: np.ndarray | None = None
    grid_extended: Grid | None = None

    @property
    def tau(self) -> float:
        return math.sqrt(self.tau_sq)

    def extend_to(self, grid_ext: Grid) -> np.ndarray:
        """Zero-extension of u onto an evolution grid sharing the spacing."""
        if abs(grid_ext.h - self.grid.h) > 1e-12 * self.grid.h:
            raise ValueError("extension grid must share the interval grid spacing")
        if abs(grid_ext.x_left - self.grid.x_left) > 1e-12:
            raise ValueError("extension grid must share the left endpoint")
        n = self.grid.n_interior
        out = np.zeros(grid_ext.n_interior)
        out[:n] = self.u
        self.u_extended = out
        self.grid_extended = grid_ext
        return out


def build_quasimode(
    geom: WarpGeometry,
    l: int,
    cutoff: CutoffProfile | None = None,
    grid_interval: Grid | None = None,
    grid_extended: Grid | None = None,
    k_max: int = 2,
    require_bracket: bool = True,
) -> Quasimode:
    """Construct the mode-l quasimode on (x0, 0).

    Residual norms |(-d^2/dx^2 + V_l - tau^2) u| in H^k, k = 0..k_max, are
    computed on the interval grid; the tail ratio measures the
    eigenfunction mass where the cutoff is below 1.
    """
    if cutoff is None:
        cutoff = default_cutoff(geom.params.x0)
    grid = grid_interval if grid_interval is not None else interval_grid(geom, l)
    bracket = bracket_check(geom, l, n=grid.n_interior)
    if require_bracket and not bracket.in_bracket:
        raise ValueError(
            f"frequency bracket fails at l={l} for m={geom.params.m}, "
            f"x0={geom.params.x0}; pass require_bracket=False to build anyway"
        )
    op = mode_operator(geom, l, grid)
    pair = eigen_lowest(op, 1)[0]
    psi = pair.vector
    x = grid.nodes()
    chi = cutoff.chi(x)
    u_raw = chi * psi
    nrm = quadrature_l2(grid, u_raw)
    u = u_raw / nrm
    resid_vec = op.apply(u) - pair.value * u
    residual_hk = {k: quadrature_hk(grid, resid_vec, k) for k in range(k_max + 1)}
    tail_mask = x > cutoff.plateau_end
    agmon_ratio = quadrature_l2(grid, psi * tail_mask) / quadrature_l2(grid, psi)
    qm = Quasimode(
        l=l,
        sigma=math.sqrt(l * (l + 1)),
        tau_sq=float(pair.value),
        psi=pair,
        u=u,
        grid=grid,
        cutoff=cutoff,
        residual_hk=residual_hk,
        agmon_ratio=float(agmon_ratio),
        chi_psi_norm=float(nrm),
        bracket=bracket,
    )
    if grid_extended is not None:
        qm.extend_to(grid_extended)
    return qm


class FitError(ValueError):
    """Raised when a decay fit is impossible or comes out non-decaying."""


@dataclass(frozen=True)
class DecayFit:
    """Least-squares fit of log(quantity) against sigma (or tau)."""

    quantity: str
    abscissa: str
    samples: list[tuple[float, float]]
    slope: float
    intercept: float
    r_squared: float
    n_excluded: int = 0

    def predict(self, s: float) -> float:
        return math.exp(self.intercept + self.slope * s)


FLOOR = 1e-14

_QUANTITY_GETTERS = {
    "residual_h0": lambda q: q.residual_hk[0],
    "residual_h1": lambda q: q.residual_hk[1],
    "residual_h2": lambda q: q.residual_hk[2],
    "agmon": lambda q: q.agmon_ratio,
}


def fit_exponential_rate(
    quasimodes: list[Quasimode],
    quantity: str = "residual_h0",
    abscissa: str = "sigma",
    require_negative: bool = True,
) -> DecayFit:
    """Fit log(quantity) = intercept + slope * abscissa over the family.

    Values at or below the floating-point floor are excluded (reported via
    ``n_excluded``); an all-floored family is an error, as is a
    nonnegative slope unless ``require_negative`` is disabled.
    """
    if quantity not in _QUANTITY_GETTERS:
        raise ValueError(f"unknown quantity {quantity!r}")
    if abscissa not in ("sigma", "tau"):
        raise ValueError("abscissa must be 'sigma' or 'tau'")
    pts = []
    n_excluded = 0
    for qm in quasimodes:
        q = _QUANTITY_GETTERS[quantity](qm)
        s = qm.sigma if abscissa == "sigma" else qm.tau
        if q < FLOOR:
            n_excluded += 1
            continue
        pts.append((s, math.log(q)))
    if len({round(s, 12) for s, _ in pts}) < 5:
        if n_excluded and not pts:
            raise FitError(f"all {quantity} values sit at the floating-point floor")
        raise FitError("need at least 5 quasimodes with distinct frequencies above the floor")
    s = np.array([p[0] for p in pts])
    y = np.array([p[1] for p in pts])
    slope, intercept = np.polyfit(s, y, 1)
    resid = y - (intercept + slope * s)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    if require_negative and slope >= 0:
        raise FitError(f"{quantity} fit slope {slope:.3e} is not negative")
    return DecayFit(quantity, abscissa, pts, float(slope), float(intercept), r2, n_excluded)


QUASIMODE_CSV_COLUMNS = [
    "l",
    "sigma",
    "tau_sq",
    "bracket_lo",
    "bracket_hi",
    "residual_h0",
    "residual_h1",
    "residual_h2",
    "agmon_ratio",
]


def quasimode_csv_rows(quasimodes: list[Quasimode]) -> list[list]:
    rows = []
    for qm in quasimodes:
        rows.append([
            qm.l,
            qm.sigma,
            qm.tau_sq,
            qm.bracket.V_at_x0,
            qm.bracket.V_at_half,
            qm.residual_hk[0],
            qm.residual_hk[1],
            qm.residual_hk[2],
            qm.agmon_ratio,
        ])
    return rows
