"""Uniform Dirichlet grids, tridiagonal operators, eigensolver, and norms.

The second derivative is the standard 3-point stencil, so every radial
operator -d^2/dx^2 + V is a symmetric tridiagonal matrix and the solver
can stay dependency-free (Sturm bisection plus inverse iteration, see
``_kernels``).  Quadrature is the midpoint-weight sum h * sum(v_i),
exact enough at second order for everything done here.

Norm conventions.  States are held per angular mode in the conjugated
radial variable w = a * u, where the volume element collapses:
|u|^2 dV integrated over the sphere equals |w|^2 dx on the line.  The
field energy uses the operator quadratic form h * <P w, w>, which the
spectral propagator conserves exactly; the gradient written out in the
u variable agrees with it to O(h^2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .geometry import WarpGeometry

__all__ = [
    "EigenPair",
    "EigensolverError",
    "Grid",
    "ShellWeights",
    "TridiagonalOperator",
    "build_operator",
    "dbk_norm",
    "eigen_full",
    "eigen_lowest",
    "energy_norms",
    "fd_derivative",
    "h_state_norm",
    "le_norms",
    "quadrature_hk",
    "quadrature_l2",
]


class EigensolverError(RuntimeError):
    """Raised when inverse iteration fails to converge after retries."""


@dataclass(frozen=True)
class Grid:
    """Uniform grid of interior nodes; the endpoints carry Dirichlet zeros."""

    x_left: float
    x_right: float
    n_interior: int

    def __post_init__(self):
        if not self.x_left < self.x_right:
            raise ValueError("grid requires x_left < x_right")
        if self.n_interior < 3:
            raise ValueError("grid requires at least 3 interior nodes")

    @property
    def h(self) -> float:
        return (self.x_right - self.x_left) / (self.n_interior + 1)

    def nodes(self) -> np.ndarray:
        return self.x_left + self.h * np.arange(1, self.n_interior + 1)

    @classmethod
    def interval(cls, x0: float, n_interior: int) -> "Grid":
        """Grid on (x0, 0) for the quasimode eigenvalue problems."""
        if x0 >= 0:
            raise ValueError("interval grid requires x0 < 0")
        return cls(x0, 0.0, n_interior)

    def extended(self, x_max: float) -> "Grid":
        """Evolution grid on (x_left, >= x_max) sharing this grid's spacing.

        The node set of ``self`` is a prefix of the extension's node set,
        so grid functions extend by zero without interpolation.
        """
        if x_max <= self.x_right:
            raise ValueError("extension must go beyond the current right endpoint")
        h = self.h
        n_total = int(math.ceil((x_max - self.x_left) / h - 1e-12))
        return Grid(self.x_left, self.x_left + n_total * h, n_total - 1)

    @classmethod
    def for_sigma(cls, x0: float, x_right: float, sigma: float,
                  h_per_sigma: float = 0.05, n_min: int = 200) -> "Grid":
        """Grid resolving oscillation at angular frequency sigma,
        h * sigma <= h_per_sigma."""
        span = x_right - x0
        n = max(int(math.ceil(span * max(sigma, 1.0) / h_per_sigma)) - 1, n_min)
        return cls(x0, x_right, n)


@dataclass(frozen=True)
class TridiagonalOperator:
    """Symmetric tridiagonal matrix for -d^2/dx^2 + V with Dirichlet ends."""

    grid: Grid
    diag: np.ndarray
    offdiag: float
    potential_id: str = ""

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    @property
    def diag_inf(self) -> float:
        return float(np.abs(self.diag).max())

    @property
    def norm_bound(self) -> float:
        return self.diag_inf + 2.0 * abs(self.offdiag)

    def offdiag_vector(self) -> np.ndarray:
        return np.full(self.n - 1, self.offdiag)

    def apply(self, v: np.ndarray) -> np.ndarray:
        """Matrix-vector product; v may be (n,) or (n, k), real or complex."""
        out = self.diag.reshape(-1, *([1] * (v.ndim - 1))) * v
        out[:-1] += self.offdiag * v[1:]
        out[1:] += self.offdiag * v[:-1]
        return out

    def quad_form(self, v: np.ndarray) -> float:
        """h-weighted quadratic form h * Re <v, P v>; the discrete Dirichlet
        energy of the mode."""
        return float(np.real(np.vdot(v, self.apply(v))) * self.grid.h)


def build_operator(grid: Grid, V, potential_id: str = "") -> TridiagonalOperator:
    """Assemble -d^2/dx^2 + V on the grid (V callable or node array)."""
    x = grid.nodes()
    vals = np.asarray(V(x) if callable(V) else V, dtype=float)
    if vals.shape == ():
        vals = np.full(grid.n_interior, float(vals))
    if vals.shape != (grid.n_interior,):
        raise ValueError("potential array does not match the grid")
    if not np.all(np.isfinite(vals)):
        raise ValueError("potential must be finite on all grid nodes")
    h = grid.h
    return TridiagonalOperator(grid, 2.0 / h**2 + vals, -1.0 / h**2, potential_id)


@dataclass(frozen=True)
class EigenPair:
    """Eigenvalue, quadrature-normalized eigenvector, and 2-norm residual."""

    value: float
    vector: np.ndarray
    residual: float


def _fix_signs(vecs: np.ndarray) -> np.ndarray:
    amax = np.abs(vecs).max(axis=0)
    first = (np.abs(vecs) > 1e-12 * amax).argmax(axis=0)
    signs = np.sign(vecs[first, np.arange(vecs.shape[1])])
    signs[signs == 0] = 1.0
    return vecs * signs


def _orthonormalize(vals: np.ndarray, vecs: np.ndarray, h: float, norm_scale: float,
                    target: float = 1e-12) -> None:
    """Gram-Schmidt within gap-defined clusters, in place.

    Inverse iteration leaves neighboring vectors non-orthogonal at the level
    eps * |T| / gap; sweeping pairs whose predicted defect exceeds ``target``
    restores a numerically orthonormal basis.
    """
    gap_tol = np.finfo(float).eps * norm_scale / target
    n = vals.shape[0]
    for k in range(1, n):
        jlo = k
        while jlo > 0 and vals[k] - vals[jlo - 1] < gap_tol:
            jlo -= 1
        if jlo == k:
            continue
        for j in range(jlo, k):
            c = h * np.dot(vecs[:, k], vecs[:, j])
            vecs[:, k] -= c * vecs[:, j]
        vecs[:, k] /= math.sqrt(h * np.dot(vecs[:, k], vecs[:, k]))


def _solve_pairs(op: TridiagonalOperator, indices) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d = op.diag
    e = op.offdiag_vector()
    h = op.grid.h
    vals = _kernels.bisect_eigenvalues(d, e, indices)
    vecs, ok, _ = _kernels.inverse_iteration(d, e, vals)
    if not np.all(ok):
        bad = np.nonzero(~ok)[0]
        raise EigensolverError(
            f"inverse iteration failed for eigenvalue indices {bad.tolist()} "
            f"of operator {op.potential_id!r} (n={op.n})"
        )
    vecs /= np.sqrt(h * np.sum(vecs * vecs, axis=0))
    _orthonormalize(vals, vecs, h, op.norm_bound)
    vecs = _fix_signs(vecs)
    r = op.apply(vecs) - vals[None, :] * vecs
    resid = np.linalg.norm(r, axis=0) / np.linalg.norm(vecs, axis=0)
    limit = 1e-10 * op.diag_inf
    if np.any(resid > limit):
        bad = np.nonzero(resid > limit)[0]
        raise EigensolverError(
            f"eigenpair residuals {resid[bad]} exceed {limit:.3e} "
            f"for indices {bad.tolist()} of {op.potential_id!r}"
        )
    return vals, vecs, resid


def eigen_lowest(op: TridiagonalOperator, k: int) -> list[EigenPair]:
    """The k smallest eigenpairs, ascending."""
    if not 1 <= k <= op.n:
        raise ValueError(f"k must lie in [1, {op.n}]")
    vals, vecs, resid = _solve_pairs(op, np.arange(k))
    return [EigenPair(float(vals[i]), vecs[:, i].copy(), float(resid[i])) for i in range(k)]


def eigen_full(op: TridiagonalOperator) -> tuple[np.ndarray, np.ndarray]:
    """Complete spectrum and h-orthonormal eigenvector matrix (columns)."""
    vals, vecs, _ = _solve_pairs(op, np.arange(op.n))
    return vals, vecs


# -- quadrature ---------------------------------------------------------------


def quadrature_l2(grid: Grid, v: np.ndarray) -> float:
    """Midpoint-weight L^2 norm sqrt(h * sum |v_i|^2)."""
    return math.sqrt(grid.h * float(np.sum(np.abs(v) ** 2)))


def fd_derivative(grid: Grid, v: np.ndarray, order: int = 1) -> np.ndarray:
    """Finite-difference derivative with Dirichlet ghost zeros at both ends."""
    if order not in (1, 2):
        raise ValueError("derivative order must be 1 or 2")
    h = grid.h
    vp = np.concatenate([[0.0 * v[0]], v, [0.0 * v[0]]])
    if order == 1:
        return (vp[2:] - vp[:-2]) / (2.0 * h)
    return (vp[2:] - 2.0 * vp[1:-1] + vp[:-2]) / h**2


def staggered_derivative(grid: Grid, v: np.ndarray) -> np.ndarray:
    """Cell-edge first difference (n+1 values) with Dirichlet ghost zeros."""
    vp = np.concatenate([[0.0 * v[0]], v, [0.0 * v[0]]])
    return np.diff(vp) / grid.h


def quadrature_hk(grid: Grid, v: np.ndarray, k: int) -> float:
    """Sobolev norm with finite-difference derivatives up to order k.

    The first-derivative term uses the staggered difference, whose square
    sum is exactly the Dirichlet form <-D2 v, v>, keeping the norm
    second-order accurate; the second-derivative term uses the 3-point
    stencil at the nodes.
    """
    if k not in (0, 1, 2):
        raise ValueError("k must be 0, 1 or 2")
    total = quadrature_l2(grid, v) ** 2
    if k >= 1:
        dv = staggered_derivative(grid, v)
        total += grid.h * float(np.sum(np.abs(dv) ** 2))
    if k >= 2:
        d2v = fd_derivative(grid, v, 2)
        total += quadrature_l2(grid, d2v) ** 2
    return math.sqrt(total)


# -- dyadic shells ------------------------------------------------------------


class ShellWeights:
    """Dyadic shell decomposition <x> ~ 2^j of a grid, with volume weights.

    <x> = sqrt(1 + x^2), so shell j holds the nodes with <x> in
    [2^j, 2^(j+1)); every node lands in exactly one shell.
    """

    def __init__(self, grid: Grid, geom: WarpGeometry):
        self.grid = grid
        self.geom = geom
        x = grid.nodes()
        bracket = np.sqrt(1.0 + x * x)
        self.shell_index = np.floor(np.log2(bracket)).astype(int)
        self.n_shells = int(self.shell_index.max()) + 1
        self.masks = [self.shell_index == j for j in range(self.n_shells)]
        self.vol_weights = geom.a_sq(x) * grid.h
        self.inv_bracket_sq = 1.0 / (bracket * bracket)

    def shell_sums(self, density: np.ndarray) -> np.ndarray:
        """h-weighted sum of a nodal density over each shell."""
        out = np.zeros(self.n_shells)
        np.add.at(out, self.shell_index, density * self.grid.h)
        return out


# -- field norms --------------------------------------------------------------
#
# These evaluators take any state object exposing
#   state.modes  -> iterable of mode objects with attributes
#       l, mult, operator (TridiagonalOperator), sigma_sq
#       w_grid(), wt_grid()  -> complex nodal arrays of w, dt w
#   state.grid, state.time
# (duck typing keeps this module independent of the evolution layer).


def _mode_gradient_sq(geom, grid, l, w):
    """(d_x u)^2 a^2 + sigma^2 a^{-2} u^2 written in w = a u, nodal values."""
    x = grid.nodes()
    ratio = geom.da(x) / geom.a(x)
    dxu_sq = np.abs(fd_derivative(grid, w, 1) - ratio * w) ** 2
    ang_sq = l * (l + 1) * geom.inv_a_sq(x) * np.abs(w) ** 2
    return dxu_sq + ang_sq


def energy_norms(state, geom: WarpGeometry, R: float) -> dict:
    """Total energy E, near-region energy E_R, and the data norm on the
    energy space.

    E uses the operator quadratic form (exactly conserved by the spectral
    propagator); E_R integrates the energy density over x <= R with the
    finite-difference gradient.
    """
    x0 = state.grid.x_left
    if R <= x0:
        raise ValueError(f"truncation radius R={R} must exceed the boundary x0={x0}")
    h = state.grid.h
    E = 0.0
    E_R = 0.0
    for mode in state.modes:
        w = mode.w_grid()
        wt = mode.wt_grid()
        kin = h * float(np.sum(np.abs(wt) ** 2))
        E += 0.5 * mode.mult * (kin + mode.operator.quad_form(w))
        mask = state.grid.nodes() <= R
        dens = np.abs(wt) ** 2 + _mode_gradient_sq(geom, state.grid, mode.l, w)
        E_R += 0.5 * mode.mult * h * float(np.sum(dens[mask]))
    return {"E": E, "E_R": E_R, "H_x0_norm": math.sqrt(2.0 * E)}


def h_state_norm(state) -> float:
    """Norm of (u0, u1) in the energy space: gradient part via the operator
    form, velocity part in L^2 of the volume measure."""
    total = 0.0
    for mode in state.modes:
        w = mode.w_grid()
        wt = mode.wt_grid()
        total += mode.mult * (
            mode.operator.quad_form(w) + state.grid.h * float(np.sum(np.abs(wt) ** 2))
        )
    return math.sqrt(total)


def dbk_norm(state, k: int) -> float:
    """Graph norm of the k-th generator power: |data| + |B^k data|.

    Warns when the k-th application is dominated by grid-scale content,
    which signals that k exceeds the resolved discrete smoothness.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    h = state.grid.h
    base_sq = 0.0
    pairs = []
    for mode in state.modes:
        pairs.append((mode, mode.w_grid().astype(complex), mode.wt_grid().astype(complex)))
        base_sq += mode.mult * (
            mode.operator.quad_form(pairs[-1][1])
            + h * float(np.sum(np.abs(pairs[-1][2]) ** 2))
        )
    base = math.sqrt(base_sq)
    prev = base
    cur = base
    for step in range(k):
        nxt_sq = 0.0
        new_pairs = []
        for mode, w, wt in pairs:
            bw, bwt = 1j * wt, -1j * mode.operator.apply(w)
            new_pairs.append((mode, bw, bwt))
            nxt_sq += mode.mult * (
                mode.operator.quad_form(bw) + h * float(np.sum(np.abs(bwt) ** 2))
            )
        pairs = new_pairs
        prev, cur = cur, math.sqrt(nxt_sq)
        scale = max(math.sqrt(mode.operator.norm_bound) for mode, _, _ in pairs)
        if prev > 0 and cur / prev > 0.5 * scale:
            warnings.warn(
                f"generator power {step + 1} amplifies grid-scale content "
                f"(growth {cur / prev:.3e} vs spectral radius {scale**2:.3e}); "
                "k exceeds the resolved smoothness",
                stacklevel=2,
            )
    return base + cur


@dataclass
class LeNorms:
    """Dyadically weighted space-time norms of a sampled evolution."""

    le: float
    le1: float
    le_star: float
    shell_u: np.ndarray
    shell_le1: np.ndarray
    times: np.ndarray = field(default_factory=lambda: np.empty(0))

    def as_dict(self) -> dict:
        return {"LE": self.le, "LE1": self.le1, "LE_star": self.le_star}


class ShellAccumulator:
    """Accumulates per-shell space-time integrals from sampled states.

    Feed instantaneous (t, |u|^2 density, order-one density) node arrays in
    time order; integrals use the trapezoid rule over the fed times.
    """

    def __init__(self, shells: ShellWeights):
        self.shells = shells
        self.times: list[float] = []
        self.u_rows: list[np.ndarray] = []
        self.e1_rows: list[np.ndarray] = []

    def add(self, t: float, u_density: np.ndarray, le1_density: np.ndarray) -> None:
        self.times.append(t)
        self.u_rows.append(self.shells.shell_sums(u_density))
        self.e1_rows.append(self.shells.shell_sums(le1_density))

    @staticmethod
    def _cum_trapz(rows: np.ndarray, t: np.ndarray) -> np.ndarray:
        dt = np.diff(t)[:, None]
        inc = 0.5 * (rows[1:] + rows[:-1]) * dt
        return np.vstack([np.zeros((1, rows.shape[1])), np.cumsum(inc, axis=0)])

    def finish(self) -> tuple[LeNorms, np.ndarray]:
        if len(self.times) < 2:
            raise ValueError("need at least two time samples for the space-time norms")
        t = np.asarray(self.times)
        U = self._cum_trapz(np.asarray(self.u_rows), t)
        E1 = self._cum_trapz(np.asarray(self.e1_rows), t)
        j = np.arange(self.shells.n_shells)
        wdown = np.power(2.0, -0.5 * j)
        wup = np.power(2.0, 0.5 * j)
        le = float(np.max(wdown * np.sqrt(U[-1])))
        le1 = float(np.max(wdown * np.sqrt(E1[-1])))
        le_star = float(np.sum(wup * np.sqrt(U[-1])))
        le1_running = np.max(wdown[None, :] * np.sqrt(E1), axis=1)
        return LeNorms(le, le1, le_star, U[-1], E1[-1], t), le1_running


def le_norms(history, geom: WarpGeometry, T: float | None = None) -> LeNorms:
    """LE, LE^1 and the dual LE* norm of a sampled evolution.

    ``history`` is a time-ordered sequence of states (see the duck-typing
    note above); samples beyond T are ignored.
    """
    history = list(history)
    if not history:
        raise ValueError("empty history")
    grid = history[0].grid
    shells = ShellWeights(grid, geom)
    acc = ShellAccumulator(shells)
    for state in history:
        if T is not None and state.time > T + 1e-12:
            break
        u_dens = np.zeros(grid.n_interior)
        e1_dens = np.zeros(grid.n_interior)
        for mode in state.modes:
            w = mode.w_grid()
            wt = mode.wt_grid()
            u_dens += mode.mult * np.abs(w) ** 2
            e1_dens += mode.mult * (
                np.abs(wt) ** 2
                + _mode_gradient_sq(geom, grid, mode.l, w)
                + shells.inv_bracket_sq * np.abs(w) ** 2
            )
        acc.add(state.time, u_dens, e1_dens)
    norms, _ = acc.finish()
    norms.times = np.asarray(acc.times)
    return norms
