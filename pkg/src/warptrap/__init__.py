"""Numerical laboratory for waves on a warped-product surface with a
Dirichlet boundary.

The surface is a two-ended line-times-sphere geometry whose sphere radius
is smallest at the neck x = 0.  Waves reflect off a wall placed at x = x0.
With the wall on the far side of the neck (x0 > 0) local energy disperses
losslessly; with the wall past the neck (x0 < 0) a potential well forms
between wall and neck, and nearly-stationary mode packets stay confined
for times that grow exponentially in their angular frequency.

Subpackage map:

- ``geometry``:   the warp profile, its derivatives, per-mode potentials
- ``spectral``:   grids, tridiagonal operators, eigensolver, norms
- ``quasimode``:  confined near-eigenfunctions and decay-rate fits
- ``evolve``:     exact spectral time evolution and confinement runs
- ``multiplier``: integration-by-parts identity and coefficient audits
- ``cli``:        experiment driver (``warptrap`` entry point)
"""

__version__ = "0.1.0"

from .geometry import AngularMode, WarpGeometry, WarpParams, mode_table, warp_eval
from .spectral import (
    EigenPair,
    Grid,
    TridiagonalOperator,
    build_operator,
    eigen_lowest,
    quadrature_hk,
    quadrature_l2,
)

__all__ = [
    "AngularMode",
    "EigenPair",
    "Grid",
    "TridiagonalOperator",
    "WarpGeometry",
    "WarpParams",
    "build_operator",
    "eigen_lowest",
    "mode_table",
    "quadrature_hk",
    "quadrature_l2",
    "warp_eval",
]
