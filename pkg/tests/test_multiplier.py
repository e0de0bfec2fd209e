import numpy as np
import pytest
import sympy as sp

from warptrap import evolve
from warptrap import multiplier as mul
from warptrap.geometry import WarpGeometry
from warptrap.spectral import Grid

# measured bound of g(x) * a(x) on the delta family at delta = 0.5, frozen
# with headroom as a regression constant
G_TIMES_A_BOUND = 1.05


@pytest.fixture(scope="module")
def pair_m1(geom_m1_front):
    return mul.MultiplierPair.delta_family(geom_m1_front, 0.5)


class TestCoefficients:
    def test_time_term_matches_closed_form_exactly(self, geom_m1_front, pair_m1):
        x = np.geomspace(1e-3, 1e3, 400)
        c = pair_m1.coefficients(x)
        closed = 0.5 * x**3 / (1.0 + x**2) ** 3
        scale = np.abs(pair_m1.g(x)) + np.abs(0.5 * pair_m1.df(x)
                                              + geom_m1_front.da(x) / geom_m1_front.a(x)
                                              * pair_m1.f(x))
        assert np.max(np.abs(c["tt"] - closed) / scale) < 1e-13

    def test_all_vanish_at_neck(self, pair_m1):
        c = pair_m1.coefficients(np.array([0.0]))
        for name in ("xx", "ang", "tt", "uu"):
            assert c[name][0] == pytest.approx(0.0, abs=1e-300)

    @pytest.mark.parametrize("m", [1, 2, 3])
    def test_routes_agree_and_margins_positive(self, m):
        geom = WarpGeometry.of(m, 1.0)
        delta = 0.5 * mul.find_admissible_delta(geom)
        pair = mul.MultiplierPair.delta_family(geom, delta)
        scan = mul.coefficient_scan(geom, pair)
        assert scan.route_agreement < 1e-12
        assert scan.all_positive
        assert scan.min_margins["tt"] == pytest.approx(delta, rel=1e-12)

    @pytest.mark.parametrize("m,expected", [(1, 1.0), (2, 0.8), (3, 4.0 / 7.0)])
    def test_admissible_damping_threshold(self, m, expected):
        # thresholds where one of the comparison margins first touches zero
        found = mul.find_admissible_delta(WarpGeometry.of(m, 1.0))
        assert found == pytest.approx(expected, rel=2e-3)

    def test_multiplier_profile_bounds(self, geom_m1_front, pair_m1):
        x = np.geomspace(1e-3, 1e3, 500)
        f = pair_m1.f(x)
        assert np.all((f >= 0) & (f <= 1))
        assert np.max(pair_m1.g(x) * geom_m1_front.a(x)) <= G_TIMES_A_BOUND

    def test_scan_rejects_exterior_family(self, geom_m1_front):
        ext = mul.MultiplierPair.exterior_family(geom_m1_front, 4.0, 4.0)
        with pytest.raises(ValueError):
            mul.coefficient_scan(geom_m1_front, ext)

    def test_family_validation(self, geom_m1_front):
        with pytest.raises(ValueError):
            mul.MultiplierPair.delta_family(geom_m1_front, 0.0)
        with pytest.raises(ValueError):
            mul.MultiplierPair.exterior_family(geom_m1_front, 8.0, 4.0)


class TestExteriorFamily:
    def test_vanishes_inside_half_radius(self, geom_m1_front):
        ext = mul.MultiplierPair.exterior_family(geom_m1_front, 8.0, 8.0)
        x = np.linspace(1.0, 3.9, 50)
        assert np.max(np.abs(ext.f(x))) == 0.0

    def test_approaches_unit_slope_outside(self, geom_m1_front):
        ext = mul.MultiplierPair.exterior_family(geom_m1_front, 8.0, 8.0)
        x = np.array([100.0, 400.0])
        np.testing.assert_allclose(ext.f(x), x / (x + 8.0), rtol=1e-12)

    @pytest.mark.parametrize("R", [4.0, 8.0, 16.0])
    def test_coefficients_finite_across_radii(self, geom_m1_front, R):
        ext = mul.MultiplierPair.exterior_family(geom_m1_front, R, R)
        x = np.geomspace(1.0, 1e3, 200)
        c = ext.coefficients(x)
        for name in ("xx", "ang", "tt", "uu"):
            assert np.all(np.isfinite(c[name]))


@pytest.fixture(scope="module")
def corpus_m1(geom_m1_front):
    return mul.make_corpus(geom_m1_front)


class TestIdentity:
    def test_zero_solution(self, geom_m1_front, pair_m1):
        sol = mul.manufactured_solution(geom_m1_front, 1, sp.Integer(0),
                                        mul.bump_profile(5.0, 1.0), "zero")
        rep = mul.verify_ibp(geom_m1_front, pair_m1, sol, T=1.0, x_max=12.0,
                             nx=100, nt=50)
        assert rep.lhs == 0.0 and rep.rhs == 0.0 and rep.gap == 0.0

    def test_gap_converges_second_order(self, geom_m1_front, pair_m1, corpus_m1):
        conv = mul.ibp_richardson(geom_m1_front, pair_m1, corpus_m1[0],
                                  T=2.0, x_max=12.0)
        assert 1.8 <= conv["order"] <= 2.2

    def test_interior_solution_has_no_wall_flux(self, geom_m1_front, pair_m1, corpus_m1):
        rep = mul.verify_ibp(geom_m1_front, pair_m1, corpus_m1[0], T=2.0, x_max=12.0,
                             nx=200, nt=100)
        assert rep.boundary_term == 0.0
        assert rep.trace_norm == 0.0

    def test_wall_attached_solution_has_positive_flux(self, geom_m1_front, pair_m1,
                                                      corpus_m1):
        wall_sol = corpus_m1[-1]
        rep = mul.verify_ibp(geom_m1_front, pair_m1, wall_sol, T=2.0, x_max=12.0,
                             nx=300, nt=150)
        assert rep.boundary_term > 0
        assert rep.trace_norm < 1e-12

    def test_violated_wall_condition_rejected(self, geom_m1_front, pair_m1):
        sol = mul.manufactured_solution(geom_m1_front, 0, sp.sin(sp.Symbol("t")),
                                        mul.bump_profile(1.2, 1.0), "bad-trace")
        with pytest.raises(ValueError, match="trace"):
            mul.verify_ibp(geom_m1_front, pair_m1, sol, T=1.0, x_max=12.0,
                           nx=100, nt=50)

    def test_exterior_family_satisfies_identity_too(self, geom_m1_front, corpus_m1):
        ext = mul.MultiplierPair.exterior_family(geom_m1_front, 4.0, 4.0)
        conv = mul.ibp_richardson(geom_m1_front, ext, corpus_m1[0],
                                  T=2.0, x_max=12.0)
        assert 1.8 <= conv["order"] <= 2.6

    def test_flux_form_reassembles_boundary_terms(self, geom_m1_front, pair_m1,
                                                  corpus_m1):
        sol = corpus_m1[-1]
        T, x_max = 2.0, 12.0
        I1, I2 = mul.flux_integrands(geom_m1_front, pair_m1, sol)
        rep = mul.verify_ibp(geom_m1_front, pair_m1, sol, T=T, x_max=x_max,
                             nx=600, nt=300)
        xs = np.linspace(1.0, x_max, 601)
        ts = np.linspace(0.0, T, 301)
        # time flux integrates to minus the identity's time-boundary term
        time_flux = (np.trapezoid(I1(np.full_like(xs, T), xs), xs)
                     - np.trapezoid(I1(np.zeros_like(xs), xs), xs))
        assert time_flux == pytest.approx(-rep.terms["time_boundary"], rel=1e-9)
        # radial flux at the wall integrates to the wall term
        wall_flux = np.trapezoid(I2(ts, np.full_like(ts, 1.0)), ts)
        assert wall_flux == pytest.approx(rep.terms["wall_flux"], rel=1e-9)


class TestHardy:
    def test_tent_function(self, geom_m1_front):
        grid = Grid(1.0, 11.0, 1500)
        x = grid.nodes()
        u = np.where(x <= 2, x - 1, np.where(x <= 3, 3 - x, 0.0))
        res = mul.hardy_check(geom_m1_front, grid, u)
        assert not res.degenerate
        assert 0 < res.ratio < 4.0

    def test_zero_function_degenerate(self, geom_m1_front):
        grid = Grid(1.0, 11.0, 200)
        res = mul.hardy_check(geom_m1_front, grid, np.zeros(200))
        assert res.degenerate and res.ratio == 0.0

    def test_scaling_sweep_bounded(self, geom_m1_front):
        grid = Grid(1.0, 11.0, 3000)
        x = grid.nodes()
        ratios = []
        for lam in (0.25, 0.5, 1.0, 2.0, 4.0):
            u = np.where(x <= 1 + 1 / lam, lam * (x - 1),
                         np.where(x <= 1 + 2 / lam, lam * (1 + 2 / lam - x), 0.0))
            ratios.append(mul.hardy_check(geom_m1_front, grid, u).ratio)
        # the proof's integration-by-parts argument caps the ratio at 4
        assert max(ratios) < 4.0
        assert max(ratios) / min(ratios) < 25.0

    def test_corpus_under_frozen_bound(self, geom_m1_front):
        from warptrap.cli import HARDY_FROZEN_BOUND

        grid = Grid(1.0, 11.0, 2000)
        results = mul.hardy_random_corpus(geom_m1_front, grid)
        assert max(r.ratio for r in results) <= HARDY_FROZEN_BOUND

    def test_requires_positive_side(self, geom_m1_trapped):
        grid = Grid(-1.0, 9.0, 100)
        with pytest.raises(ValueError):
            mul.hardy_check(geom_m1_trapped, grid, np.zeros(100))


class TestAudit:
    def test_zero_run_degenerate(self, geom_m1_front):
        grid = Grid(1.0, 12.0, 300)
        z = np.zeros(300, dtype=complex)
        fld = evolve.wave_field(geom_m1_front, grid, [(0, 1, z, z)])
        hist = evolve.propagate(fld, 0.5, 8)
        res = mul.le_bound_audit(hist, geom_m1_front)
        assert res.ratio_lelocal == 0.0 and res.ratio_lepositive == 0.0

    def test_rejects_trapped_side(self, geom_m1_trapped):
        with pytest.raises(ValueError):
            mul.le_bound_audit([], geom_m1_trapped)

    def test_homogeneous_run_ratios_finite(self, geom_m1_front):
        grid = Grid(1.0, 24.0, 900)
        x = grid.nodes()
        s = (x - 2.5)
        w0 = np.where(np.abs(s) < 1, np.exp(-1.0 / np.maximum(1e-300, 1 - s**2)), 0.0)
        w0 = w0.astype(complex)
        from warptrap.spectral import fd_derivative

        w1 = -fd_derivative(grid, w0, 1)
        fld = evolve.wave_field(geom_m1_front, grid, [(1, 1, w0, w1)])
        hist = evolve.propagate(fld, 0.25, 60)
        res = mul.le_bound_audit(hist, geom_m1_front)
        assert 0 < res.ratio_lelocal < 50
        assert 1 <= res.ratio_lepositive < 50
