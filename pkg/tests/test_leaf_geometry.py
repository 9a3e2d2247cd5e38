import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from codazzi import jets
from codazzi.chart import CoordinateBox, MetricField, ScalarField, sample_grid
from codazzi.codazzi_analysis import eigenvalue_field
from codazzi.errors import AssumptionViolation, DegenerateMetricError, DimensionError
from codazzi.leaf_geometry import (BAND, GEODESIC, WARPED, LeafData, classify_zones,
                                   fiber_variation, induced_scalar_curvature_gauss,
                                   mean_curvature_field, mean_curvature_identity_residual,
                                   reconstruct_warping, second_fundamental_form,
                                   traced_codazzi_mainardi_residual, umbilicity_residual,
                                   warped_product_residual, zone_components)
from codazzi.merton import closed_form_christoffel, perturbed_metric, sigma_profile
from codazzi.solitons import soliton_codazzi_tensor

BOX = CoordinateBox.from_bounds([(-1.5, 1.5), (-2, 2), (-2, 2)])
PTS = np.array([[0.3, 0.5, 0.1], [-0.2, 1.0, 0.4], [0.5, -0.7, 0.0]])


def diag_metric(g00, g11, g22, box=BOX):
    return MetricField(lambda t, x, y: [[g00(t, x, y), 0.0, 0.0], [0.0, g11(t, x, y), 0.0],
                                        [0.0, 0.0, g22(t, x, y)]], box)


ONE = lambda t, x, y: 1.0 + 0.0 * t
PRODUCT = diag_metric(ONE, lambda t, x, y: 1.0 + x * x, lambda t, x, y: 2.0 + jets.sin(x * y))
EXP_WARPED = diag_metric(ONE, lambda t, x, y: jets.exp(t) + 0 * x, lambda t, x, y: jets.exp(t) + 0 * x)
# umbilic leaves (h = c(x) g^sigma) but H = 2 sin x varies along them
UMBILIC = diag_metric(ONE, lambda t, x, y: jets.exp(2 * jets.sin(x) * t),
                      lambda t, x, y: jets.exp(2 * jets.sin(x) * t))


class TestSecondFundamentalForm:
    def test_product_is_totally_geodesic(self):
        leaf = second_fundamental_form(PRODUCT, PTS)
        assert np.abs(leaf.h).max() == 0.0 and np.abs(leaf.H).max() == 0.0

    def test_umbilic_family(self):
        leaf = second_fundamental_form(UMBILIC, PTS)
        np.testing.assert_allclose(leaf.H, 2 * np.sin(PTS[:, 1]), atol=1e-12)
        assert leaf.umbilicity.max() < 1e-12

    def test_merton_middle_zone_geodesic(self, merton):
        assert np.abs(second_fundamental_form(merton.g, [0.4, 1.0, 2.0]).h).max() < 1e-12

    def test_merton_t2_matches_table(self, merton):
        p = [2.0, 0.3, 1.1]
        leaf = second_fundamental_form(merton.g, p)
        gam = closed_form_christoffel(merton, p)
        g00 = merton.g(p)[0, 0]
        expected = -gam[0, 1, 1] * np.sqrt(g00)
        sig, dsig = merton.sigma.jets([p], 1)[0][0], merton.sigma.jets([p], 1)[1][0, 0]
        assert expected == pytest.approx(sig * dsig)           # rho = 3 sigma there
        np.testing.assert_allclose(np.diag(leaf.h), expected, rtol=1e-12)
        assert leaf.H == pytest.approx(2 * dsig, rel=1e-12)

    def test_degenerate_g00(self):
        g = diag_metric(lambda t, x, y: -1.0 + 0 * t, ONE, ONE)
        with pytest.raises(DegenerateMetricError):
            second_fundamental_form(g, PTS[0])

    def test_non_adapted_chart(self):
        g = MetricField(lambda t, x, y: [[1.0 + 0 * t, 0.1, 0.0], [0.1, 1.0 + 0 * t, 0.0],
                                         [0.0, 0.0, 1.0 + 0 * t]], BOX)
        with pytest.raises(AssumptionViolation):
            second_fundamental_form(g, PTS)


class TestUmbilicity:
    def test_arithmetic(self):
        leaf = LeafData(np.zeros(3), np.diag([1.0, 2.0]), 3.0, 0.0, np.eye(2))
        assert umbilicity_residual(leaf) == pytest.approx(0.5)

    def test_flat(self):
        assert umbilicity_residual(second_fundamental_form(PRODUCT, PTS)).max() == 0.0

    def test_merton_everywhere(self, merton, merton_grid):
        assert second_fundamental_form(merton.g, merton_grid.points).umbilicity.max() <= 1e-7

    def test_merton_H_constant_on_leaves(self, merton, merton_grid):
        H = mean_curvature_field(merton.g)
        assert fiber_variation(H, merton_grid.points).max() <= 1e-7


class TestMeanCurvatureIdentity:
    def test_t0_both_zero(self, merton):
        mc = mean_curvature_identity_residual(merton.g, merton.T, [0.0, 0.5, 0.5])
        assert abs(mc.H) < 1e-14 and abs(mc.predicted) < 1e-10

    def test_t2_fiber_points(self, merton):
        pts = np.column_stack([np.full(8, 2.0), np.linspace(0, 6, 8), np.linspace(1, 5, 8)])
        mc = mean_curvature_identity_residual(merton.g, merton.T, pts)
        assert mc.residual.max() <= 1e-6
        assert np.all(mc.H > 0.01)

    def test_unnormalised_form_disagrees(self, merton):
        """d_0 sigma / (rho - sigma) alone misses the factor (n-1)/sqrt(g_00) = 4 sigma here."""
        mc = mean_curvature_identity_residual(merton.g, merton.T, [2.0, 0.0, 0.0])
        assert mc.H / mc.literal == pytest.approx(4 * sigma_profile(2.0), rel=1e-6)

    def test_cylinder_soliton(self, solitons):
        s = solitons["cylinder"]
        pts = np.array([[t, 1.3, 0.2] for t in (-1.5, -0.4, 0.0, 0.9)])
        mc = mean_curvature_identity_residual(s.g, soliton_codazzi_tensor(s), pts)
        assert np.abs(mc.H).max() < 1e-14 and np.abs(mc.predicted).max() < 1e-8

    def test_equal_eigenvalues_rejected(self):
        with pytest.raises(AssumptionViolation):
            mean_curvature_identity_residual(PRODUCT, PRODUCT, PTS[0])


class TestTracedCodazziMainardi:
    def test_warped_product(self):
        assert traced_codazzi_mainardi_residual(EXP_WARPED, PTS).max() < 1e-12

    def test_umbilic_non_warped_fixes_sign(self):
        """Both terms are nonzero here; only the + sign balances them."""
        assert traced_codazzi_mainardi_residual(UMBILIC, PTS).max() < 1e-10

    def test_merton(self, merton, merton_grid):
        assert traced_codazzi_mainardi_residual(merton.g, merton_grid.points).max() <= 1e-5

    def test_negative_control(self, merton, merton_grid):
        assert traced_codazzi_mainardi_residual(perturbed_metric(merton), merton_grid.points).max() > 1e-3


class TestWarpedProduct:
    def test_exponential(self):
        res, phi = warped_product_residual(EXP_WARPED, PTS)
        assert res.max() < 1e-12
        np.testing.assert_allclose(phi, 1.0, rtol=1e-12)

    def test_merton_t2(self, merton):
        res, phi = warped_product_residual(merton.g, [2.0, 1.0, 1.0])
        s = merton.sigma.jets([[2.0, 1.0, 1.0]], 1)
        assert res <= 1e-7
        assert phi == pytest.approx(s[1][0, 0] / s[0][0], rel=1e-12)

    def test_merton_t0(self, merton):
        res, phi = warped_product_residual(merton.g, [0.0, 1.0, 1.0])
        assert res == 0.0 and phi == 0.0

    def test_non_warped(self):
        assert warped_product_residual(UMBILIC, PTS)[0].min() > 1e-2

    def test_zero_entry_with_derivative(self):
        g = MetricField(lambda t, x, y: [[1.0 + 0 * t, 0.0, 0.0], [0.0, 1.0 + 0 * t, t],
                                         [0.0, t, 1.0 + 0 * t]], BOX)
        assert warped_product_residual(g, [0.0, 0.0, 0.0])[0] == np.inf

    def test_reconstruct_psi(self):
        g = diag_metric(ONE, lambda t, x, y: jets.exp(jets.sin(t)) + 0 * x,
                        lambda t, x, y: jets.exp(jets.sin(t)) + 0 * x)
        t = np.linspace(-1.2, 1.2, 13)
        psi = reconstruct_warping(g, t, [0.1, -0.3])
        np.testing.assert_allclose(psi, np.sin(t) - np.sin(t[0]), atol=1e-5)


class TestGauss:
    def test_cylinder(self, solitons):
        s = solitons["cylinder"]
        gauss, direct, res = induced_scalar_curvature_gauss(s.g, [[0.3, 1.0, 2.0], [-1.0, 2.0, 0.5]])
        np.testing.assert_allclose(direct, 2.0, atol=1e-12)
        np.testing.assert_allclose(gauss, 2.0, atol=1e-12)

    def test_flat(self):
        gauss, direct, _ = induced_scalar_curvature_gauss(PRODUCT.__class__(
            lambda t, x, y: [[ONE(t, x, y), 0.0, 0.0], [0.0, ONE(t, x, y), 0.0], [0.0, 0.0, ONE(t, x, y)]], BOX),
            PTS)
        assert np.abs(gauss).max() == 0.0 and np.abs(direct).max() == 0.0

    def test_merton_flat_tori(self, merton, merton_grid):
        gauss, direct, res = induced_scalar_curvature_gauss(merton.g, merton_grid.points)
        assert np.abs(direct).max() <= 1e-12 and res.max() <= 1e-5

    @pytest.mark.parametrize("name", ["gaussian", "s3", "cylinder"])
    def test_catalog_umbilic_leaves(self, solitons, name):
        s = solitons[name]
        assert induced_scalar_curvature_gauss(s.g, s.default_grid().points)[2].max() <= 1e-5

    def test_dimension(self):
        g2 = MetricField(lambda a, b: [[1.0 + 0 * a, 0.0], [0.0, 1.0 + 0 * a]],
                         CoordinateBox.from_bounds([(-1, 1)] * 2))
        with pytest.raises(DimensionError):
            induced_scalar_curvature_gauss(g2, [0.0, 0.0])


LINE_BOX = CoordinateBox.from_bounds([(-4, 4), (0, 2 * np.pi)], [False, True])
LINE_GRID = sample_grid(LINE_BOX, (41, 4))


class TestZones:
    def test_merton_labels(self, merton, merton_grid):
        zones = classify_zones(eigenvalue_field(merton.T, merton.g), merton_grid, g=merton.g)
        t = merton_grid.points[:, 0]
        labels = np.array([z.label for _, z in zones])
        assert np.all(labels[np.abs(t) > 1.15] == WARPED)
        assert np.all(labels[np.abs(t) < 0.85] == GEODESIC)
        assert set(labels[(np.abs(t) > 0.85) & (np.abs(t) < 1.15)]) <= {WARPED, GEODESIC, BAND}
        assert all(z.consistent is not False for _, z in zones)

    def test_monotone_all_warped(self):
        f = ScalarField(lambda t, x: t + 0 * x, LINE_BOX)
        assert {z.label for _, z in classify_zones(f, LINE_GRID)} == {WARPED}

    def test_constant_all_geodesic(self):
        f = ScalarField(lambda t, x: 2.0 + 0 * t, LINE_BOX)
        assert {z.label for _, z in classify_zones(f, LINE_GRID)} == {GEODESIC}

    def test_fiber_dependence_rejected(self):
        f = ScalarField(lambda t, x: t + 0.1 * jets.sin(x), LINE_BOX)
        with pytest.raises(AssumptionViolation):
            classify_zones(f, LINE_GRID)

    def test_idempotent(self, merton):
        f = merton.sigma
        grid = merton.default_grid(31, 2, 2)
        a = [(p.tolist(), z) for p, z in classify_zones(f, grid)]
        b = [(p.tolist(), z) for p, z in classify_zones(f, grid)]
        assert a == b

    @given(st.floats(1e-6, 1e-1), st.floats(1.0, 100.0))
    @settings(max_examples=15, deadline=None)
    def test_threshold_monotone(self, thr, factor):
        """Raising the threshold never turns a geodesic label into a warped one."""
        f = ScalarField(lambda t, x: sigma_profile(t) + 0 * x, LINE_BOX)
        low = [z.label for _, z in classify_zones(f, LINE_GRID, thr)]
        high = [z.label for _, z in classify_zones(f, LINE_GRID, thr * factor)]
        assert not any(a == GEODESIC and b == WARPED for a, b in zip(low, high))
        assert sum(b == WARPED for b in high) <= sum(a == WARPED for a in low)

    def test_band_only_next_to_transition(self):
        f = ScalarField(lambda t, x: sigma_profile(t) + 0 * x, LINE_BOX)
        zones = classify_zones(f, LINE_GRID)
        labels = np.array([z.label for _, z in zones]).reshape(LINE_GRID.shape)[:, 0]
        for i in np.flatnonzero(labels == BAND):
            near = labels[max(i - 1, 0):i + 2]
            assert WARPED in near

    def test_components(self):
        labs = [WARPED, WARPED, BAND, GEODESIC, WARPED]
        runs = zone_components(labs, np.arange(5.0))
        assert [r.tolist() for r in runs] == [[0.0, 1.0], [4.0]]
