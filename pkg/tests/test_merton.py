import numpy as np
import pytest
from hypothesis import given, strategies as st

from codazzi.chart import DiffScheme
from codazzi.codazzi_analysis import codazzi_deviation, generalized_eigenstructure
from codazzi.merton import (CODAZZI_FAMILIES, MertonParams, broken_tensor, bump,
                            christoffel_table_residual, closed_form_christoffel,
                            formula_residual_tTxx, merton_metric, rho_bump, rho_profile,
                            sigma_profile, smooth_step, verify_all_codazzi_components)
from codazzi.scenarios import negative_control_factor


def d_sigma(t, order=1, h=1e-3):
    t = np.asarray(t, float)
    if order == 1:
        return (sigma_profile(t + h) - sigma_profile(t - h)) / (2 * h)
    return (sigma_profile(t + h) - 2 * sigma_profile(t) + sigma_profile(t - h)) / h ** 2


class TestProfiles:
    def test_examples(self):
        assert sigma_profile(0.0) == 2.0
        assert sigma_profile(-5.0) == pytest.approx(1.0, abs=1e-6)
        assert sigma_profile(5.0) == pytest.approx(3.0, abs=1e-6)
        assert rho_profile(0.0, np.pi / 2, np.pi / 2) == pytest.approx(6.0 + 2.0 / np.e, rel=1e-14)

    def test_bump_and_step(self):
        assert bump(-1.0) == 0.0 and bump(0.0) == 0.0
        assert bump(1.0) == pytest.approx(np.exp(-1.0))
        assert smooth_step(0.0) == 0.0 and smooth_step(1.0) == 1.0
        assert smooth_step(0.5) == pytest.approx(0.5)

    @given(st.floats(-4.0, 4.0))
    def test_sigma_range(self, t):
        assert 1.0 <= sigma_profile(t) <= 3.0

    @given(st.floats(-1.0, 1.0))
    def test_sigma_flat_in_middle(self, t):
        assert sigma_profile(t) == 2.0

    @given(st.floats(1.05, 3.5), st.sampled_from([-1.0, 1.0]))
    def test_sigma_strictly_increasing_outside(self, a, side):
        assert d_sigma(side * a) > 0.0

    @given(st.floats(1.0, 3.0))
    def test_rho_bump_vanishes_outside(self, a):
        assert rho_bump(a) == 0.0 and rho_bump(-a) == 0.0

    @pytest.mark.parametrize("edge", [-1.0, 1.0])
    def test_c2_across_edges(self, edge):
        eps = 1e-2
        for order in (1, 2):
            left, right = d_sigma(edge - eps, order), d_sigma(edge + eps, order)
            assert abs(left) < 1e-6 and abs(right) < 1e-6

    def test_sigma_below_rho(self, merton, merton_grid):
        p = merton_grid.points
        assert (merton.sigma(p) - merton.rho(p)).max() <= -1.0


class TestChristoffelTable:
    def test_examples(self, merton):
        gam = closed_form_christoffel(merton, [0.0, 0.0, 0.0])
        assert gam[0, 0, 1] == pytest.approx(-np.exp(-1.0) / 4.0, rel=1e-14)
        assert gam[0, 0, 0] == 0.0
        s, ds = sigma_profile(2.0), d_sigma(2.0)
        gam2 = closed_form_christoffel(merton, [2.0, 1.0, 3.0])
        assert gam2[0, 1, 1] == pytest.approx(-2 * s * s * ds, rel=1e-6)
        assert gam2[1, 0, 1] == pytest.approx(ds / (2 * s), rel=1e-6)

    def test_symmetric_in_lower_pair(self, merton, merton_grid):
        gam = closed_form_christoffel(merton, merton_grid.points)
        assert np.array_equal(gam, np.swapaxes(gam, -1, -2))

    def test_matches_jets(self, merton, merton_grid):
        assert christoffel_table_residual(merton, merton_grid, tolerance=1e-8).passed

    def test_matches_fd(self, merton, merton_grid):
        row = christoffel_table_residual(merton, merton_grid, DiffScheme(use_jets=False), 1e-6)
        assert row.passed, row.max_residual

    def test_flipped_table_fails(self, merton, merton_grid):
        assert christoffel_table_residual(merton, merton_grid, table_sign=-1.0).max_residual > 0.1


class TestCodazziFamilies:
    def test_families_cover_distinct_components(self):
        triples = [tr for _, ts in CODAZZI_FAMILIES.values() for tr in ts]
        assert len(set(triples)) == len(triples) == 10

    def test_all_pass(self, merton, merton_grid):
        rows = verify_all_codazzi_components(merton, merton_grid)
        assert [r.check_id for r in rows][-1] == "codazzi_global"
        assert all(r.passed for r in rows), [(r.check_id, r.max_residual) for r in rows]

    @pytest.mark.parametrize("seed", [0, 1, 7])
    def test_broken_tensor(self, merton, merton_grid, seed):
        c = negative_control_factor(seed)
        assert 1.5 <= c <= 2.5
        rows = verify_all_codazzi_components(merton, merton_grid, T=broken_tensor(merton, c))
        assert rows[-1].max_residual >= 1e-2

    def test_amplitude_zero_still_codazzi(self):
        m = merton_metric(MertonParams(amplitude=0.0))
        rows = verify_all_codazzi_components(m, m.default_grid(21, 4, 4))
        assert all(r.passed for r in rows)


class TestFormulaTTxx:
    @pytest.mark.parametrize("t", [0.0, 0.5, 2.0, -1.7])
    def test_both_sides_vanish(self, merton, t):
        lhs, rhs, diff = formula_residual_tTxx(merton, [t, 0.7, 2.1])
        assert abs(rhs) < 1e-12 and abs(lhs) <= 1e-6 and diff <= 1e-6

    def test_grid(self, merton, merton_grid):
        assert formula_residual_tTxx(merton, merton_grid.points)[2].max() <= 1e-6

    def test_matches_codazzi_component(self, merton):
        p = [2.0, 1.0, 1.0]
        assert formula_residual_tTxx(merton, p)[0] == codazzi_deviation(merton.T, merton.g, p).tensor[0, 1, 1]


class TestEigenPattern:
    @pytest.mark.parametrize("p", [[0.0, 1.0, 2.0], [2.5, 0.3, 0.3], [-2.0, 4.0, 5.0]])
    def test_rho_on_normal(self, merton, p):
        es = generalized_eigenstructure(merton.T(p), merton.g(p))
        assert es.multiplicities == (1, 2) or sorted(es.multiplicities) == [1, 2]
        assert es.rho == pytest.approx(merton.rho(p), rel=1e-10)
        assert es.sigma == pytest.approx(merton.sigma(p), rel=1e-10)
        g00 = merton.g(p)[0, 0]
        assert abs(es.rho_vector[0]) * np.sqrt(g00) == pytest.approx(1.0, abs=1e-10)
