import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovmhd.besov import BesovIndex, chemin_lerner_norm
from besovmhd.corpus import field_corpus
from besovmhd.dyadic import build_filter_bank
from besovmhd.fields import Grid, mode, sample_divergence_free
from besovmhd.heat import (
    _phi2,
    duhamel_coeffs,
    duhamel_solve,
    free_evolution_AT,
    heat_propagate,
    smoothing_ratio,
    time_grid,
)


def test_time_grid():
    np.testing.assert_allclose(time_grid(1.0, 0.25), [0, 0.25, 0.5, 0.75, 1.0])
    with pytest.raises(ValueError):
        time_grid(1.0, 0.3)
    with pytest.raises(ValueError):
        time_grid(0.1, 0.2)


@given(st.floats(min_value=-5.0, max_value=5.0).filter(lambda z: abs(z) > 1e-3))
def test_phi2_against_direct_formula(z):
    direct = (np.expm1(z) - z) / z**2
    assert _phi2(np.array([z]))[0] == pytest.approx(direct, rel=1e-9)


def test_phi2_at_zero():
    assert _phi2(np.array([0.0]))[0] == 0.5


class TestHeat:
    @pytest.mark.parametrize("k", [(1, 0), (3, 2), (7, 5)])
    def test_single_mode_decay(self, grid, k):
        f = mode(grid, k)
        ksq = k[0] ** 2 + k[1] ** 2
        traj = duhamel_solve(f, None, 0.2, 0.01)
        for i, t in enumerate(traj.times):
            np.testing.assert_allclose(traj.at(i).coeffs, f.coeffs * np.exp(-t * ksq), rtol=1e-12, atol=0)

    def test_negative_time(self, grid):
        with pytest.raises(ValueError):
            heat_propagate(mode(grid, (1, 0)), -1.0)

    def test_constant_forcing_closed_form(self, grid):
        u0 = sample_divergence_free(grid, 1)
        G = sample_divergence_free(grid, 2)
        T = 0.3
        traj = duhamel_solve(u0, lambda t: G, T, 0.01)
        ksq = np.where(grid.ksq == 0, 1.0, grid.ksq)
        e = np.exp(-T * grid.ksq)
        exact = e * u0.coeffs + (1 - e) / ksq * G.coeffs
        assert np.max(np.abs(traj.coeffs[-1] - exact)) <= 1e-10 * np.max(np.abs(exact))

    def test_linear_forcing_exact(self, grid):
        # G(t) = t H has the closed form t/|k|^2 - (1 - e^{-t|k|^2})/|k|^4
        H = sample_divergence_free(grid, 4)
        T = 0.2
        traj = duhamel_solve(H * 0.0, lambda t: H * t, T, 0.02)
        k2 = np.where(grid.ksq == 0, 1.0, grid.ksq)
        exact = (T / k2 + np.expm1(-T * k2) / k2**2) * H.coeffs
        assert np.max(np.abs(traj.coeffs[-1] - exact)) <= 1e-12 * np.max(np.abs(exact))

    def test_second_order_for_smooth_forcing(self, small_grid):
        u0 = mode(small_grid, (2, 1), components=[1.0, -2.0])
        k2 = 5.0
        w = 20.0
        G = lambda t: u0 * np.cos(w * t)
        T = 0.5

        def exact(t):
            # u' = -k2 u + cos(w t), u(0) = 1 (per coefficient)
            den = k2**2 + w**2
            return (np.exp(-k2 * t) * (1 - k2 / den)
                    + (k2 * np.cos(w * t) + w * np.sin(w * t)) / den)

        errs = []
        for steps in (50, 100, 200):
            traj = duhamel_solve(u0, G, T, T / steps)
            errs.append(np.max(np.abs(traj.coeffs[-1] - exact(T) * u0.coeffs)))
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders > 1.9)

    def test_rejects_nonfinite(self, small_grid):
        c = np.zeros((2, 1) + small_grid.shape, complex)
        f = c.copy()
        f[1, 0, 1, 1] = np.nan
        with pytest.raises(ValueError):
            duhamel_coeffs(c[0], f, 0.1, small_grid.ksq)


class TestFreeEvolution:
    def test_matches_trace_quadrature(self, grid, bank):
        u0 = sample_divergence_free(grid, 6)
        T = 0.05
        l1, l2 = free_evolution_AT(u0, T, bank)
        tr = duhamel_solve(u0, None, T, T / 4000).norm_trace(2, bank)
        assert l1 == pytest.approx(chemin_lerner_norm(tr, 1, BesovIndex(2.0)), rel=1e-6)
        assert l2 == pytest.approx(chemin_lerner_norm(tr, 2, BesovIndex(1.0)), rel=1e-6)

    def test_single_shell_closed_form(self, grid, bank):
        f = mode(grid, (4, 4))
        T = 0.01
        lam = 2 * 32.0
        l1, l2 = free_evolution_AT(f, T, bank)
        # band 2 weights: 2^{2 * 2} for L^1, 2^{2} for L^2
        amp = 1 / np.sqrt(2)
        assert l1 == pytest.approx(16 * amp * 2 / lam * -np.expm1(-lam * T / 2), rel=1e-13)
        assert l2 == pytest.approx(4 * amp * np.sqrt(-np.expm1(-lam * T) / lam), rel=1e-13)

    def test_general_p_path(self, grid, bank):
        u0 = mode(grid, (4, 4))
        l1, l2 = free_evolution_AT(u0, 0.01, bank, p=2.0 + 1e-12)
        m1, m2 = free_evolution_AT(u0, 0.01, bank)
        assert l1 == pytest.approx(m1, rel=1e-7)
        assert l2 == pytest.approx(m2, rel=1e-7)

    @given(st.floats(min_value=1e-4, max_value=1.0), st.floats(min_value=1.0, max_value=3.0))
    def test_monotone_in_horizon(self, T, factor):
        g = Grid(2, 32)
        bank = build_filter_bank(g)
        u0 = sample_divergence_free(g, 1)
        a = free_evolution_AT(u0, T, bank)
        b = free_evolution_AT(u0, T * factor, bank)
        assert b[0] >= a[0] * (1 - 1e-12) and b[1] >= a[1] * (1 - 1e-12)


def test_smoothing_constant_spread(grid, bank):
    forcings = field_corpus(grid, seed=500)
    ratios = [smoothing_ratio(f, lambda t, w=w: w * np.cos(3 * t), 0.5, 0.01, bank).ratio_l1
              for f, w in zip(field_corpus(grid), forcings)]
    assert 0 < min(ratios) and max(ratios) / min(ratios) < 4.0


def test_free_flow_sup_equals_datum_norm(grid, bank):
    r = smoothing_ratio(sample_divergence_free(grid, 2), None, 0.1, 0.01, bank)
    assert r.lhs_sup == pytest.approx(r.rhs, rel=1e-14)
    assert r.worst == pytest.approx(1.0, rel=1e-14)
