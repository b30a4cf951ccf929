import numpy as np
import pytest
from hypothesis import given, strategies as st

from besovmhd.dyadic import (
    CHI_OUTER,
    INNER,
    OUTER,
    band_range,
    build_filter_bank,
    chi,
    low_cutoff,
    lp_block,
    phi,
    smooth_step,
)
from besovmhd.fields import Grid, mode, sample_divergence_free

radii = st.floats(min_value=0.0, max_value=20.0, allow_nan=False)


class TestProfiles:
    def test_smooth_step_ends(self):
        assert smooth_step(-1.0) == 0.0
        assert smooth_step(0.0) == 0.0
        assert smooth_step(1.0) == 1.0
        assert smooth_step(2.0) == 1.0
        assert smooth_step(0.5) == pytest.approx(0.5)

    def test_chi_plateau_and_support(self):
        r = np.linspace(0, INNER, 50)
        assert np.all(chi(r) == 1.0)
        r = np.linspace(CHI_OUTER, 10, 50)
        assert np.all(chi(r) == 0.0)

    @given(radii)
    def test_phi_support_and_range(self, r):
        v = float(phi(r))
        assert 0.0 <= v <= 1.0
        if r < INNER or r > OUTER:
            assert v == 0.0

    @given(st.floats(min_value=1e-3, max_value=1e3))
    def test_telescoping_sum(self, r):
        # chi(2^-J r) - chi(2^J' r) collapses the sum of dyadic pieces
        js = range(-15, 15)
        total = sum(float(phi(2.0**-j * r)) for j in js)
        assert total == pytest.approx(1.0, abs=1e-12)

    def test_phi_is_one_on_inner_plateau(self):
        r = np.linspace(CHI_OUTER, 1.5, 20)
        assert np.all(phi(r) == 1.0)


class TestBank:
    @pytest.mark.parametrize("n,L,expected", [(64, 2 * np.pi, (-1, 3)), (16, 2 * np.pi, (-1, 1)),
                                              (128, 2 * np.pi, (-1, 4)), (64, 1.0, (2, 6))])
    def test_band_range(self, n, L, expected):
        assert band_range(Grid(2, n, L)) == expected

    def test_too_coarse_grid(self):
        with pytest.raises(ValueError):
            build_filter_bank(Grid(2, 8))

    def test_bank_is_cached(self, grid):
        assert build_filter_bank(grid) is build_filter_bank(Grid(2, 64))

    def test_multiplier_out_of_band(self, bank):
        with pytest.raises(IndexError):
            bank.multiplier(bank.j_max + 1)

    def test_exact_partition_range(self, bank, grid):
        lo, hi = bank.exact_range
        sel = (grid.kmag >= lo) & (grid.kmag <= hi)
        assert np.max(np.abs(bank.partition_sum()[sel] - 1.0)) <= 1e-15

    def test_phi_csv_rows(self, bank):
        rows = bank.phi_csv().splitlines()
        assert rows[0] == "j,k,value"
        js = {int(r.split(",")[0]) for r in rows[1:]}
        assert js == set(bank.js)


class TestBlocks:
    def test_block_of_plateau_mode(self, grid, bank):
        # |k| = 4 sqrt 2 sits where phi(2^-2 .) == 1
        f = mode(grid, (4, 4))
        assert np.array_equal(lp_block(f, 2, bank).coeffs, f.coeffs)
        for j in (1, 3):
            assert not np.any(lp_block(f, j, bank).coeffs)

    @given(st.integers(min_value=0, max_value=500))
    def test_reconstruction(self, seed):
        g = Grid(2, 64)
        bank = build_filter_bank(g)
        f = sample_divergence_free(g, seed)
        total = sum(lp_block(f, j, bank).coeffs for j in bank.js)
        assert np.allclose(total, f.coeffs, atol=1e-15)
        assert np.allclose(low_cutoff(f, bank.j_max + 1, bank).coeffs, f.coeffs, atol=1e-15)

    def test_low_cutoff_is_partial_sum(self, grid, bank):
        f = sample_divergence_free(grid, 11)
        s = low_cutoff(f, 1, bank)
        parts = lp_block(f, -1, bank).coeffs + lp_block(f, 0, bank).coeffs
        assert np.allclose(s.coeffs, parts)
        assert not np.any(low_cutoff(f, bank.j_min, bank).coeffs)
        with pytest.raises(IndexError):
            low_cutoff(f, bank.j_max + 2, bank)

    def test_block_of_block_vanishes_far_apart(self, grid, bank):
        f = sample_divergence_free(grid, 5)
        for j in bank.js:
            for k in bank.js:
                if abs(j - k) >= 2:
                    assert not np.any(lp_block(lp_block(f, j, bank), k, bank).coeffs)
