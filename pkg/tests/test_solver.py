import numpy as np
import pytest

from besovmhd.corpus import DataSpec
from besovmhd.dyadic import build_filter_bank
from besovmhd.fields import (
    Grid,
    SpectralField,
    _advect_coeffs,
    _leray_coeffs,
    mode,
    sample_divergence_free,
    translate,
)
from besovmhd.heat import _phi1
from besovmhd.lifespan import data_norms, lifespan_estimate
from besovmhd.solver import (
    CFLError,
    LifespanExceededError,
    SolverConfig,
    continuous_dependence_experiment,
    perturbation_pair,
    solve_mhd,
    transport_bound_monitor,
    transport_step,
)


@pytest.fixture(scope="module")
def g32():
    return Grid(2, 32)


@pytest.fixture(scope="module")
def small_run(g32):
    bank = build_filter_bank(g32)
    u, b = DataSpec(0, 0.04, 0.1).build(g32, bank)
    T = lifespan_estimate(u, b, bank=bank).T
    return solve_mhd(u, b, SolverConfig.with_steps(T, 32), bank)


def constant_velocity(grid, U):
    c = np.zeros((grid.d,) + grid.shape, complex)
    c[(slice(None),) + (0,) * grid.d] = U
    return SpectralField(grid, c, zero_mean=False)


def transport_error(grid, steps, T=0.5, U=(1.0, 0.5)):
    b = mode(grid, (3, 2), components=[2.0, -3.0]) + mode(grid, (1, 4), kind="sin", components=[4.0, -1.0])
    u = constant_velocity(grid, U)
    g = SpectralField.zeros(grid, 2)
    dt = T / steps
    x = b
    for _ in range(steps):
        x = transport_step(x, u, g, dt)
    exact = translate(b, tuple(T * np.asarray(U)))
    return float(np.max(np.abs(x.coeffs - exact.coeffs)))


def ns_reference(u0, T, steps):
    """ETD-RK2 (Cox-Matthews) pseudo-spectral Navier-Stokes, written independently of the Picard sweep."""
    grid = u0.grid
    h = T / steps
    L = -grid.ksq
    E = np.exp(h * L)
    p1 = h * _phi1(h * L)
    with np.errstate(divide="ignore", invalid="ignore"):
        p2 = np.where(L == 0, h / 2, (E - 1 - h * L) / (h * L**2))

    def N(c):
        return _leray_coeffs(-_advect_coeffs(c, c, grid), grid)

    c = u0.coeffs.copy()
    for _ in range(steps):
        n0 = N(c)
        a = E * c + p1 * n0
        c = a + p2 * (N(a) - n0)
    return c


class TestConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SolverConfig(T=0.1, dt=0.2)
        with pytest.raises(ValueError):
            SolverConfig(T=0.1, dt=0.03)
        with pytest.raises(ValueError):
            SolverConfig(T=0.1, dt=0.01, max_picard=0)
        cfg = SolverConfig.with_steps(0.1, 10)
        assert cfg.times.size == 11


class TestTransport:
    def test_fourth_order_translation(self, g32):
        errs = [transport_error(g32, s) for s in (8, 16, 32)]
        orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
        assert np.all(orders >= 3.8), orders

    def test_cfl_guard(self, g32):
        u = constant_velocity(g32, (10.0, 0.0))
        b = mode(g32, (1, 0), components=[0.0, 1.0])
        with pytest.raises(CFLError):
            transport_step(b, u, SpectralField.zeros(g32, 2), 0.1)

    def test_rejects_compressible_velocity(self, g32):
        u = mode(g32, (1, 0), components=[1.0, 0.0])
        b = mode(g32, (1, 0), components=[0.0, 1.0])
        with pytest.raises(ValueError):
            transport_step(b, u, SpectralField.zeros(g32, 2), 0.01)


class TestSolve:
    def test_small_run_converges_with_bounds(self, small_run):
        st = small_run
        assert st.converged, st.message
        assert st.iterations <= 25
        assert st.all_bounds_hold
        assert st.max_divergence_ok
        assert all(r <= 0.9 for r in st.contraction_ratios[1:])

    def test_report_and_traces(self, small_run):
        rep = small_run.report()
        assert rep["H1_all"] and rep["H2_all"] and rep["divergence_ok"]
        head = small_run.traces_csv().splitlines()[0]
        assert head == "iteration,t,norm_name,value"

    def test_lifespan_gate(self, g32):
        bank = build_filter_bank(g32)
        u, b = DataSpec(0, 0.04, 0.1).build(g32, bank)
        T = lifespan_estimate(u, b, bank=bank).T
        with pytest.raises(LifespanExceededError):
            solve_mhd(u, b, SolverConfig.with_steps(2 * T, 8), bank)

    def test_zero_magnetic_field_stays_zero(self, g32):
        bank = build_filter_bank(g32)
        u, _ = DataSpec(3, 0.04, 0.1).build(g32, bank)
        b = SpectralField.zeros(g32, 2)
        T = lifespan_estimate(u, b, bank=bank).T
        st = solve_mhd(u, b, SolverConfig.with_steps(T, 16), bank)
        assert st.converged
        assert not np.any(st.b)

    def test_matches_navier_stokes_reference(self, g32):
        bank = build_filter_bank(g32)
        u, _ = DataSpec(5, 0.04, 0.1).build(g32, bank)
        b = SpectralField.zeros(g32, 2)
        T = lifespan_estimate(u, b, bank=bank).T
        st = solve_mhd(u, b, SolverConfig.with_steps(T, 64, tol=1e-12), bank)
        ref = ns_reference(u, T, 512)
        gap = np.linalg.norm(st.u[-1] - ref) / np.linalg.norm(ref)
        assert gap < 1e-4

    def test_transport_monitor(self, small_run):
        rep = transport_bound_monitor(small_run, C2=1.0)
        assert rep.max_ratio <= 1.0 + 1e-12
        assert rep.suggested_C2 >= 0.0
        assert rep.ratios.shape == small_run.times.shape


class TestDependence:
    def test_perturbation_norms_match_base(self, grid, bank):
        u, b = DataSpec(0, 0.04, 0.1).build(grid, bank)
        v, w = perturbation_pair(u, b, 9, 2, bank)
        np.testing.assert_allclose(data_norms(v, w, 2, bank), data_norms(u, b, 2, bank), rtol=1e-12)

    def test_distances_shrink_linearly(self, g32):
        bank = build_filter_bank(g32)
        u, b = DataSpec(0, 0.04, 0.1).build(g32, bank)
        cfg = SolverConfig(T=1.0, dt=0.5)
        rows, horizon = continuous_dependence_experiment(u, b, [1e-1, 1e-2, 0.0], 11, cfg, steps=16, threads=2)
        assert horizon > 0
        assert rows[2].combined == 0.0
        assert rows[0].combined > rows[1].combined > 0
        assert rows[1].combined / rows[0].combined == pytest.approx(0.1, rel=0.1)
        with pytest.raises(ValueError):
            continuous_dependence_experiment(u, b, [-1.0], 0, cfg)
