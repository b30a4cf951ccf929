"""Picard scheme for non-resistive MHD on the torus.

Each sweep solves, on the whole interval ``[0, T]``,

    u_t - Delta u = P(b^n . grad b^n - u^n . grad u^n),   u(0) = S_n u0
    b_t + u^n . grad b = b^n . grad u^n,                  b(0) = S_n b0

starting from the free heat evolution of the data. ``P`` is the Leray
projector and ``S_n`` the dyadic low-frequency cutoff.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .besov import BesovIndex, NormTrace, UnresolvableTailError, block_norms_array, weighted_sum
from .dyadic import FilterBank, build_filter_bank, low_cutoff
from .fields import (
    SpectralField,
    _advect_coeffs,
    _directional_coeffs,
    _grad_coeffs,
    _leray_coeffs,
    _max_divergence,
    sample_divergence_free,
    to_physical,
)
from .heat import duhamel_coeffs, time_grid
from .lifespan import LifespanReport, data_norms, lifespan_estimate

__all__ = [
    "CFLError",
    "LifespanExceededError",
    "SolverConfig",
    "IterationRecord",
    "SolverState",
    "transport_step",
    "picard_step",
    "solve_mhd",
    "et_distance",
    "verdicts_from_traces",
    "TransportReport",
    "transport_bound_monitor",
    "DependenceRow",
    "continuous_dependence_experiment",
]

TRACE_NAMES = ("u_sup_norm", "u_l2_norm", "u_l1_norm", "b_sup_norm")


class CFLError(ValueError):
    """Step too large for the advecting velocity."""


class LifespanExceededError(ValueError):
    """Requested horizon beyond the guaranteed lifespan."""


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters. ``dt`` must divide ``T``; ``weights`` scale the three E_T pieces."""

    T: float
    dt: float
    max_picard: int = 25
    tol: float = 1e-8
    p: float = 2.0
    cfl: float = 0.5
    C1: float = 1.0
    C2: float = 1.0
    mollify: bool = True
    override_lifespan: bool = False
    weights: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if not self.T > 0:
            raise ValueError("T must be positive")
        if not 0 < self.dt <= self.T:
            raise ValueError(f"need 0 < dt <= T, got dt = {self.dt}, T = {self.T}")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.max_picard < 1:
            raise ValueError("max_picard must be at least 1")
        if not self.cfl > 0:
            raise ValueError("cfl must be positive")
        time_grid(self.T, self.dt)

    @classmethod
    def with_steps(cls, T: float, steps: int, **kw) -> SolverConfig:
        return cls(T=T, dt=T / steps, **kw)

    @property
    def times(self) -> np.ndarray:
        return time_grid(self.T, self.dt)


# --- transport -------------------------------------------------------------


def _cfl_check(u_nodes: np.ndarray, dt: float, grid, cfl: float):
    vals = to_physical(u_nodes, grid.d)
    umax = float(np.max(np.sqrt(np.sum(vals**2, axis=-grid.d - 1))))
    if umax > 0 and dt > cfl * grid.spacing / umax:
        raise CFLError(f"dt = {dt:.3e} exceeds CFL limit {cfl * grid.spacing / umax:.3e} (max|u| = {umax:.3e})")


def _rk4_transport(b, u_a, u_b, g_a, g_b, dt, grid):
    """One RK4 step of ``b_t = -div(u (x) b) + g`` with ``u, g`` linear in time over the step."""
    u_m = 0.5 * (u_a + u_b)
    g_m = 0.5 * (g_a + g_b)

    def rhs(bb, uu, gg):
        return gg - _advect_coeffs(uu, bb, grid)

    k1 = rhs(b, u_a, g_a)
    k2 = rhs(b + 0.5 * dt * k1, u_m, g_m)
    k3 = rhs(b + 0.5 * dt * k2, u_m, g_m)
    k4 = rhs(b + dt * k3, u_b, g_b)
    return b + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def transport_step(b: SpectralField, u: SpectralField, g: SpectralField, dt: float, cfl: float = 0.5) -> SpectralField:
    """Advance ``b_t + u . grad b = g`` by one RK4 step with ``u`` and ``g`` frozen.

    Raises:
        CFLError: if ``dt > cfl * dx / max|u|``.
    """
    grid = b.grid
    if u.grid != grid or g.grid != grid:
        raise ValueError("fields live on different grids")
    if not u.is_vector:
        raise ValueError("velocity must be a vector field")
    scale = 1.0 + float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))
    if _max_divergence(u.coeffs, grid) > 1e-8 * scale:
        raise ValueError("transport velocity is not divergence-free")
    _cfl_check(u.coeffs, dt, grid, cfl)
    out = _rk4_transport(b.coeffs, u.coeffs, u.coeffs, g.coeffs, g.coeffs, dt, grid)
    return b.with_coeffs(out, zero_mean=b.zero_mean and g.zero_mean)


def _zero_mean(c: np.ndarray, d: int) -> np.ndarray:
    c[(Ellipsis,) + (0,) * d] = 0
    return c


# --- one sweep ---------------------------------------------------------------


def picard_step(
    u_prev: np.ndarray,
    b_prev: np.ndarray,
    u0_n: SpectralField,
    b0_n: SpectralField,
    cfg: SolverConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """One full space-time sweep of the scheme.

    Args:
        u_prev, b_prev: previous iterate, shape ``(nodes, d, *grid.shape)``.
        u0_n, b0_n: data for the new iterate.
        cfg: run configuration (time grid, CFL number).

    Returns:
        ``(u_next, b_next)`` node arrays of the same shape.
    """
    grid = u0_n.grid
    d = grid.d
    times = cfg.times
    if u_prev.shape[0] != times.size or b_prev.shape[0] != times.size:
        raise ValueError("previous iterate does not match the configured time grid")
    _cfl_check(u_prev, cfg.dt, grid, cfg.cfl)
    # b^n need not be solenoidal, so its terms use the non-conservative product
    forcing = _directional_coeffs(b_prev, b_prev, grid) - _advect_coeffs(u_prev, u_prev, grid)
    forcing = _zero_mean(_leray_coeffs(forcing, grid), d)
    u_next = duhamel_coeffs(u0_n.coeffs, forcing, cfg.dt, grid.ksq)
    u_next = _zero_mean(_leray_coeffs(u_next, grid), d)

    source = _zero_mean(_directional_coeffs(b_prev, u_prev, grid), d)
    b_next = np.empty_like(b_prev)
    b_next[0] = b0_n.coeffs
    for i in range(times.size - 1):
        b_next[i + 1] = _rk4_transport(b_next[i], u_prev[i], u_prev[i + 1], source[i], source[i + 1], cfg.dt, grid)
    return u_next, b_next


# --- norms and monitors ------------------------------------------------------


def _inst_norms(u: np.ndarray, b: np.ndarray, p: float, bank: FilterBank) -> dict[str, np.ndarray]:
    """Per-node Besov norms entering the E_T metric and the A_T norm."""
    d = bank.grid.d
    ub = block_norms_array(u, p, bank)
    bb = block_norms_array(b, p, bank)
    return {
        "u_sup_norm": weighted_sum(ub, BesovIndex(d / p - 1, p, 1), bank),
        "u_l2_norm": weighted_sum(ub, BesovIndex(d / p, p, 1), bank),
        "u_l1_norm": weighted_sum(ub, BesovIndex(d / p + 1, p, 1), bank),
        "b_sup_norm": weighted_sum(bb, BesovIndex(d / p, p, 1), bank),
    }


def _trap(values: np.ndarray, times: np.ndarray) -> float:
    if times.size == 1:
        return 0.0
    return float(np.sum(0.5 * (values[1:] + values[:-1]) * np.diff(times)))


def et_distance(du: np.ndarray, db: np.ndarray, times: np.ndarray, p: float, bank: FilterBank,
                weights=(1.0, 1.0, 1.0)) -> float:
    """``sup_t ||du||_{B^{d/p-1}} + int ||du||_{B^{d/p+1}} + sup_t ||db||_{B^{d/p}}`` (weighted)."""
    n = _inst_norms(du, db, p, bank)
    w1, w2, w3 = weights
    return w1 * float(np.max(n["u_sup_norm"])) + w2 * _trap(n["u_l1_norm"], times) + w3 * float(np.max(n["b_sup_norm"]))


def verdicts_from_traces(traces: dict[str, np.ndarray], times: np.ndarray, E0: float, a: float) -> dict:
    """Uniform-bound checks recomputed from per-node norm traces alone."""
    sup_b = float(np.max(traces["b_sup_norm"]))
    sup_u = float(np.max(traces["u_sup_norm"]))
    l2 = math.sqrt(_trap(traces["u_l2_norm"] ** 2, times))
    l1 = _trap(traces["u_l1_norm"], times)
    return {
        "sup_b": sup_b,
        "sup_u": sup_u,
        "A_T": l2 + l1,
        "A_T_l2": l2,
        "A_T_l1": l1,
        "H1": sup_b + sup_u <= 6.0 * E0,
        "H2": l2 + l1 <= 2.0 * a,
    }


@dataclass
class IterationRecord:
    iteration: int
    data_complete: bool
    sup_b: float
    sup_u: float
    A_T: float
    H1: bool
    H2: bool
    max_div_u: float
    u_norm_scale: float
    distance: float | None = None

    @property
    def div_ok(self) -> bool:
        return self.max_div_u <= 1e-8 * (1.0 + self.u_norm_scale)


@dataclass
class SolverState:
    """Final iterate, per-iteration monitor records and norm traces."""

    cfg: SolverConfig
    bank: FilterBank
    times: np.ndarray
    u: np.ndarray
    b: np.ndarray
    u0: SpectralField
    b0: SpectralField
    E0: float
    a: float | None
    lifespan: LifespanReport | None
    records: list[IterationRecord] = field(default_factory=list)
    traces: list[dict[str, np.ndarray]] = field(default_factory=list)
    converged: bool = False
    message: str = ""

    @property
    def iterations(self) -> int:
        return len(self.records) - 1

    @property
    def distances(self) -> list[float]:
        return [r.distance for r in self.records if r.distance is not None]

    @property
    def contraction_ratios(self) -> list[float]:
        d = self.distances
        return [d[i + 1] / d[i] for i in range(len(d) - 1) if d[i] > 0]

    @property
    def all_bounds_hold(self) -> bool:
        return all(r.H1 and r.H2 for r in self.records)

    @property
    def max_divergence_ok(self) -> bool:
        return all(r.div_ok for r in self.records)

    def field_at(self, name: str, i: int) -> SpectralField:
        arr = {"u": self.u, "b": self.b}[name]
        return SpectralField(self.bank.grid, arr[i], zero_mean=True)

    def v_trace(self) -> np.ndarray:
        """``V(t) = int_0^t ||grad u||_{B^{d/p}_{p,1}}`` at each node (cumulative trapezoid)."""
        p = self.cfg.p
        d = self.bank.grid.d
        gu = _grad_coeffs(self.u, self.bank.grid).reshape(self.u.shape[:1] + (d * d,) + self.u.shape[2:])
        rate = weighted_sum(block_norms_array(gu, p, self.bank), BesovIndex(d / p, p, 1), self.bank)
        out = np.zeros_like(rate)
        out[1:] = np.cumsum(0.5 * (rate[1:] + rate[:-1]) * np.diff(self.times))
        return out

    def traces_csv(self) -> str:
        """Long-format CSV with columns ``iteration, t, norm_name, value``."""
        buf = io.StringIO()
        buf.write("iteration,t,norm_name,value\n")
        for it, tr in enumerate(self.traces):
            for name in TRACE_NAMES:
                for t, v in zip(self.times, tr[name]):
                    buf.write(f"{it},{float(t)!r},{name},{float(v)!r}\n")
        return buf.getvalue()

    def report(self) -> dict:
        return {
            "converged": self.converged,
            "message": self.message,
            "iterations": self.iterations,
            "T": self.cfg.T,
            "dt": self.cfg.dt,
            "p": self.cfg.p,
            "E0": self.E0,
            "a": self.a,
            "lifespan": None if self.lifespan is None else self.lifespan.to_dict(),
            "history": [
                {
                    "iteration": r.iteration,
                    "data_complete": r.data_complete,
                    "distance": r.distance,
                    "sup_b": r.sup_b,
                    "sup_u": r.sup_u,
                    "A_T": r.A_T,
                    "H1": r.H1,
                    "H2": r.H2,
                    "max_div_u": r.max_div_u,
                }
                for r in self.records
            ],
            "H1_all": all(r.H1 for r in self.records),
            "H2_all": self.a is not None and all(r.H2 for r in self.records),
            "divergence_ok": self.max_divergence_ok,
        }


def _data_for(iteration: int, f: SpectralField, bank: FilterBank, mollify: bool) -> tuple[SpectralField, bool]:
    """Data ``S_{n} f`` for the sweep producing iterate ``n + 1``; full data once ``n > j_max``."""
    n = iteration - 1
    if not mollify or n > bank.j_max:
        return f, True
    return low_cutoff(f, max(n, bank.j_min), bank), False


def _record(it, u, b, times, E0, a, cfg, bank, complete, distance):
    tr = _inst_norms(u, b, cfg.p, bank)
    v = verdicts_from_traces(tr, times, E0, np.inf if a is None else a)
    max_div = max(_max_divergence(u[i], bank.grid) for i in range(times.size))
    scale = float(np.max(np.sqrt(np.sum(np.abs(u) ** 2, axis=tuple(range(1, u.ndim))))))
    rec = IterationRecord(it, complete, v["sup_b"], v["sup_u"], v["A_T"], v["H1"], v["H2"] and a is not None,
                          max_div, scale, distance)
    return rec, tr


def _check_data(u0: SpectralField, b0: SpectralField):
    for name, f in (("u0", u0), ("b0", b0)):
        if not f.is_vector:
            raise ValueError(f"{name} must be a vector field")
        if np.any(f.coeffs[(slice(None),) + (0,) * f.grid.d] != 0):
            raise ValueError(f"{name} must have zero mean")
        scale = 1.0 + float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))
        if _max_divergence(f.coeffs, f.grid) > 1e-8 * scale:
            raise ValueError(f"{name} is not divergence-free")


def solve_mhd(u0: SpectralField, b0: SpectralField, cfg: SolverConfig, bank: FilterBank | None = None) -> SolverState:
    """Run Picard sweeps until successive iterates are within ``cfg.tol`` in the E_T metric.

    The lifespan report is computed from ``(u0, b0)`` with ``cfg.C1, cfg.C2``;
    a horizon beyond it is refused unless ``cfg.override_lifespan`` is set.
    Non-convergence at ``max_picard`` is reported on the returned state.

    Raises:
        LifespanExceededError: ``cfg.T`` beyond the lifespan without override.
        CFLError: step too large for some iterate's velocity.
    """
    if u0.grid != b0.grid:
        raise ValueError("u0 and b0 live on different grids")
    _check_data(u0, b0)
    bank = bank or build_filter_bank(u0.grid)
    grid = bank.grid
    try:
        rep = lifespan_estimate(u0, b0, cfg.C1, cfg.C2, cfg.p, bank)
    except UnresolvableTailError:
        if not cfg.override_lifespan:
            raise
        rep = None
    if rep is not None and cfg.T > rep.T and not cfg.override_lifespan:
        raise LifespanExceededError(f"T = {cfg.T:.6g} exceeds the lifespan {rep.T:.6g}")
    u_norm, b_norm = data_norms(u0, b0, cfg.p, bank)
    E0 = u_norm + b_norm
    a = None if rep is None else rep.a
    times = cfg.times
    decay = np.exp(-times.reshape((-1,) + (1,) * (grid.d + 1)) * grid.ksq)
    u = u0.coeffs[None] * decay
    b = b0.coeffs[None] * decay
    state = SolverState(cfg, bank, times, u, b, u0, b0, E0, a, rep)
    rec, tr = _record(0, u, b, times, E0, a, cfg, bank, True, None)
    state.records.append(rec)
    state.traces.append(tr)
    for it in range(1, cfg.max_picard + 1):
        u0_n, complete = _data_for(it, u0, bank, cfg.mollify)
        b0_n, _ = _data_for(it, b0, bank, cfg.mollify)
        u_new, b_new = picard_step(u, b, u0_n, b0_n, cfg)
        dist = et_distance(u_new - u, b_new - b, times, cfg.p, bank, cfg.weights)
        u, b = u_new, b_new
        rec, tr = _record(it, u, b, times, E0, a, cfg, bank, complete, dist)
        state.records.append(rec)
        state.traces.append(tr)
        state.u, state.b = u, b
        if complete and dist < cfg.tol:
            state.converged = True
            state.message = f"converged after {it} iterations (distance {dist:.3e})"
            return state
        if not np.isfinite(dist):
            state.message = f"iterates diverged at iteration {it}"
            return state
    state.message = f"no convergence within {cfg.max_picard} iterations (last distance {state.distances[-1]:.3e})"
    return state


# --- transport estimate monitor -----------------------------------------------


@dataclass(frozen=True)
class TransportReport:
    C2: float
    max_ratio: float
    ratios: np.ndarray
    suggested_C2: float

    def to_dict(self) -> dict:
        return {"C2": self.C2, "max_ratio": self.max_ratio, "suggested_C2": self.suggested_C2}


def _transport_parts(state: SolverState):
    p = state.cfg.p
    bank = state.bank
    d = bank.grid.d
    idx = BesovIndex(d / p, p, 1)
    b_norm = weighted_sum(block_norms_array(state.b, p, bank), idx, bank)
    g = _zero_mean(_directional_coeffs(state.b, state.u, bank.grid), d)
    g_norm = weighted_sum(block_norms_array(g, p, bank), idx, bank)
    return state.v_trace(), b_norm, g_norm


def _transport_ratios(C2, V, b_norm, g_norm, times):
    weight = np.exp(-C2 * V) * g_norm
    integral = np.zeros_like(V)
    integral[1:] = np.cumsum(0.5 * (weight[1:] + weight[:-1]) * np.diff(times))
    bound = np.exp(C2 * V) * (b_norm[0] + integral)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(bound > 0, b_norm / np.where(bound > 0, bound, 1.0), np.where(b_norm > 0, np.inf, 0.0))


def transport_bound_monitor(state: SolverState, C2: float = 1.0) -> TransportReport:
    """Ratio of ``||b(t)||_{B^{d/p}_{p,1}}`` to its exponential transport bound at each node.

    ``suggested_C2`` is the smallest constant (by bisection, 1e-6 relative)
    making every ratio at most one, computed on the same run.
    """
    V, b_norm, g_norm = _transport_parts(state)
    ratios = _transport_ratios(C2, V, b_norm, g_norm, state.times)
    lo, hi = 0.0, 1.0
    if np.max(_transport_ratios(0.0, V, b_norm, g_norm, state.times)) <= 1.0:
        hi = 0.0
    else:
        while np.max(_transport_ratios(hi, V, b_norm, g_norm, state.times)) > 1.0 and hi < 1e12:
            lo, hi = hi, hi * 2.0
        while hi - lo > 1e-6 * hi:
            mid = 0.5 * (lo + hi)
            if np.max(_transport_ratios(mid, V, b_norm, g_norm, state.times)) > 1.0:
                lo = mid
            else:
                hi = mid
    return TransportReport(C2, float(np.max(ratios)), ratios, hi)


# --- continuous dependence ------------------------------------------------------


@dataclass(frozen=True)
class DependenceRow:
    eps: float
    dist_u: float
    dist_b: float
    converged: bool
    lifespan: float | None

    @property
    def combined(self) -> float:
        return self.dist_u + self.dist_b

    def to_dict(self) -> dict:
        return {"eps": self.eps, "dist_u": self.dist_u, "dist_b": self.dist_b, "combined": self.combined,
                "converged": self.converged, "lifespan": self.lifespan}


def perturbation_pair(u0: SpectralField, b0: SpectralField, seed: int, p: float, bank: FilterBank):
    """Seeded divergence-free directions scaled to the norms of the base data."""
    v = sample_divergence_free(u0.grid, seed)
    w = sample_divergence_free(u0.grid, seed + 1)
    un, bn = data_norms(u0, b0, p, bank)
    vn, wn = data_norms(v, w, p, bank)
    return v * (un / vn if un > 0 else 1.0 / vn), w * (bn / wn if bn > 0 else 1.0 / wn)


def continuous_dependence_experiment(
    u0: SpectralField,
    b0: SpectralField,
    perturbation_amplitudes,
    seed: int,
    cfg: SolverConfig,
    steps: int | None = None,
    threads: int = 1,
) -> tuple[list[DependenceRow], float]:
    """Distances between base and perturbed solutions on a common horizon.

    The horizon is 95% of the base lifespan. ``steps`` sets the number of
    time steps on it (by default the count implied by ``cfg.dt``). Returns the
    table and the horizon.
    """
    eps_list = [float(e) for e in perturbation_amplitudes]
    if any(e < 0 for e in eps_list):
        raise ValueError("perturbation amplitudes must be nonnegative")
    bank = build_filter_bank(u0.grid)
    rep = lifespan_estimate(u0, b0, cfg.C1, cfg.C2, cfg.p, bank)
    horizon = 0.95 * rep.T
    nsteps = steps if steps is not None else max(1, int(round(horizon / cfg.dt)))
    run_cfg = replace(cfg, T=horizon, dt=horizon / nsteps, override_lifespan=True)
    v, w = perturbation_pair(u0, b0, seed, cfg.p, bank)
    base = solve_mhd(u0, b0, run_cfg, bank)

    def row(eps: float) -> DependenceRow:
        u_e, b_e = u0 + v * eps, b0 + w * eps
        try:
            T_e = lifespan_estimate(u_e, b_e, cfg.C1, cfg.C2, cfg.p, bank).T
        except UnresolvableTailError:
            T_e = None
        st = solve_mhd(u_e, b_e, run_cfg, bank)
        n = _inst_norms(st.u - base.u, st.b - base.b, cfg.p, bank)
        du = float(np.max(n["u_sup_norm"])) + _trap(n["u_l1_norm"], base.times)
        db = float(np.max(n["b_sup_norm"]))
        return DependenceRow(eps, du, db, st.converged and base.converged, T_e)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, eps_list))
    else:
        rows = [row(e) for e in eps_list]
    return rows, horizon
