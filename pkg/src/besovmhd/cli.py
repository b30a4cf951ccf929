"""Command-line entry point: ``besovmhd <subcommand> [options]``.

Every subcommand builds an :class:`ExperimentManifest` and hands it to
:func:`run_manifest`, which writes a JSON report (``schema_version``,
``all_checks_passed``, ``checks``) and returns 0 iff all asserted checks pass.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import math
import sys
import threading
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as fio
from .besov import BesovIndex, besov_norm
from .corpus import DataSpec, field_corpus, small_branch_corpus
from .dyadic import build_filter_bank, low_cutoff, phi
from .fields import Grid, SpectralField, mode
from .heat import duhamel_solve, heat_propagate, smoothing_ratio
from .lifespan import LARGE, lifespan_convergence, lifespan_estimate
from .osgood import (
    OsgoodModulus,
    comparison_corpus,
    comparison_slack,
    gronwall_bound,
    integrate_comparison,
    log_osgood_bound,
    osgood_bound,
)
from .solver import SolverConfig, continuous_dependence_experiment, solve_mhd, transport_bound_monitor

__all__ = ["KINDS", "ExperimentManifest", "run_manifest", "calibrate_constants", "build_parser", "main"]

KINDS = (
    "verify-filters",
    "heat-check",
    "lifespan",
    "lifespan-seq",
    "solve",
    "cont-dep",
    "osgood-demo",
    "calibrate-constants",
)

_write_lock = threading.Lock()


class ConfigError(ValueError):
    """Invalid run configuration; reported before any output is written."""


@dataclass
class ExperimentManifest:
    """One experiment: kind, input files, numeric parameters and output paths."""

    kind: str
    inputs: dict[str, str] = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    timestamp: bool = True
    plot: bool = False
    threads: int = 1

    def validate(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown experiment kind {self.kind!r}")
        for name, path in self.inputs.items():
            if path and not Path(path).exists():
                raise ConfigError(f"input {name} = {path} does not exist")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")


# --- helpers -------------------------------------------------------------------


def _grid(params) -> Grid:
    return Grid(int(params.get("dim", 2)), int(params.get("grid", 64)), float(params.get("L", 2 * math.pi)))


def _load_pair(m: ExperimentManifest, grid: Grid | None = None):
    """Data from ``--snapshot-in`` (records ``u``, ``b``) or from a seeded recipe."""
    path = m.inputs.get("snapshot_in")
    if path:
        rec = fio.read_snapshot(path)
        if "u" not in rec:
            raise ConfigError(f"{path}: snapshot needs a record named 'u'")
        u = rec["u"]
        b = rec.get("b", SpectralField.zeros(u.grid, u.components))
        return u, b
    grid = grid or _grid(m.params)
    p = m.params
    spec = DataSpec(int(p.get("seed", 0)), float(p.get("u_norm", 0.04)), float(p.get("b_norm", 0.1)),
                    float(p.get("u_decay", 3.0)), float(p.get("b_decay", 3.5)))
    return spec.build(grid)


def _write(path, text: str):
    with _write_lock:
        fio.write_text(path, text)


def _plot(m: ExperimentManifest, series, title, logy=False):
    if not m.plot or not series:
        return
    out = m.outputs.get("plot_out")
    if not out:
        rep = m.outputs.get("report_out")
        out = str(Path(rep).with_suffix(".svg")) if rep else f"besovmhd_{m.kind}.svg"
    _write(out, fio.svg_line_chart(series, title, logy=logy))


# --- experiments ----------------------------------------------------------------


def _verify_filters(m: ExperimentManifest) -> dict:
    grid = _grid(m.params)
    t0 = time.perf_counter()
    bank = build_filter_bank(grid)
    kmag = grid.kmag
    lo, hi = bank.safe_range
    safe = (kmag >= lo) & (kmag <= hi)
    dev = float(np.max(np.abs(bank.partition_sum()[safe] - 1.0)))
    sq = bank.square_sum()[safe]
    ortho = all(
        not np.any(bank.phi_table[i] * bank.phi_table[k])
        for i in range(bank.nbands) for k in range(bank.nbands) if abs(i - k) >= 2
    )
    recon = []
    for f in field_corpus(grid, 10, int(m.params.get("seed", 0))):
        rebuilt = low_cutoff(f, bank.j_max + 1, bank)
        recon.append(float(np.sqrt(np.sum(np.abs(rebuilt.coeffs - f.coeffs) ** 2) / np.sum(np.abs(f.coeffs) ** 2))))
    elapsed = time.perf_counter() - t0
    if m.outputs.get("dump_phi"):
        _write(m.outputs["dump_phi"], bank.phi_csv())
    r = np.linspace(0.0, 2.0 * hi, 200)
    _plot(m, {f"j={j}": (r, phi(2.0**-j * r)) for j in bank.js}, "dyadic multipliers")
    return {
        "band": [bank.j_min, bank.j_max],
        "safe_range": list(bank.safe_range),
        "max_partition_deviation": dev,
        "square_sum_min": float(sq.min()),
        "square_sum_max": float(sq.max()),
        "max_reconstruction_error": max(recon),
        "elapsed_seconds": elapsed,
        "checks": {
            "partition_of_unity": dev < 1e-10,
            "square_sum_bounds": bool(sq.min() >= 0.5 and sq.max() <= 1.0 + 1e-15),
            "quasi_orthogonality": ortho,
            "reconstruction": max(recon) <= 1e-10,
        },
    }


def _heat_check(m: ExperimentManifest) -> dict:
    grid = _grid(m.params)
    bank = build_filter_bank(grid)
    T = float(m.params.get("T", 1.0))
    dt = float(m.params.get("dt", 0.01))
    f = mode(grid, (2, 0))
    t = 0.25
    decay_err = float(np.max(np.abs(heat_propagate(f, t).coeffs - np.exp(-4 * t) * f.coeffs)))
    g = mode(grid, (1, 0))
    traj = duhamel_solve(SpectralField.zeros(grid), lambda s: g, 1.0, dt)
    duh_err = float(np.max(np.abs(traj.coeffs[-1] - (1 - math.exp(-1.0)) * g.coeffs)))
    ratios = []
    seed = int(m.params.get("seed", 0))
    forcing_fields = field_corpus(grid, 10, seed + 500)
    for u0, w in zip(field_corpus(grid, 10, seed), forcing_fields):
        ratios.append(smoothing_ratio(u0, lambda s, w=w: w * math.cos(3 * s), T, dt, bank).ratio_l1)
    spread = max(ratios) / min(ratios)
    _plot(m, {"L1 smoothing ratio": (list(range(len(ratios))), ratios)}, "measured smoothing constant")
    return {
        "mode_decay_error": decay_err,
        "duhamel_error": duh_err,
        "smoothing_ratios": ratios,
        "smoothing_spread": spread,
        "checks": {"mode_decay": decay_err <= 1e-12, "duhamel_closed_form": duh_err <= 1e-10,
                   "smoothing_spread": spread < 4.0},
    }


def _lifespan(m: ExperimentManifest) -> dict:
    u, b = _load_pair(m)
    p = m.params
    rep = lifespan_estimate(u, b, float(p.get("c1", 1.0)), float(p.get("c2", 1.0)), float(p.get("p", 2.0)))
    ok_T = rep.T > 0
    return {"lifespan": rep.to_dict(), "checks": {"positive_lifespan": ok_T}}


def _read_seq_manifest(path):
    seq, limit = [], None
    base = Path(path).parent
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("limit:"):
            limit = (base / line[6:].strip()).as_posix()
        else:
            seq.append((base / line).as_posix())
    if limit is None:
        raise ConfigError(f"{path}: manifest needs a 'limit: FILE' line")
    return seq, limit


def _lifespan_seq(m: ExperimentManifest) -> dict:
    p = m.params
    c1, c2, pp = float(p.get("c1", 1.0)), float(p.get("c2", 1.0)), float(p.get("p", 2.0))
    if m.inputs.get("manifest"):
        paths, lim = _read_seq_manifest(m.inputs["manifest"])
        rec = fio.read_snapshot(lim)
        u, b = rec["u"], rec.get("b", SpectralField.zeros(rec["u"].grid, rec["u"].components))
        us, bs = [], []
        for q in paths:
            r = fio.read_snapshot(q)
            us.append(r["u"])
            bs.append(r.get("b", SpectralField.zeros(u.grid, u.components)))
        idx = list(range(len(us)))
    else:
        u, b = _load_pair(m)
        bank = build_filter_bank(u.grid)
        idx = list(range(bank.j_min + 1, bank.j_max + 2))
        us = [low_cutoff(u, n, bank) for n in idx]
        bs = [low_cutoff(b, n, bank) for n in idx]
    tab = lifespan_convergence(us, bs, (u, b), c1, c2, pp, indices=idx)
    if m.outputs.get("table_out"):
        _write(m.outputs["table_out"], tab.to_csv())
    else:
        sys.stdout.write(tab.to_csv())
    _plot(m, {"|T_n - T|": (list(tab.indices), list(tab.gaps))}, "lifespan gap")
    return {"limit": tab.limit.to_dict(), "rows": [
        {"n": n, "T_n": t, "gap": g, "j0_n": j} for n, t, g, j in zip(tab.indices, tab.lifespans, tab.gaps, tab.j0s)
    ], "checks": tab.checks(tol=float(p.get("gap_tol", 0.0)) if "gap_tol" in p else None)}


def _solver_cfg(m: ExperimentManifest, u, b) -> SolverConfig:
    p = m.params
    C1, C2, pp = float(p.get("c1", 1.0)), float(p.get("c2", 1.0)), float(p.get("p", 2.0))
    T = p.get("T")
    if T is None:
        T = lifespan_estimate(u, b, C1, C2, pp).T
        if math.isinf(T):
            T = 1.0
    T = float(T)
    if p.get("dt") is not None:
        dt = float(p["dt"])
    else:
        dt = T / int(p.get("steps", 64))
    if dt > T:
        raise ConfigError(f"dt = {dt} exceeds T = {T}")
    try:
        return SolverConfig(T=T, dt=dt, max_picard=int(p.get("max_picard", 25)), tol=float(p.get("tol", 1e-8)),
                            p=pp, C1=C1, C2=C2, override_lifespan=bool(p.get("override_lifespan", False)),
                            mollify=not bool(p.get("no_mollify", False)))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _solve(m: ExperimentManifest) -> dict:
    u, b = _load_pair(m)
    cfg = _solver_cfg(m, u, b)
    st = solve_mhd(u, b, cfg)
    if m.outputs.get("traces_out"):
        _write(m.outputs["traces_out"], st.traces_csv())
    out = st.report()
    tm = transport_bound_monitor(st, cfg.C2) if st.converged else None
    out["transport_monitor"] = None if tm is None else tm.to_dict()
    out["contraction_ratios"] = st.contraction_ratios
    _plot(m, {"E_T distance": (list(range(1, len(st.distances) + 1)), st.distances)}, "Picard distances", logy=True)
    out["checks"] = {
        "converged": st.converged,
        "H1": out["H1_all"],
        "H2": out["H2_all"],
        "divergence": st.max_divergence_ok,
    }
    return out


def _cont_dep(m: ExperimentManifest) -> dict:
    u, b = _load_pair(m)
    p = m.params
    eps = [float(e) for e in str(p.get("eps", "1e-1,1e-2,1e-3,1e-4")).split(",") if e.strip()]
    base_T = lifespan_estimate(u, b, float(p.get("c1", 1.0)), float(p.get("c2", 1.0)), float(p.get("p", 2.0))).T
    m.params.setdefault("T", base_T)
    cfg = _solver_cfg(m, u, b)
    rows, horizon = continuous_dependence_experiment(u, b, eps, int(p.get("seed", 0)), cfg,
                                                     steps=int(p.get("steps", 64)), threads=m.threads)
    comb = [r.combined for r in rows]
    order = np.argsort(eps)[::-1]
    dec = all(comb[order[i + 1]] < comb[order[i]] for i in range(len(order) - 1))
    _plot(m, {"combined distance": ([eps[i] for i in order], [comb[i] for i in order])}, "distance vs eps", logy=True)
    return {
        "horizon": horizon,
        "rows": [r.to_dict() for r in rows],
        "ratio_over_eps": [r.combined / r.eps if r.eps > 0 else None for r in rows],
        "checks": {"all_converged": all(r.converged for r in rows), "strictly_decreasing": dec},
    }


def _osgood_demo(m: ExperimentManifest) -> dict:
    count = int(m.params.get("count", 20))
    seed = int(m.params.get("seed", 0))
    lines = ["rho0,gamma_int,modulus,bound,ode,slack"]
    g_err = []
    ts = np.linspace(0, 1, 11)
    lin = comparison_corpus(seed, count, kind="linear")
    for tr in lin:
        t, rho = integrate_comparison(tr, 11)
        for tt, r in zip(t, rho):
            bd = gronwall_bound(tr.rho0, tr.gamma_int(tt))
            g_err.append(abs(r - bd) / bd)
        G = tr.gamma_int(1.0)
        lines.append(f"{tr.rho0!r},{G!r},linear,{gronwall_bound(tr.rho0, G)!r},{rho[-1]!r},{gronwall_bound(tr.rho0, G) - rho[-1]!r}")
    log_slack, sound_slack = [], []
    for tr in comparison_corpus(seed, count):
        c = tr.mod.c
        log_slack.append(comparison_slack(tr, lambda r, G: log_osgood_bound(r, G, c), 11))
        sound_slack.append(comparison_slack(tr, lambda r, G: osgood_bound(r, G, tr.mod), 11))
        G = tr.gamma_int(1.0)
        _, rho = integrate_comparison(tr, 2)
        lines.append(f"{tr.rho0!r},{G!r},log(c={c!r}),{log_osgood_bound(tr.rho0, G, c)!r},{rho[-1]!r},"
                     f"{log_osgood_bound(tr.rho0, G, c) - rho[-1]!r}")
    csv = "\n".join(lines) + "\n"
    if m.outputs.get("table_out"):
        _write(m.outputs["table_out"], csv)
    else:
        sys.stdout.write(csv)
    limit_err = abs(log_osgood_bound(0.01, 2.0, 1e6) - gronwall_bound(0.01, 2.0)) / gronwall_bound(0.01, 2.0)
    return {
        "gronwall_max_rel_error": max(g_err),
        "log_formula_min_slack": min(log_slack),
        "log_formula_dominates": min(log_slack) >= -1e-8,
        "inverted_bound_min_slack": min(sound_slack),
        "large_c_limit_rel_error": limit_err,
        "checks": {
            "gronwall_matches_ode": max(g_err) <= 1e-9,
            "inverted_bound_dominates": min(sound_slack) >= -1e-8,
            "large_c_limit": limit_err <= 1e-4,
        },
    }


def calibrate_constants(specs, grid: Grid | None = None, steps: int = 32, floor=(1.0, 1.0),
                        headroom: float = 1.1, threads: int = 1) -> dict:
    """Suggested ``(C1, C2)`` from measured ratios over a corpus of data recipes.

    ``C1`` covers the heat smoothing inequality (all three left-hand norms)
    for each ``u0`` with forcing ``cos(3t) b0``; ``C2`` is the smallest
    transport constant that the solver run on each datum needs. Both get 10%
    headroom and never drop below ``floor``.

    Raises:
        ValueError: if the corpus is empty.
    """
    specs = list(specs)
    if not specs:
        raise ValueError("corpus empty")
    grid = grid or Grid()
    bank = build_filter_bank(grid)

    def one(spec):
        u, b = spec.build(grid, bank)
        try:
            sm = smoothing_ratio(u, lambda s: b * math.cos(3 * s), 1.0, 1 / 64, bank).worst
        except ZeroDivisionError:
            sm = None
        c2 = None
        if besov_norm(b, BesovIndex(grid.d / 2, 2, 1), bank) > 0 and besov_norm(u, BesovIndex(grid.d / 2 - 1, 2, 1), bank) > 0:
            rep = lifespan_estimate(u, b, 1.0, 1.0, 2.0, bank)
            st = solve_mhd(u, b, SolverConfig.with_steps(rep.T, steps), bank)
            c2 = transport_bound_monitor(st).suggested_C2
        return sm, c2

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            res = list(pool.map(one, specs))
    else:
        res = [one(s) for s in specs]
    c1s = [r[0] for r in res if r[0] is not None]
    c2s = [r[1] for r in res if r[1] is not None]
    if not c1s and not c2s:
        warnings.warn("degenerate corpus: returning floor constants", RuntimeWarning, stacklevel=2)
    return {
        "C1": max([floor[0]] + [headroom * v for v in c1s]),
        "C2": max([floor[1]] + [headroom * v for v in c2s]),
        "measured_C1": c1s,
        "measured_C2": c2s,
        "degenerate": not c1s and not c2s,
    }


def _calibrate(m: ExperimentManifest) -> dict:
    p = m.params
    grid = _grid(p)
    if p.get("corpus", "standard") == "zero":
        specs = [DataSpec(0, 0.0, 0.0)]
    else:
        specs = small_branch_corpus(int(p.get("count", 10)), int(p.get("seed", 0)))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        res = calibrate_constants(specs, grid, int(p.get("steps", 32)), threads=m.threads)
    res["warnings"] = [str(w.message) for w in caught]
    res["checks"] = {"finite_constants": math.isfinite(res["C1"]) and math.isfinite(res["C2"])}
    return res


_HANDLERS = {
    "verify-filters": _verify_filters,
    "heat-check": _heat_check,
    "lifespan": _lifespan,
    "lifespan-seq": _lifespan_seq,
    "solve": _solve,
    "cont-dep": _cont_dep,
    "osgood-demo": _osgood_demo,
    "calibrate-constants": _calibrate,
}


def run_manifest(manifest: ExperimentManifest) -> int:
    """Run one experiment and write its report; 0 iff every asserted check passed.

    Exit codes: 0 pass, 1 a check failed, 2 configuration error (nothing
    written), 3 module error.
    """
    try:
        manifest.validate()
        body = _HANDLERS[manifest.kind](manifest)
    except ConfigError as exc:
        print(f"besovmhd: config error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # module errors propagate as a nonzero exit
        print(f"besovmhd: {manifest.kind} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3
    checks = body.pop("checks", {})
    report = {
        "schema_version": fio.SCHEMA_VERSION,
        "kind": manifest.kind,
        "params": manifest.params,
        "checks": checks,
        "all_checks_passed": all(bool(v) for v in checks.values()),
        **body,
    }
    if manifest.timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat()
    out = manifest.outputs.get("report_out")
    if out:
        with _write_lock:
            fio.write_json(out, report)
    else:
        import json

        sys.stdout.write(json.dumps(fio._clean(report), indent=2, sort_keys=True) + "\n")
    return 0 if report["all_checks_passed"] else 1


# --- argument parsing --------------------------------------------------------------

_INPUTS = ("snapshot_in", "manifest")
_OUTPUTS = ("report_out", "traces_out", "table_out", "dump_phi", "plot_out")
_GLOBAL = ("config", "plot", "no_timestamp", "threads", "command")


def _common(sp, grid=True, data=False, out=True):
    if grid:
        sp.add_argument("--grid", type=int, default=64, help="points per axis")
        sp.add_argument("--dim", type=int, default=2)
        sp.add_argument("--L", type=float, default=2 * math.pi, help="period")
    if data:
        sp.add_argument("--snapshot-in", help="snapshot with records 'u' and 'b'")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--u-norm", type=float, default=0.04)
        sp.add_argument("--b-norm", type=float, default=0.1)
        sp.add_argument("--u-decay", type=float, default=3.0)
        sp.add_argument("--b-decay", type=float, default=3.5)
        sp.add_argument("--c1", type=float, default=1.0)
        sp.add_argument("--c2", type=float, default=1.0)
        sp.add_argument("--p", type=float, default=2.0)
    if out:
        sp.add_argument("--report-out", help="JSON report path (default: stdout)")
        sp.add_argument("--plot-out", help="SVG path used with --plot")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besovmhd", description=__doc__.splitlines()[0], allow_abbrev=False)
    ap.add_argument("--config", help="flat key = value file; command-line flags win")
    ap.add_argument("--plot", action="store_true", help="also write an SVG line chart")
    ap.add_argument("--no-timestamp", action="store_true", help="omit the timestamp for byte-stable reports")
    ap.add_argument("--threads", type=int, default=1)
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("verify-filters", allow_abbrev=False, help="partition of unity, orthogonality, reconstruction")
    _common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--dump-phi", help="write distinct (j, |k|, phi) rows as CSV")

    sp = sub.add_parser("heat-check", allow_abbrev=False, help="heat multiplier, Duhamel closed form, smoothing ratios")
    _common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--T", type=float, default=1.0)
    sp.add_argument("--dt", type=float, default=0.01)

    sp = sub.add_parser("lifespan", allow_abbrev=False, help="lifespan report for one data pair")
    _common(sp, data=True)

    sp = sub.add_parser("lifespan-seq", allow_abbrev=False, help="lifespans along a converging data sequence")
    _common(sp, data=True)
    sp.add_argument("--manifest", help="text file: snapshot paths, plus 'limit: FILE'")
    sp.add_argument("--table-out", help="CSV path (default: stdout)")
    sp.add_argument("--gap-tol", type=float)

    for name in ("solve", "cont-dep"):
        sp = sub.add_parser(name, allow_abbrev=False, help="Picard solve" if name == "solve" else "continuous dependence table")
        _common(sp, data=True)
        sp.add_argument("--T", type=float, help="horizon (default: the lifespan)")
        sp.add_argument("--dt", type=float)
        sp.add_argument("--steps", type=int, default=64, help="steps when --dt is not given")
        sp.add_argument("--tol", type=float, default=1e-8)
        sp.add_argument("--max-picard", type=int, default=25)
        sp.add_argument("--override-lifespan", action="store_true")
        sp.add_argument("--no-mollify", action="store_true", help="use the full data in every sweep")
        sp.add_argument("--traces-out", help="CSV of (iteration, t, norm_name, value)")
        if name == "cont-dep":
            sp.add_argument("--eps", default="1e-1,1e-2,1e-3,1e-4", help="comma-separated amplitudes")

    sp = sub.add_parser("osgood-demo", allow_abbrev=False, help="Osgood bounds against the comparison ODE")
    _common(sp, grid=False)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=20)
    sp.add_argument("--table-out", help="CSV path (default: stdout)")

    sp = sub.add_parser("calibrate-constants", allow_abbrev=False, help="suggest C1, C2 from measured ratios")
    _common(sp)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=10)
    sp.add_argument("--steps", type=int, default=32)
    sp.add_argument("--corpus", choices=("standard", "zero"), default="standard")
    return ap


def _read_config(path) -> dict[str, str]:
    out = {}
    for n, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected key = value")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def _apply_config(parser: argparse.ArgumentParser, argv, cfg: dict[str, str]):
    """Config values become subparser defaults, so explicit flags still win."""
    pre = parser.parse_args(argv)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction)).choices[pre.command]
    known = {a.dest: a for a in sub._actions} | {a.dest: a for a in parser._actions}
    for k, v in cfg.items():
        if k not in known:
            raise ConfigError(f"unknown config key {k!r} for {pre.command}")
        act = known[k]
        if act.nargs == 0:
            val = v.lower() in ("1", "true", "yes", "on")
        elif act.type is not None:
            val = act.type(v)
        else:
            val = v
        target = sub if k in {a.dest for a in sub._actions} else parser
        target.set_defaults(**{k: val})
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parser.parse_args(argv)
        if args.config:
            args = _apply_config(parser, argv, _read_config(args.config))
    except ConfigError as exc:
        print(f"besovmhd: config error: {exc}", file=sys.stderr)
        return 2
    ns = vars(args)
    man = ExperimentManifest(
        kind=args.command,
        inputs={k: ns[k] for k in _INPUTS if ns.get(k)},
        params={k: v for k, v in ns.items() if k not in _INPUTS + _OUTPUTS + _GLOBAL and v is not None},
        outputs={k: ns[k] for k in _OUTPUTS if ns.get(k)},
        timestamp=not args.no_timestamp,
        plot=args.plot,
        threads=args.threads,
    )
    return run_manifest(man)


if __name__ == "__main__":
    sys.exit(main())
