"""Explicit lifespan of the Picard scheme and its stability under data convergence."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .besov import BesovIndex, besov_norm, smallest_j0, tail_sum
from .dyadic import FilterBank
from .fields import SpectralField, _max_divergence

__all__ = [
    "SMALL",
    "LARGE",
    "EstimateConstants",
    "LifespanReport",
    "derive_constants",
    "select_branch",
    "small_time",
    "lifespan_from_norms",
    "lifespan_estimate",
    "data_norms",
    "j0n_sequence",
    "ConvergenceTable",
    "lifespan_convergence",
]

SMALL = "small_data"
LARGE = "large_data"


@dataclass(frozen=True)
class EstimateConstants:
    """Constants of the uniform bounds.

    ``c`` caps the smallness parameter so that ``c <= 1/12``,
    ``exp(C2 c) <= 3/2`` and ``4 c C1 <= 1/2``; ``c_bar`` is the branch
    threshold on ``||u0||``.
    """

    C1: float
    C2: float
    c: float
    c_bar: float
    a: float
    branch: str

    def __post_init__(self):
        if not (self.C1 > 0 and self.C2 > 0):
            raise ValueError("C1 and C2 must be positive")
        if self.branch not in (SMALL, LARGE):
            raise ValueError(f"unknown branch {self.branch!r}")


def derive_constants(C1: float, C2: float, E0: float, u_norm: float | None = None) -> EstimateConstants:
    """Constants ``c``, ``c_bar`` and ``a`` for data of size ``E0``.

    ``u_norm`` is ``||u0||_{B^{d/p-1}_{p,1}}`` and selects the branch; it
    defaults to ``E0``.
    """
    if not (C1 > 0 and C2 > 0):
        raise ValueError("C1 and C2 must be positive")
    if E0 < 0:
        raise ValueError("E0 must be nonnegative")
    c = min(1.0 / 12.0, math.log(1.5) / C2, 1.0 / (8.0 * C1))
    c_bar = min(1.0 / (4.0 * C1), c)
    branch = select_branch(E0 if u_norm is None else u_norm, c_bar)
    if branch == SMALL:
        a = min(math.sqrt(E0 / (4.0 * C1)), c)
    else:
        a = min(math.sqrt(c_bar / (4.0 * C1)), c)
    # construction by min makes these hold; keep the check so a regression is loud
    assert c <= 1 / 12 and math.exp(C2 * c) <= 1.5 * (1 + 1e-15) and 4 * c * C1 <= 0.5 * (1 + 1e-15)
    return EstimateConstants(C1, C2, c, c_bar, a, branch)


def select_branch(u_norm: float, c_bar: float) -> str:
    """``small_data`` iff ``u_norm <= c_bar``."""
    return SMALL if u_norm <= c_bar else LARGE


def small_time(a: float, C1: float, E0: float) -> float:
    """``T0 = min(a / (72 C1 E0^2), 1 / (36 C1 E0))``."""
    return min(a / (72.0 * C1 * E0 * E0), 1.0 / (36.0 * C1 * E0))


@dataclass(frozen=True)
class LifespanReport:
    E0: float
    u_norm: float
    b_norm: float
    C1: float
    C2: float
    c: float
    c_bar: float
    a: float
    branch: str
    T0: float
    T: float
    j0: int | None = None
    T1: float | None = None
    T2: float | None = None
    tail_at_j0: float | None = None

    def to_dict(self) -> dict:
        out = asdict(self)
        for key, val in out.items():
            if isinstance(val, float) and math.isinf(val):
                out[key] = "inf"
        return out


def lifespan_from_norms(
    u_norm: float,
    b_norm: float,
    C1: float,
    C2: float,
    j0_of=None,
    tail_of=None,
) -> LifespanReport:
    """Lifespan from the two data norms.

    Args:
        u_norm: ``||u0||_{B^{d/p-1}_{p,1}}``.
        b_norm: ``||b0||_{B^{d/p}_{p,1}}``.
        C1, C2: smoothing and transport constants.
        j0_of: ``threshold -> j0`` resolver, needed on the large-data branch.
        tail_of: optional ``j0 -> tail`` evaluator recorded in the report.
    """
    E0 = u_norm + b_norm
    if E0 == 0:
        k = derive_constants(C1, C2, 0.0)
        return LifespanReport(0.0, 0.0, 0.0, C1, C2, k.c, k.c_bar, k.a, SMALL, math.inf, math.inf)
    k = derive_constants(C1, C2, E0, u_norm)
    T0 = small_time(k.a, C1, E0)
    common = dict(E0=E0, u_norm=u_norm, b_norm=b_norm, C1=C1, C2=C2, c=k.c, c_bar=k.c_bar, a=k.a,
                  branch=k.branch, T0=T0)
    if k.branch == SMALL:
        return LifespanReport(T=T0, **common)
    if j0_of is None:
        raise ValueError("large-data branch needs a tail index resolver")
    j0 = int(j0_of(k.a / 4.0))
    scale = 4.0**j0
    T1 = (k.a / 4.0) / (scale * u_norm)
    T2 = (k.a / 4.0) ** 2 / (scale * u_norm**2)
    tail = None if tail_of is None else float(tail_of(j0))
    return LifespanReport(T=min(T0, T1, T2), j0=j0, T1=T1, T2=T2, tail_at_j0=tail, **common)


def data_norms(u0: SpectralField, b0: SpectralField, p: float, bank: FilterBank) -> tuple[float, float]:
    """``(||u0||_{B^{d/p-1}_{p,1}}, ||b0||_{B^{d/p}_{p,1}})``."""
    d = bank.grid.d
    return (besov_norm(u0, BesovIndex(d / p - 1, p, 1), bank),
            besov_norm(b0, BesovIndex(d / p, p, 1), bank))


def _check_data(u0: SpectralField, b0: SpectralField):
    for name, f in (("u0", u0), ("b0", b0)):
        if not f.is_vector:
            raise ValueError(f"{name} must be a vector field")
        if np.any(f.coeffs[(slice(None),) + (0,) * f.grid.d] != 0):
            raise ValueError(f"{name} must have zero mean")
        scale = 1.0 + float(np.sqrt(np.sum(np.abs(f.coeffs) ** 2)))
        if _max_divergence(f.coeffs, f.grid) > 1e-8 * scale:
            raise ValueError(f"{name} is not divergence-free")


def lifespan_estimate(
    u0: SpectralField,
    b0: SpectralField,
    C1: float = 1.0,
    C2: float = 1.0,
    p: float = 2.0,
    bank: FilterBank | None = None,
    j0: int | None = None,
) -> LifespanReport:
    """Guaranteed horizon for data ``(u0, b0)``.

    On the large-data branch ``j0`` is the smallest tail index with tail
    below ``a/4`` unless an explicit ``j0`` is supplied (used by the
    sequence construction, which picks its own admissible index).

    Raises:
        UnresolvableTailError: if no in-band index meets the threshold.
    """
    if bank is None:
        from .dyadic import build_filter_bank

        bank = build_filter_bank(u0.grid)
    _check_data(u0, b0)
    u_norm, b_norm = data_norms(u0, b0, p, bank)

    def resolve(threshold):
        if j0 is not None:
            return j0
        return smallest_j0(u0, threshold, p, bank)

    return lifespan_from_norms(u_norm, b_norm, C1, C2, resolve, lambda j: tail_sum(u0, j, p, bank))


def _norm_u(f: SpectralField, p: float, bank: FilterBank) -> float:
    return besov_norm(f, BesovIndex(bank.grid.d / p - 1, p, 1), bank)


def j0n_sequence(
    data_seq: Sequence[SpectralField],
    u0_limit: SpectralField,
    a: float,
    p: float,
    bank: FilterBank,
) -> list[int]:
    """Admissible tail indices ``j0^n`` for data converging to ``u0_limit``.

    With ``eps = a/8``, ``jbar^m`` is the smallest index whose limit tail is
    below ``a/4 - eps/m``. ``N_{eps/m}`` is the first index from which every
    later distance ``||u0^n - u0||`` is at most ``eps/m``, and ``j0^n`` is
    ``jbar^m`` on ``N_{eps/m} <= n < N_{eps/(m+1)}``. Indices before
    ``N_eps`` fall back to the datum's own smallest admissible index.

    Raises:
        ValueError: if the last distance exceeds ``eps`` (no convergence seen).
        UnresolvableTailError: if a threshold cannot be met on the grid.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    if not data_seq:
        return []
    eps = a / 8.0
    quarter = a / 4.0
    dists = np.array([_norm_u(f - u0_limit, p, bank) for f in data_seq])
    if dists[-1] > eps:
        raise ValueError(
            f"sequence not converging within the prefix: last distance {dists[-1]:.3e} > a/8 = {eps:.3e}"
        )
    # suffix maxima realize "for all n >= N" from a finite prefix
    suffix = np.maximum.accumulate(dists[::-1])[::-1]
    j0 = smallest_j0(u0_limit, quarter, p, bank)
    gap = quarter - tail_sum(u0_limit, j0, p, bank)
    # jbar^m == j0 once eps/m < gap, so larger m never change the answer
    m_cap = int(math.floor(eps / gap)) + 1
    cache: dict[int, int] = {}

    def jbar(m: int) -> int:
        if m not in cache:
            cache[m] = smallest_j0(u0_limit, quarter - eps / m, p, bank)
        return cache[m]

    out = []
    for f, s in zip(data_seq, suffix):
        if s > eps:
            out.append(smallest_j0(f, quarter, p, bank))
            continue
        m = m_cap if s == 0 else min(m_cap, int(math.floor(eps / s)))
        # floor can undershoot by rounding; walk to the largest m with s <= eps/m
        while m < m_cap and s <= eps / (m + 1):
            m += 1
        while m > 1 and s > eps / m:
            m -= 1
        out.append(jbar(m))
    return out


@dataclass(frozen=True)
class ConvergenceTable:
    """Rows ``(n, T^n, |T^n - T|)`` and the limit report."""

    indices: tuple[int, ...]
    lifespans: tuple[float, ...]
    gaps: tuple[float, ...]
    j0s: tuple[int | None, ...]
    limit: LifespanReport

    def checks(self, tol: float | None = None, at: int | None = None) -> dict:
        """Finite-prefix convergence checks: last gap below first, and the gap at ``at`` within ``tol``."""
        out = {"last_below_first": len(self.gaps) < 2 or self.gaps[-1] < self.gaps[0] or self.gaps[-1] == 0}
        if tol is not None:
            pos = len(self.gaps) - 1 if at is None else self.indices.index(at)
            out["gap_within_tol"] = self.gaps[pos] <= tol
        return out

    def to_csv(self) -> str:
        lines = ["n,T_n,gap,j0_n"]
        for n, t, g, j in zip(self.indices, self.lifespans, self.gaps, self.j0s):
            lines.append(f"{n},{float(t)!r},{float(g)!r},{'' if j is None else j}")
        return "\n".join(lines) + "\n"


def lifespan_convergence(
    data_seq: Sequence[SpectralField],
    b0_seq: Sequence[SpectralField],
    limit: tuple[SpectralField, SpectralField],
    C1: float = 1.0,
    C2: float = 1.0,
    p: float = 2.0,
    bank: FilterBank | None = None,
    indices: Sequence[int] | None = None,
) -> ConvergenceTable:
    """Lifespans ``T^n`` of the sequence data against the limit lifespan ``T``.

    On the large-data branch each ``T^n`` uses the staircase index from
    :func:`j0n_sequence` rather than the datum's own smallest index.
    """
    if len(data_seq) != len(b0_seq):
        raise ValueError("velocity and magnetic sequences differ in length")
    u_lim, b_lim = limit
    if bank is None:
        from .dyadic import build_filter_bank

        bank = build_filter_bank(u_lim.grid)
    ref = lifespan_estimate(u_lim, b_lim, C1, C2, p, bank)
    if ref.branch == LARGE:
        j0s: list[int | None] = list(j0n_sequence(data_seq, u_lim, ref.a, p, bank))
    else:
        j0s = [None] * len(data_seq)
    Ts, gaps = [], []
    for u, b, j in zip(data_seq, b0_seq, j0s):
        rep = lifespan_estimate(u, b, C1, C2, p, bank, j0=j)
        Ts.append(rep.T)
        gaps.append(0.0 if rep.T == ref.T else abs(rep.T - ref.T))
    idx = tuple(range(len(data_seq))) if indices is None else tuple(indices)
    return ConvergenceTable(idx, tuple(Ts), tuple(gaps), tuple(j0s), ref)
