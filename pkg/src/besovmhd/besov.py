"""Homogeneous Besov and Chemin-Lerner norms on the resolved dyadic band."""

from __future__ import annotations

import io
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid

from .dyadic import FilterBank
from .fields import SpectralField, _lp_norm_values, dealiased_product, to_physical

__all__ = [
    "BesovIndex",
    "NormTrace",
    "TruncatedTailWarning",
    "UnresolvableTailError",
    "block_norms",
    "block_norms_array",
    "besov_norm",
    "besov_report",
    "weighted_sum",
    "chemin_lerner_norm",
    "time_besov_norm",
    "tail_sum",
    "smallest_j0",
    "product_ratio",
]


class TruncatedTailWarning(UserWarning):
    """A tail index lies beyond the resolved band, so the tail is reported as 0."""


class UnresolvableTailError(ValueError):
    """No in-band tail index brings the tail below the requested threshold."""


@dataclass(frozen=True)
class BesovIndex:
    """Regularity ``s``, integrability ``p`` and summability ``r``."""

    s: float
    p: float = 2.0
    r: float = 1.0

    def __post_init__(self):
        if not self.p >= 1:
            raise ValueError(f"p must be >= 1, got {self.p}")
        if not self.r >= 1:
            raise ValueError(f"r must be >= 1, got {self.r}")


def _lr(values: np.ndarray, r: float, axis: int = -1) -> np.ndarray:
    if np.isinf(r):
        return np.max(values, axis=axis)
    if r == 1:
        return np.sum(values, axis=axis)
    return np.sum(values**r, axis=axis) ** (1.0 / r)


def block_norms_array(coeffs: np.ndarray, p: float, bank: FilterBank) -> np.ndarray:
    """``||Delta_j f||_{L^p}`` for every band, for coefficient arrays with leading batch axes.

    ``coeffs`` has shape ``(..., comps, *grid.shape)``; the result has shape
    ``(..., nbands)``. For ``p = 2`` the grid quadrature is evaluated through
    the discrete Parseval identity, which gives the same value without
    transforming back to the grid.
    """
    d = bank.grid.d
    table = bank.phi_table
    if p == 2:
        power = np.sum(np.abs(coeffs) ** 2, axis=-d - 1)
        axes = tuple(range(-d, 0))
        out = np.stack(
            [np.sum(power * table[i] ** 2, axis=axes) for i in range(bank.nbands)], axis=-1
        )
        return np.sqrt(out)
    out = []
    for i in range(bank.nbands):
        vals = to_physical(coeffs * table[i], d)
        out.append(_lp_norm_values(vals, p, d))
    return np.stack(out, axis=-1)


def block_norms(f: SpectralField, p: float, bank: FilterBank) -> np.ndarray:
    if f.grid != bank.grid:
        raise ValueError("field and filter bank grids differ")
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return block_norms_array(f.coeffs, p, bank)


def _weights(bank: FilterBank, s: float) -> np.ndarray:
    return 2.0 ** (s * np.arange(bank.j_min, bank.j_max + 1))


def weighted_sum(blocks: np.ndarray, idx: BesovIndex, bank: FilterBank) -> np.ndarray:
    """``l^r`` sum of ``2^{js}`` times precomputed block norms (last axis = band)."""
    return _lr(blocks * _weights(bank, idx.s), idx.r)


def besov_norm(f: SpectralField, idx: BesovIndex, bank: FilterBank) -> float:
    """Truncated homogeneous Besov norm ``|| 2^{js} ||Delta_j f||_p ||_{l^r}`` over ``[j_min, j_max]``."""
    return float(weighted_sum(block_norms(f, idx.p, bank), idx, bank))


def besov_report(f: SpectralField, idx: BesovIndex, bank: FilterBank) -> dict:
    """Norm value with its band and a flag for content outside the exact-partition range."""
    lo, hi = bank.exact_range
    kmag = bank.grid.kmag
    outside = (kmag > 0) & ((kmag < lo) | (kmag > hi))
    leak = bool(np.any(np.abs(f.coeffs[:, outside]) > 0))
    return {
        "s": idx.s,
        "p": idx.p,
        "r": idx.r,
        "value": besov_norm(f, idx, bank),
        "band": [bank.j_min, bank.j_max],
        "tail_warning": leak,
    }


@dataclass(frozen=True, eq=False)
class NormTrace:
    """Per-time, per-band block norms ``||Delta_j f(t)||_{L^p}``.

    The ``2^{js}`` weight is applied by the consumer so that one trace serves
    every regularity index.
    """

    times: np.ndarray
    js: np.ndarray
    p: float
    blocks: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        b = np.asarray(self.blocks, dtype=float)
        if t.ndim != 1 or t.size == 0:
            raise ValueError("trace needs a nonempty 1-d time grid")
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        if b.shape != (t.size, len(self.js)):
            raise ValueError(f"blocks shape {b.shape} != ({t.size}, {len(self.js)})")
        if np.any(b < 0):
            raise ValueError("block norms must be nonnegative")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "blocks", b)
        object.__setattr__(self, "js", np.asarray(self.js, dtype=int))

    @classmethod
    def from_coeffs(cls, times, coeffs: np.ndarray, p: float, bank: FilterBank) -> NormTrace:
        return cls(np.asarray(times), np.arange(bank.j_min, bank.j_max + 1), p,
                   block_norms_array(coeffs, p, bank))

    def weights(self, s: float) -> np.ndarray:
        return 2.0 ** (s * self.js)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("t,j,block_norm\n")
        for t, row in zip(self.times, self.blocks):
            for j, v in zip(self.js, row):
                buf.write(f"{float(t)!r},{j},{float(v)!r}\n")
        return buf.getvalue()


def _time_lq(values: np.ndarray, times: np.ndarray, q: float) -> np.ndarray:
    """Trapezoidal ``L^q`` norm in time along axis 0."""
    if np.isinf(q):
        return np.max(values, axis=0)
    if times.size == 1:
        return np.zeros(values.shape[1:])
    return trapezoid(values**q, times, axis=0) ** (1.0 / q)


def chemin_lerner_norm(trace: NormTrace, q: float, idx: BesovIndex) -> float:
    """``l^r`` over j of ``2^{js} ||Delta_j f||_{L^q_T L^p}`` (time norm inside the band sum)."""
    if trace.times.size == 0:
        raise ValueError("empty trace")
    per_band = _time_lq(trace.blocks, trace.times, q)
    return float(_lr(per_band * trace.weights(idx.s), idx.r))


def time_besov_norm(trace: NormTrace, q: float, idx: BesovIndex) -> float:
    """Ordinary ``L^q_T(B^s_{p,r})``: Besov norm at each time, then the time norm."""
    inst = _lr(trace.blocks * trace.weights(idx.s), idx.r)
    return float(_time_lq(inst[:, None], trace.times, q)[0])


def _tail_terms(f: SpectralField, p: float, bank: FilterBank) -> tuple[np.ndarray, np.ndarray]:
    d = f.grid.d
    js = np.arange(bank.j_min, bank.j_max + 1)
    terms = block_norms(f, p, bank) * 2.0 ** ((d / p - 1) * js)
    return js, terms


def tail_sum(f: SpectralField, j0: int, p: float, bank: FilterBank) -> float:
    """Two-sided tail ``sum_{|j| >= j0} 2^{(d/p - 1) j} ||Delta_j f||_p`` over the band.

    When ``j0`` exceeds ``max(|j_min|, j_max)`` the tail is empty on the grid;
    0 is returned and a :class:`TruncatedTailWarning` is issued.
    """
    if j0 < 0:
        raise ValueError(f"j0 must be >= 0, got {j0}")
    if j0 > max(abs(bank.j_min), bank.j_max):
        warnings.warn(
            f"tail index {j0} lies beyond the resolved band [{bank.j_min}, {bank.j_max}]",
            TruncatedTailWarning,
            stacklevel=2,
        )
        return 0.0
    js, terms = _tail_terms(f, p, bank)
    return float(np.sum(terms[np.abs(js) >= j0]))


def smallest_j0(f: SpectralField, threshold: float, p: float, bank: FilterBank) -> int:
    """Least in-band ``j0 >= 0`` with ``tail_sum(f, j0) < threshold``.

    Raises:
        UnresolvableTailError: if even the last in-band tail is too large.
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    js, terms = _tail_terms(f, p, bank)
    for j0 in range(0, max(abs(bank.j_min), bank.j_max) + 1):
        if np.sum(terms[np.abs(js) >= j0]) < threshold:
            return j0
    raise UnresolvableTailError(
        f"tail beyond |j| = {max(abs(bank.j_min), bank.j_max)} still exceeds {threshold:g}; "
        "grid too coarse for this datum"
    )


def product_ratio(
    f: SpectralField, g: SpectralField, s1: float, s2: float, p: float, bank: FilterBank
) -> float:
    """Measured ratio ``||fg||_{B^{s1+s2-d/p}_{p,inf}} / (||f||_{B^{s1}_{p,inf}} ||g||_{B^{s2}_{p,1}})``."""
    d = bank.grid.d
    if f.components != 1 or g.components != 1:
        raise ValueError("product_ratio takes scalar fields")
    if s1 > d / p or s2 > d / p:
        raise ValueError("need s1, s2 <= d/p")
    if not s1 + s2 > d * max(0.0, 2.0 / p - 1.0):
        raise ValueError("need s1 + s2 > d max(0, 2/p - 1)")
    den = besov_norm(f, BesovIndex(s1, p, np.inf), bank) * besov_norm(g, BesovIndex(s2, p, 1), bank)
    if den == 0:
        raise ZeroDivisionError("zero denominator")
    fg = dealiased_product(f, g)
    return besov_norm(fg, BesovIndex(s1 + s2 - d / p, p, np.inf), bank) / den
