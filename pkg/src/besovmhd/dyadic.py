"""Littlewood-Paley filter bank and homogeneous dyadic block operators."""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .fields import Grid, SpectralField

__all__ = [
    "smooth_step",
    "chi",
    "phi",
    "band_range",
    "FilterBank",
    "build_filter_bank",
    "lp_block",
    "low_cutoff",
]

# Annulus {INNER <= |xi| <= OUTER} carrying phi; chi == 1 on B(0, INNER), 0 off B(0, CHI_OUTER).
INNER = 3 / 4
OUTER = 8 / 3
CHI_OUTER = 4 / 3


def _bump(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smooth_step(x):
    """C-infinity step: 0 for x <= 0, 1 for x >= 1, built from exp(-1/x)."""
    x = np.asarray(x, dtype=float)
    a = _bump(x)
    b = _bump(1.0 - x)
    return a / (a + b)


def chi(r):
    """Radial low-pass profile: exactly 1 on [0, 3/4], exactly 0 on [4/3, inf)."""
    return smooth_step((CHI_OUTER - np.asarray(r, dtype=float)) / (CHI_OUTER - INNER))


def phi(r):
    """Annular profile ``chi(r/2) - chi(r)``, supported in [3/4, 8/3]."""
    r = np.asarray(r, dtype=float)
    return chi(0.5 * r) - chi(r)


def band_range(grid: Grid) -> tuple[int, int]:
    """Resolved dyadic band ``(j_min, j_max)`` of a grid.

    ``j_min`` is the first j whose annulus reaches a nonzero wavevector
    (``phi(2^-j k0) > 0``); ``j_max`` is the last j with ``2^j * 8/3 <= k_nyquist``.
    """
    k0 = grid.k0
    knyq = grid.n / 2 * k0
    j_min = 0
    while k0 * 2.0**-j_min >= OUTER:
        j_min += 1
    while k0 * 2.0 ** -(j_min - 1) < OUTER:
        j_min -= 1
    j_max = 0
    while 2.0 ** (j_max + 1) * OUTER <= knyq:
        j_max += 1
    while 2.0**j_max * OUTER > knyq:
        j_max -= 1
    return j_min, j_max


@dataclass(frozen=True, eq=False)
class FilterBank:
    """Tabulated multipliers ``phi(2^-j |k|)`` for ``j_min <= j <= j_max``."""

    grid: Grid
    j_min: int
    j_max: int
    phi_table: np.ndarray

    @property
    def js(self) -> range:
        return range(self.j_min, self.j_max + 1)

    @property
    def nbands(self) -> int:
        return self.j_max - self.j_min + 1

    def multiplier(self, j: int) -> np.ndarray:
        if not self.j_min <= j <= self.j_max:
            raise IndexError(f"band {j} outside resolved range [{self.j_min}, {self.j_max}]")
        return self.phi_table[j - self.j_min]

    @property
    def safe_range(self) -> tuple[float, float]:
        """Wavenumber range ``[2^(j_min+1), 2^(j_max-1)]`` checked by the invariants."""
        return 2.0 ** (self.j_min + 1), 2.0 ** (self.j_max - 1)

    @property
    def exact_range(self) -> tuple[float, float]:
        """Range where the truncated partition of unity telescopes to exactly one."""
        return CHI_OUTER * 2.0**self.j_min, 1.5 * 2.0**self.j_max

    def partition_sum(self) -> np.ndarray:
        return np.sum(self.phi_table, axis=0)

    def square_sum(self) -> np.ndarray:
        return np.sum(self.phi_table**2, axis=0)

    def phi_csv(self) -> str:
        """Distinct ``(j, |k|, value)`` rows of the table, for debugging."""
        buf = io.StringIO()
        buf.write("j,k,value\n")
        kmag = self.grid.kmag
        shells = np.unique(np.round(kmag, 12))
        for j in self.js:
            vals = phi(2.0**-j * shells)
            for k, v in zip(shells, vals):
                if v > 0:
                    buf.write(f"{j},{k:.12g},{v:.17g}\n")
        return buf.getvalue()


@lru_cache(maxsize=16)
def build_filter_bank(grid: Grid) -> FilterBank:
    """Tabulate the dyadic multipliers for ``grid`` (cached per grid).

    Raises:
        ValueError: if fewer than three dyadic bands are resolved.
    """
    j_min, j_max = band_range(grid)
    if j_max - j_min + 1 < 3:
        raise ValueError(
            f"grid n={grid.n} resolves only bands [{j_min}, {j_max}]; need at least three"
        )
    kmag = grid.kmag
    table = np.stack([phi(2.0**-j * kmag) for j in range(j_min, j_max + 1)])
    table.flags.writeable = False
    return FilterBank(grid, j_min, j_max, table)


def lp_block(f: SpectralField, j: int, bank: FilterBank) -> SpectralField:
    """Homogeneous block: multiply coefficients by ``phi(2^-j |k|)``."""
    if f.grid != bank.grid:
        raise ValueError("field and filter bank grids differ")
    return SpectralField(f.grid, f.coeffs * bank.multiplier(j), zero_mean=True)


def low_cutoff(f: SpectralField, j: int, bank: FilterBank) -> SpectralField:
    """Sum of blocks ``j_min <= j' < j``; ``j = j_max + 1`` gives the full in-band field."""
    if not bank.j_min <= j <= bank.j_max + 1:
        raise IndexError(f"cutoff {j} outside [{bank.j_min}, {bank.j_max + 1}]")
    if f.grid != bank.grid:
        raise ValueError("field and filter bank grids differ")
    mult = np.sum(bank.phi_table[: j - bank.j_min], axis=0)
    return SpectralField(f.grid, f.coeffs * mult, zero_mean=True)
