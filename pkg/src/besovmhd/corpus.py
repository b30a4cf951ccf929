"""Seeded data corpora shared by tests, scripts and the command line."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .besov import BesovIndex, besov_norm
from .dyadic import FilterBank, build_filter_bank
from .fields import Grid, SpectralField, sample_divergence_free

__all__ = ["DataSpec", "scaled_pair", "small_branch_corpus", "large_branch_corpus", "field_corpus", "scalar_pairs"]


@dataclass(frozen=True)
class DataSpec:
    """Recipe for one ``(u0, b0)`` pair: seeds, spectral decay and target norms.

    ``u_norm`` targets ``||u0||_{B^{d/p-1}_{p,1}}`` and ``b_norm`` targets
    ``||b0||_{B^{d/p}_{p,1}}`` (p = 2).
    """

    seed: int
    u_norm: float
    b_norm: float
    u_decay: float = 3.0
    b_decay: float = 3.5

    def build(self, grid: Grid, bank: FilterBank | None = None) -> tuple[SpectralField, SpectralField]:
        return scaled_pair(grid, self, bank)


def _scaled(f: SpectralField, s: float, target: float, bank: FilterBank) -> SpectralField:
    if target == 0:
        return SpectralField.zeros(f.grid, f.components)
    return f * (target / besov_norm(f, BesovIndex(s, 2, 1), bank))


def scaled_pair(grid: Grid, spec: DataSpec, bank: FilterBank | None = None):
    bank = bank or build_filter_bank(grid)
    d = grid.d
    u = sample_divergence_free(grid, spec.seed, spec.u_decay)
    b = sample_divergence_free(grid, spec.seed + 1000, spec.b_decay)
    return _scaled(u, d / 2 - 1, spec.u_norm, bank), _scaled(b, d / 2, spec.b_norm, bank)


def small_branch_corpus(count: int = 5, seed: int = 0) -> list[DataSpec]:
    """Data with ``||u0|| = 0.04`` (below the branch threshold 1/12 at C1 = C2 = 1)."""
    return [DataSpec(seed + i, 0.04, 0.1) for i in range(count)]


def large_branch_corpus(count: int = 5, seed: int = 100) -> list[DataSpec]:
    """Data with ``||u0|| = 0.5``, well above the branch threshold at C1 = C2 = 1."""
    return [DataSpec(seed + i, 0.5, 0.1) for i in range(count)]


def field_corpus(grid: Grid, count: int = 10, seed: int = 0, decay: float = 3.0) -> list[SpectralField]:
    """Unscaled seeded divergence-free fields."""
    return [sample_divergence_free(grid, seed + i, decay) for i in range(count)]


def scalar_pairs(grid: Grid, count: int = 20, seed: int = 0, decay: float = 2.5):
    """Seeded pairs of zero-mean scalar fields (first components of solenoidal samples)."""
    out = []
    for i in range(count):
        f = sample_divergence_free(grid, seed + 2 * i, decay)
        g = sample_divergence_free(grid, seed + 2 * i + 1, decay)
        out.append((SpectralField(grid, f.coeffs[:1]), SpectralField(grid, g.coeffs[:1])))
    return out
