"""Spectral fields on the periodic torus.

A field is stored as its Fourier coefficients ``c_k`` in FFT index order with
the normalization ``f(x) = sum_k c_k exp(i k.x)``, so the coefficients are
the Fourier series of ``f`` and Parseval reads ``mean |f|^2 = sum |c_k|^2``.
All Lebesgue norms use the normalized measure (total mass 1).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as sfft

__all__ = [
    "Grid",
    "SpectralField",
    "DivergenceError",
    "hermitian_symmetrize",
    "gradient",
    "divergence",
    "leray_project",
    "advect",
    "directional_derivative",
    "dealiased_product",
    "lp_norm",
    "inner",
    "translate",
    "sample_divergence_free",
    "mode",
]

# Relative tolerance for the divergence-free precondition of ``advect``.
DIVERGENCE_TOL = 1e-8


class DivergenceError(ValueError):
    """Raised when a velocity that must be solenoidal is not."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid with ``n`` points per axis on ``[0, L)^d``."""

    d: int = 2
    n: int = 64
    L: float = 2 * np.pi

    def __post_init__(self):
        if self.d not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {self.d}")
        if self.n < 8 or self.n & (self.n - 1):
            raise ValueError(f"n must be a power of two >= 8, got {self.n}")
        if not self.L > 0:
            raise ValueError(f"period must be positive, got {self.L}")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(-self.d, 0))

    @property
    def k0(self) -> float:
        """Smallest nonzero wavenumber, 2*pi/L."""
        return 2 * np.pi / self.L

    @property
    def spacing(self) -> float:
        return self.L / self.n

    @cached_property
    def modes(self) -> np.ndarray:
        """Integer mode numbers, shape ``(d, n, ..., n)``."""
        m = np.fft.fftfreq(self.n, d=1.0 / self.n)
        return np.stack(np.meshgrid(*([m] * self.d), indexing="ij"))

    @cached_property
    def wavevectors(self) -> np.ndarray:
        return self.modes * self.k0

    @cached_property
    def ksq(self) -> np.ndarray:
        return np.sum(self.wavevectors**2, axis=0)

    @cached_property
    def kmag(self) -> np.ndarray:
        return np.sqrt(self.ksq)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        # 2/3 rule: keep |m_i| < n/3 on every axis.
        return np.all(np.abs(self.modes) < self.n / 3, axis=0)

    @cached_property
    def points(self) -> np.ndarray:
        x = np.arange(self.n) * self.spacing
        return np.stack(np.meshgrid(*([x] * self.d), indexing="ij"))


def to_physical(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Inverse transform over the last ``d`` axes; returns the real part."""
    return sfft.ifftn(coeffs, axes=tuple(range(-d, 0)), norm="forward").real


def to_spectral(values: np.ndarray, d: int) -> np.ndarray:
    return sfft.fftn(values, axes=tuple(range(-d, 0)), norm="forward")


def _reflect(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Return ``c(-k)`` in FFT index order."""
    axes = tuple(range(-d, 0))
    return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


def hermitian_symmetrize(coeffs: np.ndarray, d: int) -> np.ndarray:
    """Project coefficients onto the real-valued subspace ``c(-k) = conj c(k)``."""
    return 0.5 * (coeffs + np.conj(_reflect(coeffs, d)))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real scalar or vector field held as Fourier coefficients.

    ``coeffs`` has shape ``(components, n, ..., n)``. The array is copied and
    frozen on construction. When ``zero_mean`` is set the k = 0 coefficient
    must vanish exactly.
    """

    grid: Grid
    coeffs: np.ndarray
    zero_mean: bool = True

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim == self.grid.d:
            c = c[None]
        if c.shape[1:] != self.grid.shape:
            raise ValueError(
                f"coefficient shape {c.shape} does not match grid {self.grid.shape}"
            )
        if self.zero_mean and np.any(c[(slice(None),) + (0,) * self.grid.d] != 0):
            raise ValueError("zero_mean field has a nonzero k = 0 coefficient")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def components(self) -> int:
        return self.coeffs.shape[0]

    @property
    def is_vector(self) -> bool:
        return self.components == self.grid.d

    @classmethod
    def zeros(cls, grid: Grid, components: int = 1) -> SpectralField:
        return cls(grid, np.zeros((components,) + grid.shape, dtype=complex))

    @classmethod
    def from_physical(cls, grid: Grid, values, zero_mean: bool = True) -> SpectralField:
        """Build a field from real grid values of shape ``(components, n, ..., n)``."""
        v = np.asarray(values, dtype=float)
        if v.ndim == grid.d:
            v = v[None]
        c = hermitian_symmetrize(to_spectral(v, grid.d), grid.d)
        if zero_mean:
            c[(slice(None),) + (0,) * grid.d] = 0
        return cls(grid, c, zero_mean)

    def physical(self) -> np.ndarray:
        return to_physical(self.coeffs, self.grid.d)

    def with_coeffs(self, coeffs, zero_mean: bool | None = None) -> SpectralField:
        return SpectralField(self.grid, coeffs, self.zero_mean if zero_mean is None else zero_mean)

    def _check(self, other: SpectralField):
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        if other.components != self.components:
            raise ValueError("component count mismatch")

    def __add__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return self.with_coeffs(self.coeffs + other.coeffs, self.zero_mean and other.zero_mean)

    def __sub__(self, other: SpectralField) -> SpectralField:
        self._check(other)
        return self.with_coeffs(self.coeffs - other.coeffs, self.zero_mean and other.zero_mean)

    def __neg__(self) -> SpectralField:
        return self.with_coeffs(-self.coeffs)

    def __mul__(self, scalar: float) -> SpectralField:
        return self.with_coeffs(self.coeffs * float(scalar))

    __rmul__ = __mul__


def mode(grid: Grid, k, amplitude: float = 1.0, kind: str = "cos", components=None) -> SpectralField:
    """Single real Fourier mode ``amplitude * cos(k.x)`` (or ``sin``).

    ``components`` is an optional per-component weight vector; by default the
    field is scalar.
    """
    k = tuple(int(v) for v in k)
    if len(k) != grid.d:
        raise ValueError("wavevector length must equal grid dimension")
    weights = np.atleast_1d(np.asarray(1.0 if components is None else components, dtype=float))
    c = np.zeros((len(weights),) + grid.shape, dtype=complex)
    plus = tuple(m % grid.n for m in k)
    minus = tuple(-m % grid.n for m in k)
    if kind == "cos":
        hp, hm = 0.5, 0.5
    elif kind == "sin":
        hp, hm = -0.5j, 0.5j
    else:
        raise ValueError(f"unknown mode kind {kind!r}")
    for i, w in enumerate(weights):
        c[(i,) + plus] += amplitude * w * hp
        c[(i,) + minus] += amplitude * w * hm
    return SpectralField(grid, c, zero_mean=any(k))


def _grad_coeffs(c: np.ndarray, grid: Grid) -> np.ndarray:
    """Gradient of coefficient array ``(..., comps, *shape)`` -> ``(..., comps, d, *shape)``."""
    return 1j * grid.wavevectors * c[(Ellipsis, None) + (slice(None),) * grid.d]


def gradient(f: SpectralField) -> SpectralField:
    """Gradient; component ``i * d + j`` holds ``d_j f_i``."""
    g = _grad_coeffs(f.coeffs, f.grid)
    return SpectralField(f.grid, g.reshape((-1,) + f.grid.shape), zero_mean=True)


def _div_coeffs(c: np.ndarray, grid: Grid) -> np.ndarray:
    return np.sum(1j * grid.wavevectors * c, axis=-grid.d - 1)


def divergence(v: SpectralField) -> SpectralField:
    if not v.is_vector:
        raise ValueError(f"divergence needs {v.grid.d} components, got {v.components}")
    return SpectralField(v.grid, _div_coeffs(v.coeffs, v.grid)[None], zero_mean=True)


def _leray_coeffs(c: np.ndarray, grid: Grid) -> np.ndarray:
    kv = grid.wavevectors
    ksq = np.where(grid.ksq == 0, 1.0, grid.ksq)
    kdotc = np.sum(kv * c, axis=-grid.d - 1, keepdims=True)
    return c - kv * kdotc / ksq


def leray_project(v: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields, symbol ``I - k k^T/|k|^2``.

    The k = 0 coefficient passes through unchanged.
    """
    if not v.is_vector:
        raise ValueError(f"Leray projection needs {v.grid.d} components, got {v.components}")
    return v.with_coeffs(_leray_coeffs(v.coeffs, v.grid))


def _dealias(c: np.ndarray, grid: Grid) -> np.ndarray:
    return c * grid.dealias_mask


def _advect_coeffs(u: np.ndarray, b: np.ndarray, grid: Grid) -> np.ndarray:
    """``div(u (x) b)`` on coefficient arrays with leading batch axes."""
    d = grid.d
    up = to_physical(_dealias(u, grid), d)
    bp = to_physical(_dealias(b, grid), d)
    # flux[..., i, j] = u_j b_i
    flux = bp[(Ellipsis, slice(None), None) + (slice(None),) * d] * up[(Ellipsis, None) + (slice(None),) * (d + 1)]
    fh = to_spectral(flux, d)
    out = np.sum(1j * grid.wavevectors * fh, axis=-d - 1)
    return hermitian_symmetrize(_dealias(out, grid), d)


def _directional_coeffs(v: np.ndarray, w: np.ndarray, grid: Grid) -> np.ndarray:
    """``v . grad w`` in non-conservative form on coefficient arrays."""
    d = grid.d
    vp = to_physical(_dealias(v, grid), d)
    gw = to_physical(_grad_coeffs(_dealias(w, grid), grid), d)
    prod = np.sum(gw * vp[(Ellipsis, None) + (slice(None),) * (d + 1)], axis=-d - 1)
    return hermitian_symmetrize(_dealias(to_spectral(prod, d), grid), d)


def _max_divergence(c: np.ndarray, grid: Grid) -> float:
    return float(np.max(np.abs(to_physical(_div_coeffs(c, grid), grid.d))))


def _check_solenoidal(u: SpectralField):
    scale = 1.0 + float(np.sqrt(np.sum(np.abs(u.coeffs) ** 2)))
    div = _max_divergence(u.coeffs, u.grid)
    if div > DIVERGENCE_TOL * scale:
        raise DivergenceError(f"velocity divergence {div:.3e} exceeds tolerance")


def advect(u: SpectralField, b: SpectralField) -> SpectralField:
    """``u . grad b`` evaluated as ``div(u (x) b)`` with 2/3-rule dealiasing.

    Raises:
        DivergenceError: if ``u`` is not divergence-free to ``1e-8`` relative.
    """
    if u.grid != b.grid:
        raise ValueError("fields live on different grids")
    if not u.is_vector:
        raise ValueError("advecting velocity must be a vector field")
    _check_solenoidal(u)
    return SpectralField(u.grid, _advect_coeffs(u.coeffs, b.coeffs, u.grid), zero_mean=b.zero_mean)


def directional_derivative(v: SpectralField, w: SpectralField) -> SpectralField:
    """``v . grad w`` pointwise (no solenoidal requirement on ``v``), dealiased."""
    if v.grid != w.grid:
        raise ValueError("fields live on different grids")
    if not v.is_vector:
        raise ValueError("direction field must be a vector field")
    return SpectralField(v.grid, _directional_coeffs(v.coeffs, w.coeffs, v.grid), zero_mean=False)


def dealiased_product(f: SpectralField, g: SpectralField) -> SpectralField:
    """Pointwise product of two scalar fields with the 2/3 rule."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    grid = f.grid
    prod = to_physical(_dealias(f.coeffs, grid), grid.d) * to_physical(_dealias(g.coeffs, grid), grid.d)
    c = hermitian_symmetrize(_dealias(to_spectral(prod, grid.d), grid), grid.d)
    return SpectralField(grid, c, zero_mean=False)


def _lp_norm_values(values: np.ndarray, p: float, d: int) -> np.ndarray:
    """Normalized ``L^p`` norm of physical values ``(..., comps, *shape)``."""
    mag = np.sqrt(np.sum(values**2, axis=-d - 1))
    axes = tuple(range(-d, 0))
    if np.isinf(p):
        return np.max(mag, axis=axes)
    if p == 2:
        return np.sqrt(np.mean(mag**2, axis=axes))
    return np.mean(mag**p, axis=axes) ** (1.0 / p)


def lp_norm(f: SpectralField, p: float = 2) -> float:
    """Grid ``L^p`` norm under the normalized measure; vectors use the pointwise Euclidean length."""
    if not p >= 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(_lp_norm_values(f.physical(), p, f.grid.d))


def inner(f: SpectralField, g: SpectralField) -> float:
    """Normalized ``L^2`` inner product."""
    f._check(g)
    return float(np.real(np.sum(f.coeffs * np.conj(g.coeffs))))


def translate(f: SpectralField, shift) -> SpectralField:
    """Exact translate ``x -> f(x - shift)`` by a Fourier phase."""
    shift = np.asarray(shift, dtype=float).reshape((-1,) + (1,) * f.grid.d)
    phase = np.exp(-1j * np.sum(f.grid.wavevectors * shift, axis=0))
    return f.with_coeffs(f.coeffs * phase)


def _top_band_scale(grid: Grid) -> float:
    """``2^j_max``: the largest power of two with ``2^j * 8/3 <= k_nyquist``."""
    knyq = grid.n / 2 * grid.k0
    return 2.0 ** np.floor(np.log2(knyq * 3 / 8))


def sample_divergence_free(
    grid: Grid,
    seed: int,
    decay_exponent: float = 3.0,
    kmax: float | None = None,
) -> SpectralField:
    """Random real divergence-free zero-mean vector field.

    Coefficients are complex Gaussians with ``|c(k)| ~ |k|^-decay_exponent``
    supported on ``|k| <= kmax``. The default ``kmax = 1.5 * 2^j_max`` keeps
    the field inside the frequency range where the truncated dyadic partition
    of unity is exact (``3n/16`` when ``L = 2pi``).
    """
    if not decay_exponent > 0:
        raise ValueError("decay_exponent must be positive")
    if kmax is None:
        kmax = 1.5 * _top_band_scale(grid)
    rng = np.random.default_rng(seed)
    size = (grid.d,) + grid.shape
    c = rng.standard_normal(size) + 1j * rng.standard_normal(size)
    kmag = grid.kmag
    support = (kmag > 0) & (kmag <= kmax) & grid.dealias_mask
    weight = np.where(support, np.where(kmag > 0, kmag, 1.0) ** (-decay_exponent), 0.0)
    c = hermitian_symmetrize(c * weight, grid.d)
    c = _leray_coeffs(c, grid)
    c[(slice(None),) + (0,) * grid.d] = 0
    return SpectralField(grid, c, zero_mean=True)
