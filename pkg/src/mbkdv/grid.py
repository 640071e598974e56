"""Periodic pseudo-spectral substrate.

The real line is approximated by the torus ``[-L/2, L/2)`` sampled at ``n``
equispaced points.  Transform normalization is fixed once here and used by
every other module::

    f_hat(xi_k) = dx * sum_j f(x_j) exp(-i xi_k x_j),      dx = L / n
    f(x_j)      = (1 / L) * sum_k f_hat(xi_k) exp(i xi_k x_j)

so ``f_hat`` approximates the continuum Fourier integral and Parseval reads
``sum_j |f_j|^2 dx == (1 / L) sum_k |f_hat_k|^2``.  Lattice sums over the
zero-sum hyperplane carry the surface weight ``L**-(m - 1)`` for ``m``
factors (see :mod:`mbkdv.hyperplane`), which makes them equal to the
corresponding physical-space integrals for band-limited fields.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, UsageError

__all__ = [
    "SpectralGrid",
    "Field",
    "FieldPair",
    "forward_transform",
    "inverse_transform",
    "spatial_derivative",
    "dealias_product",
    "sobolev_norm",
    "l2_norm",
    "h1_norm",
    "parseval_defect",
]


def _readonly(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class SpectralGrid:
    """Periodic 1-D lattice of period ``length`` with ``n`` collocation points.

    Wavenumbers are stored in numpy FFT order; the Nyquist index ``n/2`` is
    reported as ``+n/2`` so the integer set is ``{-n/2+1, ..., n/2}``.
    """

    length: float = 100.0
    n: int = 1024

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or isinstance(self.n, bool):
            raise ConfigurationError(f"n must be an integer, got {self.n!r}")
        if self.n < 8 or self.n % 2:
            raise ConfigurationError(f"n must be even and >= 8, got {self.n}")
        if not (self.length > 0 and math.isfinite(self.length)):
            raise ConfigurationError(f"length must be positive, got {self.length}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "length", float(self.length))

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def dk(self) -> float:
        """Frequency spacing 2*pi/L."""
        return 2.0 * math.pi / self.length

    @cached_property
    def x(self) -> np.ndarray:
        return _readonly(-0.5 * self.length + self.dx * np.arange(self.n))

    @cached_property
    def k(self) -> np.ndarray:
        """Integer wavenumbers in FFT order."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n).round().astype(np.int64)
        k[self.n // 2] = self.n // 2
        return _readonly(k)

    @cached_property
    def xi(self) -> np.ndarray:
        """Angular frequencies 2*pi*k/L in FFT order."""
        return _readonly(self.dk * self.k.astype(float))

    @cached_property
    def _phase(self) -> np.ndarray:
        # exp(-i xi_k x_0) with x_0 = -L/2 is (-1)^k
        return _readonly(np.where(self.k % 2 == 0, 1.0, -1.0))

    @property
    def band(self) -> int:
        """Largest retained |k| under the 2/3 rule (3*K < n)."""
        return (self.n - 1) // 3

    @cached_property
    def band_mask(self) -> np.ndarray:
        return _readonly(np.abs(self.k) <= self.band)

    def band_k(self, K: int | None = None) -> np.ndarray:
        """Centered integer wavenumbers -K..K."""
        K = self.band if K is None else int(K)
        return np.arange(-K, K + 1)

    def band_xi(self, K: int | None = None) -> np.ndarray:
        return self.dk * self.band_k(K).astype(float)

    def band_coefficients(self, coeffs: np.ndarray, K: int | None = None) -> np.ndarray:
        """Reorder FFT-ordered coefficients into a centered vector over -K..K."""
        K = self.band if K is None else int(K)
        if K > self.n // 2 - 1:
            raise ConfigurationError(f"band {K} exceeds grid half-width {self.n // 2 - 1}")
        return np.asarray(coeffs)[np.arange(-K, K + 1) % self.n]

    def from_band(self, centered: np.ndarray) -> np.ndarray:
        """Inverse of :meth:`band_coefficients` (zero outside the band)."""
        K = (len(centered) - 1) // 2
        out = np.zeros(self.n, dtype=complex)
        out[np.arange(-K, K + 1) % self.n] = centered
        return out

    def dilated(self, lam: float) -> "SpectralGrid":
        return SpectralGrid(self.length * lam, self.n)


def forward_transform(samples, grid: SpectralGrid) -> np.ndarray:
    samples = np.asarray(samples)
    if samples.shape != (grid.n,):
        raise ConfigurationError(
            f"expected {grid.n} samples, got array of shape {samples.shape}"
        )
    return grid.dx * grid._phase * np.fft.fft(samples)


def inverse_transform(coeffs, grid: SpectralGrid, real: bool = True) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    if coeffs.shape != (grid.n,):
        raise ConfigurationError(
            f"expected {grid.n} coefficients, got array of shape {coeffs.shape}"
        )
    out = np.fft.ifft(coeffs * grid._phase) / grid.dx
    return out.real if real else out


def _hermitian(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    neg = np.conj(coeffs[(-grid.k) % grid.n])
    sym = 0.5 * (coeffs + neg)
    sym[grid.n // 2] = sym[grid.n // 2].real
    return sym


@dataclass(frozen=True, eq=False)
class Field:
    """A real function held as physical samples and spectral coefficients.

    Both arrays are read-only; construct through :meth:`from_physical` or
    :meth:`from_spectral` so they stay consistent.
    """

    grid: SpectralGrid
    values: np.ndarray
    coeffs: np.ndarray

    @classmethod
    def from_physical(cls, grid: SpectralGrid, samples) -> "Field":
        samples = np.array(samples, dtype=float)
        coeffs = forward_transform(samples, grid)
        coeffs[grid.n // 2] = coeffs[grid.n // 2].real
        return cls(grid, _readonly(samples), _readonly(coeffs))

    @classmethod
    def from_spectral(cls, grid: SpectralGrid, coeffs) -> "Field":
        """Build from coefficients; the Hermitian part is kept (real field)."""
        coeffs = np.array(coeffs, dtype=complex)
        if coeffs.shape != (grid.n,):
            raise ConfigurationError(
                f"expected {grid.n} coefficients, got array of shape {coeffs.shape}"
            )
        coeffs = _hermitian(coeffs, grid)
        values = inverse_transform(coeffs, grid)
        return cls(grid, _readonly(values), _readonly(coeffs))

    @classmethod
    def zeros(cls, grid: SpectralGrid) -> "Field":
        return cls.from_physical(grid, np.zeros(grid.n))

    def band(self, K: int | None = None) -> np.ndarray:
        return self.grid.band_coefficients(self.coeffs, K)

    def projected(self) -> "Field":
        """Copy with every mode outside the 2/3 band removed."""
        return Field.from_spectral(self.grid, np.where(self.grid.band_mask, self.coeffs, 0))

    def scaled(self, c: float) -> "Field":
        return Field(self.grid, _readonly(c * self.values), _readonly(c * self.coeffs))

    def __add__(self, other: "Field") -> "Field":
        _same_grid(self, other)
        return Field(
            self.grid,
            _readonly(self.values + other.values),
            _readonly(self.coeffs + other.coeffs),
        )


def _same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise ConfigurationError(f"grid mismatch: {g} vs {f.grid}")
    return g


@dataclass(frozen=True, eq=False)
class FieldPair:
    u: Field
    v: Field

    def __post_init__(self):
        _same_grid(self.u, self.v)

    @property
    def grid(self) -> SpectralGrid:
        return self.u.grid

    @classmethod
    def from_physical(cls, grid, u, v) -> "FieldPair":
        return cls(Field.from_physical(grid, u), Field.from_physical(grid, v))

    @classmethod
    def from_spectral(cls, grid, u_hat, v_hat) -> "FieldPair":
        return cls(Field.from_spectral(grid, u_hat), Field.from_spectral(grid, v_hat))


def spatial_derivative(f: Field, order: int = 1) -> Field:
    if order not in (1, 2, 3):
        raise UsageError(f"derivative order must be 1, 2 or 3, got {order!r}")
    g = f.grid
    c = (1j * g.xi) ** order * f.coeffs
    if order % 2:
        c[g.n // 2] = 0.0
    return Field.from_spectral(g, c)


def dealias_product(f: Field, g: Field) -> Field:
    """Pointwise product under the 2/3 rule.

    Inputs are first restricted to the retained band, so the result equals
    the exact lattice convolution of the band-limited inputs on ``|k| <= K``.
    """
    grid = _same_grid(f, g)
    mask = grid.band_mask
    fv = inverse_transform(np.where(mask, f.coeffs, 0), grid)
    gv = inverse_transform(np.where(mask, g.coeffs, 0), grid)
    c = forward_transform(fv * gv, grid)
    return Field.from_spectral(grid, np.where(mask, c, 0))


def _spectral_sum(weights: np.ndarray, coeffs: np.ndarray, grid: SpectralGrid) -> float:
    return math.fsum(weights * np.abs(coeffs) ** 2) / grid.length


def sobolev_norm(f: Field, s: float) -> float:
    """``(1/L sum_k (1+|xi_k|)^(2s) |f_hat_k|^2)^(1/2)``; s = 0 gives the L2 norm."""
    w = (1.0 + np.abs(f.grid.xi)) ** (2.0 * s)
    return math.sqrt(_spectral_sum(w, f.coeffs, f.grid))


def l2_norm(f: Field) -> float:
    return sobolev_norm(f, 0.0)


def h1_norm(f: Field) -> float:
    """Standard H^1 norm ``(||f||^2 + ||f_x||^2)^(1/2)``.

    The inequalities relating the energy to H^1 are stated for this norm;
    the ``1 + |xi|`` weight of :func:`sobolev_norm` would add a cross term.
    """
    w = 1.0 + f.grid.xi ** 2
    return math.sqrt(_spectral_sum(w, f.coeffs, f.grid))


def parseval_defect(f: Field) -> float:
    """Relative mismatch between physical and spectral L2 sums."""
    phys = math.fsum(f.values ** 2) * f.grid.dx
    spec = _spectral_sum(np.ones(f.grid.n), f.coeffs, f.grid)
    scale = max(phys, spec)
    return 0.0 if scale == 0 else abs(phys - spec) / scale
