"""Lattice sums over the zero-sum hyperplanes.

``Lambda_m(M; f_1, ..., f_m) = L**-(m-1) * sum_{k_1+...+k_m=0} M(xi) prod f_j_hat(xi_j)``

with every ``k_j`` in the retained band ``|k| <= K``.  The surface weight
``L**-(m-1)`` makes ``Lambda_3(1; f, g, h)`` equal ``int f g h dx`` and
``-Lambda_2(xi1 xi2; f)`` equal ``int f_x^2 dx`` for band-limited fields.
The last frequency of each tuple is derived from the zero-sum constraint.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels
from .errors import NumericalDomainError, ResolutionCapError
from .grid import Field, _same_grid

__all__ = [
    "LAMBDA4_CAP",
    "hyperplane_sum_2",
    "hyperplane_sum_3",
    "hyperplane_sum_4",
    "pair_sum_brute",
    "pair_sum_factored",
    "pair_sum_bound",
    "check_cap",
]

LAMBDA4_CAP = 128


def _fsum_complex(z) -> complex:
    z = np.ravel(z)
    return complex(math.fsum(z.real), math.fsum(z.imag))


def _check_finite(table, valid, points):
    bad = valid & ~np.isfinite(table)
    if bad.any():
        idx = tuple(int(i[0]) for i in np.nonzero(bad))
        pt = tuple(float(p[idx]) for p in points)
        raise NumericalDomainError(f"multiplier is not finite at {pt}", point=pt)


def check_cap(n: int, allow_large: bool = False, cap: int = LAMBDA4_CAP):
    if n > cap and not allow_large:
        raise ResolutionCapError(
            f"O(n^3) quadrilinear sum refused at n={n} (cap {cap}); pass allow_large=True"
        )


def hyperplane_sum_2(M2, f: Field, g: Field) -> complex:
    grid = _same_grid(f, g)
    xi1 = grid.band_xi()
    xi2 = -xi1
    w = np.broadcast_to(np.asarray(M2(xi1, xi2), dtype=float), xi1.shape)
    _check_finite(w, np.ones(w.shape, bool), (xi1, xi2))
    fb = f.band()
    gb = g.band()[::-1]
    return _fsum_complex(w * fb * gb) / grid.length


def table3(M3, grid, K=None) -> np.ndarray:
    """Tabulate ``M3`` on the band mesh (rows k1, columns k2); zero off-band."""
    K = grid.band if K is None else K
    xi = grid.band_xi(K)
    x1, x2 = np.meshgrid(xi, xi, indexing="ij")
    x3 = -(x1 + x2)
    i, j = np.meshgrid(np.arange(2 * K + 1), np.arange(2 * K + 1), indexing="ij")
    l = 3 * K - i - j
    valid = (l >= 0) & (l <= 2 * K)
    with np.errstate(all="ignore"):
        T = np.broadcast_to(np.asarray(M3(x1, x2, x3), dtype=float), x1.shape)
    _check_finite(T, valid, (x1, x2, x3))
    return np.ascontiguousarray(np.where(valid, T, 0.0))


def hyperplane_sum_3(M3, f: Field, g: Field, h: Field) -> complex:
    grid = _same_grid(f, g, h)
    T = table3(M3, grid)
    s = kernels.lambda3_table(T, f.band(), g.band(), h.band())
    return s / grid.length ** 2


def hyperplane_sum_4(M4, f: Field, g: Field, h: Field, w: Field,
                     allow_large: bool = False) -> complex:
    """Direct O(K^3) sum for an arbitrary multiplier, one k1 slab at a time."""
    grid = _same_grid(f, g, h, w)
    check_cap(grid.n, allow_large)
    K = grid.band
    m = 2 * K + 1
    xi = grid.band_xi()
    a, b, c, d = (z.band() for z in (f, g, h, w))
    j, k = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    x2, x3 = xi[j], xi[k]
    slabs = []
    for i in range(m):
        l = 4 * K - i - j - k
        valid = (l >= 0) & (l < m)
        lc = np.clip(l, 0, m - 1)
        x1 = np.full_like(x2, xi[i])
        x4 = -((x1 + x2) + x3)
        with np.errstate(all="ignore"):
            W = np.broadcast_to(np.asarray(M4(x1, x2, x3, x4), dtype=float), x2.shape)
        _check_finite(W, valid, (x1, x2, x3, x4))
        slabs.append(a[i] * _fsum_complex(np.where(valid, W * b[j] * c[k] * d[lc], 0.0)))
    return _fsum_complex(np.array(slabs)) / grid.length ** 3


def pair_sum_brute(W, pair: int, f, g, h, w, allow_large: bool = False) -> complex:
    """Lambda_4 with a multiplier that depends on one frequency pair only.

    ``pair == 0``: ``W[k2, k3]``; ``pair == 1``: ``W[k1, k4]`` (band-ordered).
    """
    grid = _same_grid(f, g, h, w)
    check_cap(grid.n, allow_large)
    W = np.ascontiguousarray(W, dtype=float)
    s = kernels.lambda4_pair(W, pair, f.band(), g.band(), h.band(), w.band())
    return s / grid.length ** 3


def pair_sum_factored(W, pair: int, f, g, h, w) -> complex:
    """Same sum as :func:`pair_sum_brute` in O(K^2) via one convolution."""
    grid = _same_grid(f, g, h, w)
    K = grid.band
    m = 2 * K + 1
    a, b, c, d = (z.band() for z in (f, g, h, w))
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    if pair == 0:
        conv = np.convolve(a, d)  # index p + 2K for k1 + k4 = p
        terms = W * b[i] * c[j] * conv[4 * K - i - j]
    elif pair == 1:
        conv = np.convolve(b, c)
        terms = W * a[i] * d[j] * conv[4 * K - i - j]
    else:
        raise ValueError("pair must be 0 or 1")
    return _fsum_complex(terms) / grid.length ** 3


def pair_sum_bound(W, pair: int, f, g, h, w) -> float:
    """:func:`pair_sum_factored` with every factor replaced by its modulus.

    Bounds the sum and sets the scale of its rounding error.
    """
    grid = _same_grid(f, g, h, w)
    K = grid.band
    m = 2 * K + 1
    a, b, c, d = (np.abs(z.band()) for z in (f, g, h, w))
    W = np.abs(W)
    i, j = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    if pair == 0:
        terms = W * b[i] * c[j] * np.convolve(a, d)[4 * K - i - j]
    elif pair == 1:
        terms = W * a[i] * d[j] * np.convolve(b, c)[4 * K - i - j]
    else:
        raise ValueError("pair must be 0 or 1")
    return math.fsum(terms.ravel()) / grid.length ** 3
