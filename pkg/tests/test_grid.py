import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbkdv.errors import ConfigurationError, UsageError
from mbkdv.grid import (Field, SpectralGrid, dealias_product, forward_transform, h1_norm,
                        inverse_transform, l2_norm, parseval_defect, sobolev_norm,
                        spatial_derivative)

from conftest import random_band_field


@pytest.mark.parametrize("n,L", [(6, 1.0), (9, 1.0), (16, 0.0), (16, -2.0), (16, math.inf)])
def test_grid_rejects_bad_shape(n, L):
    with pytest.raises(ConfigurationError):
        SpectralGrid(L, n)


def test_grid_wavenumbers():
    g = SpectralGrid(10.0, 8)
    assert g.k.tolist() == [0, 1, 2, 3, 4, -3, -2, -1]
    assert g.band == 2
    assert g.dx == pytest.approx(1.25)
    assert g.x[0] == -5.0
    assert np.allclose(g.xi, 2 * np.pi / 10 * g.k)
    with pytest.raises(ValueError):
        g.x[0] = 1.0


def test_constant_field_is_dc_only():
    g = SpectralGrid(7.0, 16)
    c = forward_transform(np.ones(16), g)
    assert c[0] == pytest.approx(7.0)
    assert np.abs(c[1:]).max() < 1e-13


def test_single_harmonic_has_two_modes():
    g = SpectralGrid(5.0, 32)
    c = forward_transform(np.cos(2 * np.pi * g.x / 5.0), g)
    nz = np.flatnonzero(np.abs(c) > 1e-12)
    assert sorted(g.k[nz].tolist()) == [-1, 1]
    assert np.allclose(c[nz], 2.5)


def test_round_trip(rng):
    g = SpectralGrid(3.0, 64)
    f = rng.standard_normal(64)
    back = inverse_transform(forward_transform(f, g), g)
    assert np.abs(back - f).max() / np.abs(f).max() <= 1e-12


def test_transform_shape_checks():
    g = SpectralGrid(1.0, 16)
    with pytest.raises(ConfigurationError):
        forward_transform(np.zeros(15), g)
    with pytest.raises(ConfigurationError):
        inverse_transform(np.zeros(17), g)
    with pytest.raises(ConfigurationError):
        Field.from_spectral(g, np.zeros(8))


@given(st.integers(0, 2 ** 32 - 1), st.sampled_from([8, 16, 30, 64]),
       st.floats(0.5, 200.0))
def test_hermitian_and_parseval(seed, n, L):
    g = SpectralGrid(L, n)
    f = Field.from_physical(g, np.random.default_rng(seed).standard_normal(n))
    c = f.coeffs
    assert np.allclose(c[(-g.k) % n], np.conj(c), atol=1e-12 * np.abs(c).max())
    assert c[n // 2].imag == 0.0
    assert parseval_defect(f) <= 1e-12


def test_derivatives_of_harmonics():
    g = SpectralGrid(2 * math.pi, 64)
    x = g.x
    k = 5.0
    d1 = spatial_derivative(Field.from_physical(g, np.cos(k * x)), 1).values
    assert np.abs(d1 + k * np.sin(k * x)).max() / k <= 1e-10
    d3 = spatial_derivative(Field.from_physical(g, np.sin(k * x)), 3).values
    assert np.abs(d3 + k ** 3 * np.cos(k * x)).max() / k ** 3 <= 1e-10
    d0 = spatial_derivative(Field.from_physical(g, np.full(64, 3.0)), 2).values
    assert np.abs(d0).max() <= 1e-12
    with pytest.raises(UsageError):
        spatial_derivative(Field.zeros(g), 4)


def test_dealias_product_exact_square():
    g = SpectralGrid(2 * math.pi, 48)
    x = g.x
    f = Field.from_physical(g, np.cos(7 * x))
    p = dealias_product(f, f).values
    assert np.abs(p - 0.5 * (1 + np.cos(14 * x))).max() <= 1e-13
    assert np.abs(dealias_product(Field.zeros(g), f).values).max() == 0.0


def test_dealias_product_matches_lattice_convolution(rng):
    g = SpectralGrid(2 * math.pi, 24)
    K = g.band
    f = random_band_field(g, rng)
    h = random_band_field(g, rng)
    fb, hb = f.band(), h.band()
    conv = np.zeros(2 * K + 1, dtype=complex)
    for i, k1 in enumerate(range(-K, K + 1)):
        for j, k2 in enumerate(range(-K, K + 1)):
            if abs(k1 + k2) <= K:
                conv[k1 + k2 + K] += fb[i] * hb[j]
    conv /= g.length
    got = dealias_product(f, h).band()
    assert np.abs(got - conv).max() <= 1e-12 * np.abs(conv).max()
    # top retained mode squared lands outside the band and is dropped
    top = Field.from_physical(g, np.cos(K * g.x))
    sq = dealias_product(top, top)
    assert np.abs(sq.coeffs[~g.band_mask]).max() == 0.0
    assert np.abs(sq.coeffs[0]) == pytest.approx(g.length / 2)


def test_sobolev_norms():
    g = SpectralGrid(4.0, 32)
    assert sobolev_norm(Field.zeros(g), 1.3) == 0.0
    c = np.zeros(32, complex)
    c[3] = 2.0 + 1.0j
    f = Field.from_spectral(g, c)
    xi = g.xi[3]
    # the Hermitian partner carries half of the coefficient as well
    expect = math.sqrt(2 * (1 + xi) ** 1.5 * abs(0.5 * (2 + 1j)) ** 2 / 4.0)
    assert sobolev_norm(f, 0.75) == pytest.approx(expect, rel=1e-13)
    r = Field.from_physical(g, np.sin(2 * np.pi * g.x / 4.0) + 0.3)
    assert sobolev_norm(r, 0.0) == pytest.approx(math.sqrt(np.sum(r.values ** 2) * g.dx),
                                                 rel=1e-13)
    assert l2_norm(r) == sobolev_norm(r, 0.0)
    ux = spatial_derivative(r, 1)
    assert h1_norm(r) ** 2 == pytest.approx(l2_norm(r) ** 2 + l2_norm(ux) ** 2, rel=1e-13)
