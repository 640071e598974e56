import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from mbkdv.grid import Field, FieldPair, SpectralGrid

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def random_band_field(grid, rng, K=None, zero_mean=True, decay=0.0):
    """Real field with random coefficients on |k| <= K."""
    K = grid.band if K is None else K
    c = np.zeros(grid.n, dtype=complex)
    k = np.arange(0, K + 1)
    a = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * (1.0 + k) ** -decay
    a[0] = 0.0 if zero_mean else a[0].real
    c[k] = a
    c[(-k[1:]) % grid.n] = np.conj(a[1:])
    return Field.from_spectral(grid, c * grid.length / grid.n)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def small_grid():
    return SpectralGrid(2 * math.pi, 32)


@pytest.fixture
def random_pair(small_grid, rng):
    return FieldPair(random_band_field(small_grid, rng), random_band_field(small_grid, rng))


# one line per acceptance criterion, printed after the run
ACCEPTANCE = {}


def record_criterion(cid, ok, seconds, limit, detail):
    ok = bool(ok) and seconds < limit
    ACCEPTANCE[cid] = (f"C{cid:<2d} {'PASS' if ok else 'FAIL'}  {seconds:7.1f}s "
                       f"(limit {limit:g}s)  {detail}")
    print(ACCEPTANCE[cid])
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for cid in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[cid])
