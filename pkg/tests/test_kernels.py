import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbkdv import kernels
from mbkdv.multipliers import MultiplierProfile, m1_eval, m2_eval
from mbkdv.resonance import TAU, sigma3_limits

compiled = pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")


def _vecs(rng, m, count):
    return [rng.standard_normal(m) + 1j * rng.standard_normal(m) for _ in range(count)]


def _sigma_inputs(K, N, L=2 * np.pi):
    xi = 2 * np.pi / L * np.arange(-K, K + 1)
    prof = MultiplierProfile(0.8, N)
    F = xi ** 3 * m1_eval(prof, xi) ** 2
    G = 4 * xi ** 3 * m2_eval(prof, xi) ** 2
    ld, l0 = sigma3_limits(prof, xi)
    return xi, F, G, ld, l0, prof.N, prof.N / 2, TAU


@compiled
@given(st.integers(1, 12), st.integers(0, 2 ** 31))
def test_lambda3_table_backends_agree(K, seed):
    rng = np.random.default_rng(seed)
    m = 2 * K + 1
    T = rng.standard_normal((m, m))
    a, b, c = _vecs(rng, m, 3)
    x = kernels._impl.lambda3_table(T, a, b, c)
    y = kernels.python_backend.lambda3_table(T, a, b, c)
    assert abs(x - y) <= 1e-12 * (abs(y) + np.abs(T).sum())


@compiled
@given(st.integers(1, 12), st.floats(0.3, 10.0), st.integers(0, 2 ** 31))
def test_lambda3_sigma_backends_agree(K, N, seed):
    rng = np.random.default_rng(seed)
    a, b, c = _vecs(rng, 2 * K + 1, 3)
    args = _sigma_inputs(K, N)
    x = kernels._impl.lambda3_sigma(*args, a, b, c)
    y = kernels.python_backend.lambda3_sigma(*args, a, b, c)
    assert abs(x - y) <= 1e-12 * max(abs(y), 1.0) * (2 * K + 1) ** 2


@compiled
@given(st.integers(1, 8), st.sampled_from([0, 1]), st.integers(0, 2 ** 31))
def test_lambda4_pair_backends_agree(K, pair, seed):
    rng = np.random.default_rng(seed)
    m = 2 * K + 1
    W = rng.standard_normal((m, m))
    a, b, c, d = _vecs(rng, m, 4)
    x = kernels._impl.lambda4_pair(W, pair, a, b, c, d)
    y = kernels.python_backend.lambda4_pair(W, pair, a, b, c, d)
    assert abs(x - y) <= 1e-12 * m ** 3 * max(abs(y), 1.0)


@compiled
def test_thread_count_does_not_change_results(monkeypatch):
    rng = np.random.default_rng(1)
    m = 41
    T = rng.standard_normal((m, m))
    a, b, c = _vecs(rng, m, 3)
    monkeypatch.setenv("MBKDV_NUM_THREADS", "1")
    one = kernels.lambda3_table(T, a, b, c)
    monkeypatch.setenv("MBKDV_NUM_THREADS", "3")
    three = kernels.lambda3_table(T, a, b, c)
    assert one == three


def test_num_threads_parsing(monkeypatch):
    monkeypatch.setenv("MBKDV_NUM_THREADS", "garbage")
    assert kernels.num_threads() == 1
    monkeypatch.setenv("MBKDV_NUM_THREADS", "0")
    assert kernels.num_threads() == 1
    monkeypatch.setenv("MBKDV_NUM_THREADS", "4")
    assert kernels.num_threads() == 4


def test_pure_python_switch():
    env = dict(os.environ, MBKDV_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from mbkdv import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_lambda4_pair_rejects_bad_pair():
    z = np.zeros(3, complex)
    with pytest.raises(ValueError):
        kernels.python_backend.lambda4_pair(np.zeros((3, 3)), 2, z, z, z, z)
