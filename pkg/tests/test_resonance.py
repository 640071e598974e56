import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbkdv.errors import RhoRefusal, UsageError
from mbkdv.multipliers import MultiplierProfile, m1_eval
from mbkdv.resonance import (M31, M41, M42, QuadFreq, TripleFreq, alpha3, alpha3_compact,
                             TAU, certify_lemma31, certify_lemma32, eta3, leading_coefficient,
                             rho_scan, sigma3, sigma3_arrays, sigma3_limits)

P = MultiplierProfile(0.75, 4.0)
freq = st.floats(-1e4, 1e4, allow_nan=False)


def test_alpha3_examples():
    assert alpha3((1.0, 1.0)) == -27.0
    assert alpha3_compact((1.0, 1.0)) == -27.0
    assert alpha3((0.0, 5.5)) == 0.0
    assert alpha3((2.0, -1.0)) == 0.0
    t = TripleFreq(2.0, -1.0)
    assert t.xi3 == -1.0


@given(freq, freq)
def test_alpha3_factorization(a, b):
    x = alpha3((a, b))
    y = alpha3_compact((a, b))
    scale = abs(a) ** 3 + 4 * abs(b) ** 3 + 4 * abs(a + b) ** 3
    assert abs(x - y) <= 1e-12 * scale


def test_sigma3_frozen_values():
    assert sigma3((20.0, -7.0), P) == pytest.approx(0.2789783680540518, rel=1e-13)
    assert sigma3((0.0, 9.0), P) == pytest.approx(0.39283710065919303, rel=1e-13)
    # on xi2 = xi3 in the power branch f''/(6 xi1) = (15/24) (N/xi1)^(1/2)
    assert sigma3((20.0, -10.0), P) == pytest.approx(0.625 * math.sqrt(0.2), rel=1e-13)


@given(st.floats(-2.0, 2.0), st.floats(-2.0, 2.0))
def test_sigma3_plateau_exactly_one(a, b):
    if abs(a + b) <= 2.0:
        assert sigma3((a, b), P) == 1.0


@given(st.floats(2.5, 1e3), st.floats(1e-7, 1e-3))
def test_sigma3_continuous_across_guard(x1, eps):
    # approaching the resonance line xi2 = xi3 from outside the guard
    d = eps * x1
    near = sigma3((x1, -0.5 * (x1 - d)), P)
    lim, _ = sigma3_limits(P, x1)
    assert near == pytest.approx(float(lim), rel=1e-3)


def test_sigma3_limits_match_line_values():
    x1 = np.array([5.0, 7.0, 30.0])
    h = 1e-3 * x1
    f = lambda x: x ** 3 * m1_eval(P, x) ** 2
    fd = (f(x1 + h) - 2 * f(x1) + f(x1 - h)) / h ** 2 / (6 * x1)
    ld, _ = sigma3_limits(P, x1)
    assert np.allclose(ld, fd, rtol=1e-5)
    ld0, l00 = sigma3_limits(P, 0.0)
    assert ld0 == 1.0 and l00 == 1.0


def test_sigma3_rejects_off_plane_and_rho():
    with pytest.raises(UsageError):
        sigma3_arrays(1.0, 1.0, 1.0, P)
    q = MultiplierProfile(0.75, 4.0, 2.5)
    with pytest.raises(RhoRefusal):
        sigma3((10.0, -5.0), q)
    assert math.isinf(sigma3((10.0, -5.0), q, allow_rho=True))


@given(freq, freq)
def test_M31_vanishes(a, b):
    t = (a, b)
    m = M31(t, P)
    scale = abs(a) ** 3 + 4 * abs(b) ** 3 + 4 * abs(a + b) ** 3 + 1.0
    if abs(alpha3_compact(t)) >= TAU * scale:
        # nonresonant: relative to the numerator itself
        assert abs(m) <= 1e-9 * abs(eta3(t, P))
    else:
        # inside the guard the numerator is pure cancellation
        assert abs(m) <= 1e-9 * scale


def test_M31_exact_cases():
    assert M31((1.0, -0.5), P) == 0.0
    assert M31((0.0, 20.0), P) == pytest.approx(0.0, abs=1e-9 * abs(eta3((0.0, 20.0), P)))


def test_M4_prefactor_slices_and_plateau():
    assert M41((3.0, 5.0, -5.0), P) == 0.0
    assert M42((3.0, 5.0, -5.0), P) == 0.0
    assert M41(QuadFreq(7.0, 1.0, 2.0), P) == pytest.approx(-1.5 * sigma3((-3.0, 1.0), P))
    q = QuadFreq(0.4, -0.3, 0.1)
    assert M42(q, P) == 2 * (-0.3 + 0.1)
    assert q.xi4 == pytest.approx(-0.2)
    assert M42((40.0, -13.0, 2.0), P) == pytest.approx(-4.3292949711334385, rel=1e-13)


def test_leading_coefficient():
    assert leading_coefficient(0.75, 2.0) == 0.0
    assert leading_coefficient(0.75, 1.0) == pytest.approx(1 - math.sqrt(2), rel=1e-15)
    assert leading_coefficient(0.75, 1.0) == pytest.approx(-0.41421, abs=1e-5)
    s = 1 - 1e-9
    assert np.all(np.abs(leading_coefficient(s, [1.0, 1.5, 3.0])) < 1e-8)


def test_rho_scan_rows():
    rows = {r["rho"]: r for r in rho_scan(0.75, 16.0, [1.0, 1.5, 2.0, 3.0], n_xi1=9)}
    assert rows[2.0]["coefficient"] == 0.0
    assert rows[2.0]["normalized_variation"] < 2.0
    for rho in (1.0, 1.5, 3.0):
        assert rows[rho]["coefficient"] != 0.0
        assert rows[rho]["monotone_increasing"]
    with pytest.raises(UsageError):
        rho_scan(0.75, 16.0, [0.0])


def test_certify_lemma31_small():
    r = certify_lemma31(P, 20000, (16, 32))
    assert r.passed
    assert r.stats["plateau_exact"]
    assert set(r.stability) == {"case1", "case2", "case3", "ray", "plateau"}
    json.loads(r.to_json())
    bad = certify_lemma31(MultiplierProfile(0.75, 4.0, 2.5), 20000, (16, 32, 64, 128),
                          allow_rho=True)
    assert not bad.passed
    assert bad.stability["ray"] > 100
    with pytest.raises(RhoRefusal):
        certify_lemma31(MultiplierProfile(0.75, 4.0, 2.5), 100, (16,))
    with pytest.raises(UsageError):
        certify_lemma31(P, 0)


def test_certify_lemma32_small():
    r = certify_lemma32(P, 20000, (16, 32))
    assert r.passed
    assert r.stats["zero_slices_exact"]
    lo, hi = r.stats["m41_case2_xi2_over_delta"]
    assert 0.25 <= lo and hi <= 0.75
    with pytest.raises(UsageError):
        certify_lemma32(P, -1)
