import csv
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mbkdv.energies import (CSV_COLUMNS, EnergyCSV, dE1_dt_rhs, dE2_dt_rhs, energy_E,
                            energy_E_frequency, energy_report, energy_terms, gap_ratio,
                            lambda3_product, mass_M, modified_E1, modified_E2, rhs_terms,
                            sandwich_check, sandwich_check_modified)
from mbkdv.errors import RhoRefusal, UsageError
from mbkdv.grid import Field, FieldPair, SpectralGrid
from mbkdv.hyperplane import hyperplane_sum_3
from mbkdv.multipliers import MultiplierProfile, m1_eval, m2_eval
from mbkdv.solver import SolverConfig, evolve, random_lowmode

from conftest import random_band_field

G32 = SpectralGrid(2 * math.pi, 32)
P = MultiplierProfile(0.8, 2.0)


def _fixed_pair():
    return FieldPair(random_lowmode(G32, 11, 10), random_lowmode(G32, 12, 10))


def test_frozen_values():
    p = _fixed_pair()
    assert mass_M(p) == pytest.approx(3.8047800449129863, rel=1e-12)
    assert energy_E(p) == pytest.approx(70.1809809677101, rel=1e-12)
    assert modified_E1(p, P) == pytest.approx(41.55254509877307, rel=1e-12)
    assert modified_E2(p, P) == pytest.approx(41.59015981183515, rel=1e-12)
    assert dE1_dt_rhs(p, P) == pytest.approx(9.41362634062217, rel=1e-10)
    assert dE2_dt_rhs(p, P) == pytest.approx(-0.027576862179649664, rel=1e-9)


def test_zero_pair():
    z = FieldPair(Field.zeros(G32), Field.zeros(G32))
    assert mass_M(z) == 0 and energy_E(z) == 0
    assert modified_E1(z, P) == 0 and modified_E2(z, P) == 0


def test_cosine_closed_forms():
    g = SpectralGrid(10.0, 64)
    k = 2 * math.pi * 3 / 10.0
    p = FieldPair(Field.from_physical(g, np.cos(k * g.x)), Field.zeros(g))
    assert mass_M(p) == pytest.approx(5.0, rel=1e-14)
    assert energy_E(p) == pytest.approx(k * k * 5.0, rel=1e-14)


@given(st.integers(0, 2 ** 31), st.floats(1.0, 60.0))
def test_energy_two_forms_agree(seed, L):
    rng = np.random.default_rng(seed)
    g = SpectralGrid(L, 48)
    p = FieldPair(random_band_field(g, rng, zero_mean=False), random_band_field(g, rng))
    a, b = energy_E(p), energy_E_frequency(p)
    scale = energy_E(FieldPair(p.u, Field.zeros(g))) + abs(a) + 1e-300
    assert abs(a - b) <= 1e-11 * scale


@given(st.integers(0, 2 ** 31), st.floats(0.3, 8.0), st.floats(0.75, 0.99))
def test_E1_paths_agree(seed, N, s):
    rng = np.random.default_rng(seed)
    p = FieldPair(random_band_field(G32, rng), random_band_field(G32, rng))
    prof = MultiplierProfile(s, N)
    a, b = modified_E1(p, prof), modified_E1(p, prof, path="lambda")
    assert abs(a - b) <= 1e-11 * (abs(a) + mass_M(p))
    with pytest.raises(UsageError):
        modified_E1(p, prof, path="other")


@given(st.integers(0, 2 ** 31), st.floats(0.3, 8.0))
def test_lambda3_product_matches_lattice_sum(seed, N):
    rng = np.random.default_rng(seed)
    p = FieldPair(random_band_field(G32, rng), random_band_field(G32, rng))
    prof = MultiplierProfile(0.85, N)
    m = lambda a, b, c: m1_eval(prof, a) * m2_eval(prof, b) * m2_eval(prof, c)
    lat = hyperplane_sum_3(m, p.u, p.v, p.v).real
    fast = lambda3_product(p, prof)
    assert fast == pytest.approx(lat, rel=1e-11, abs=1e-12)


def test_plateau_pair_energies_coincide(rng):
    prof = MultiplierProfile(0.8, 20.0)
    p = FieldPair(random_band_field(G32, rng), random_band_field(G32, rng))
    E = energy_E(p)
    assert modified_E1(p, prof) == pytest.approx(E, rel=1e-13)
    assert modified_E2(p, prof) == pytest.approx(E, rel=1e-12)
    assert gap_ratio(p, prof) <= 1e-13


def test_energy_terms(rng):
    p = FieldPair(random_band_field(G32, rng), random_band_field(G32, rng))
    t = energy_terms(p, P)
    assert math.fsum(t["E1"]) == pytest.approx(modified_E1(p, P), rel=1e-12)
    assert math.fsum(t["E2"]) == pytest.approx(modified_E2(p, P), rel=1e-12)
    assert t["E1"][:2] == t["E2"][:2]
    assert t["imag_residue"] < 1e-12


def test_rho_refused():
    q = MultiplierProfile(0.8, 2.0, 3.0)
    p = _fixed_pair()
    with pytest.raises(RhoRefusal):
        modified_E2(p, q)
    with pytest.raises(RhoRefusal):
        dE2_dt_rhs(p, q)
    # E1 has no trilinear correction and accepts any rho
    assert math.isfinite(modified_E1(p, q))


def test_rhs_vanish_without_v(rng):
    p = FieldPair(random_band_field(G32, rng), Field.zeros(G32))
    assert dE1_dt_rhs(p, P) == 0.0
    assert dE2_dt_rhs(p, P) == 0.0


def test_rhs_routes_agree():
    p = _fixed_pair()
    for fn in (dE1_dt_rhs, dE2_dt_rhs):
        a, b = fn(p, P), fn(p, P, method="brute")
        assert a == pytest.approx(b, rel=1e-12)
    with pytest.raises(UsageError):
        dE1_dt_rhs(p, P, method="fast")
    with pytest.raises(UsageError):
        rhs_terms(p, P, which="E3")


def test_plateau_rhs_trilinear_terms_cancel(rng):
    prof = MultiplierProfile(0.8, 20.0)
    p = FieldPair(random_band_field(G32, rng), random_band_field(G32, rng))
    t = rhs_terms(p, prof, "E1")
    assert abs(t["L3_eta"] + t["L3_alpha"]) <= 1e-12 * abs(t["L3_eta"])
    # with I the identity, E1 = E and the flow conserves E
    ref = abs(t["L3_eta"])
    assert abs(dE1_dt_rhs(p, prof)) <= 1e-12 * ref
    assert abs(dE2_dt_rhs(p, prof)) <= 1e-12 * ref


def test_rhs_matches_short_time_difference():
    g = SpectralGrid(8 * math.pi, 64)
    p = FieldPair(random_lowmode(g, 5, 12), random_lowmode(g, 6, 12))
    prof = MultiplierProfile(0.85, 1.0)

    def central(E, h):
        fwd = evolve(p, SolverConfig(g, dt=h / 8, T=h)).final
        bwd = evolve(p, SolverConfig(g, dt=-h / 8, T=h)).final
        return (E(fwd, prof) - E(bwd, prof)) / (2 * h)

    for E, rhs in ((modified_E1, dE1_dt_rhs), (modified_E2, dE2_dt_rhs)):
        fd = (4 * central(E, 5e-5) - central(E, 1e-4)) / 3
        assert fd == pytest.approx(rhs(p, prof), rel=1e-7)


def test_sandwich_trivial_cases(rng):
    z = Field.zeros(G32)
    r = sandwich_check(z, z)
    assert r.ok and r.h1_sq == 0 and r.E == 0
    f = random_band_field(G32, rng)
    r = sandwich_check(f, z)
    assert r.ok and r.margin_lower >= 0
    with pytest.raises(UsageError):
        sandwich_check(Field.from_physical(G32, np.ones(32)), z)


@given(st.integers(0, 2 ** 31), st.floats(0.01, 20.0))
def test_sandwich_holds(seed, amp):
    rng = np.random.default_rng(seed)
    f = random_band_field(G32, rng).scaled(amp)
    h = random_band_field(G32, rng).scaled(amp)
    assert sandwich_check(f, h).ok
    assert sandwich_check_modified(FieldPair(f, h), P).ok


def test_gap_ratio_amplitude_invariant(rng):
    p = FieldPair(random_band_field(G32, rng), random_band_field(G32, rng))
    q = FieldPair(p.u.scaled(3.0), p.v.scaled(3.0))
    assert gap_ratio(q, P) == pytest.approx(gap_ratio(p, P), rel=1e-10)
    z = FieldPair(p.u, Field.zeros(G32))
    assert gap_ratio(z, P) == 0.0


def test_energy_report_and_csv(tmp_path, rng):
    p = FieldPair(random_lowmode(G32, 11, 5), random_lowmode(G32, 12, 5))
    rep = energy_report(p, P, t=0.5)
    assert rep.E1 == pytest.approx(modified_E1(p, P), rel=1e-12)
    assert len(rep.row()) == len(CSV_COLUMNS)
    path = tmp_path / "e.csv"
    out = EnergyCSV(str(path))
    evolve(p, SolverConfig(G32, dt=1e-3, T=2e-3), observers=[(1, out.observer(P))])
    rows = list(csv.reader(open(path)))
    assert rows[0] == CSV_COLUMNS
    assert len(rows) == 4
    assert [float(r[0]) for r in rows[1:]] == [0.0, 1e-3, 2e-3]


def test_realness_warning_not_raised_on_clean_data():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        modified_E2(_fixed_pair(), P)
        dE2_dt_rhs(_fixed_pair(), P)
