"""Mass, energy, the two modified energies and their time derivatives.

All frequency-side quantities are hyperplane sums over the retained band,
so they coincide with the physical-space integrals for band-limited pairs.
The time-derivative right-hand sides are those of the Galerkin-truncated
flow that :mod:`mbkdv.solver` integrates: every quadrilinear term carries
the indicator that its merged frequency (xi1+xi4 or xi2+xi3) is retained.
"""
from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import UsageError
from .grid import Field, FieldPair, h1_norm, l2_norm, spatial_derivative
from .hyperplane import (hyperplane_sum_2, hyperplane_sum_3, pair_sum_bound, pair_sum_brute,
                         pair_sum_factored)
from .multipliers import MultiplierProfile, apply_I, m1_eval, m2_eval
from .resonance import TAU, _check_rho, sigma3_arrays, sigma3_limits

__all__ = [
    "mass_M",
    "energy_E",
    "energy_E_frequency",
    "modified_E1",
    "modified_E2",
    "energy_terms",
    "dE1_dt_rhs",
    "dE2_dt_rhs",
    "rhs_terms",
    "sandwich_check",
    "sandwich_check_modified",
    "SandwichReport",
    "gap_ratio",
    "lambda3_product",
    "EnergyReport",
    "energy_report",
    "EnergyCSV",
    "REALNESS_TOL",
]

REALNESS_TOL = 1e-9


def _real(z: complex, scale: float, what: str) -> tuple[float, float]:
    """Real part of ``z`` and the relative size of the discarded imaginary part."""
    resid = abs(z.imag) / max(abs(z.real), scale, 1e-300)
    if resid > REALNESS_TOL:
        warnings.warn(f"{what}: imaginary residue {resid:.2e} exceeds {REALNESS_TOL:g}",
                      RuntimeWarning, stacklevel=3)
    return z.real, resid


def mass_M(p: FieldPair) -> float:
    g = p.grid
    return math.fsum(p.u.values ** 2) * g.dx + math.fsum(p.v.values ** 2) * g.dx


def energy_E(p: FieldPair, alpha: float = 4.0) -> float:
    """Physical-space quadrature of ``u_x^2 + alpha v_x^2 - u v^2``."""
    g = p.grid
    ux = spatial_derivative(p.u, 1).values
    vx = spatial_derivative(p.v, 1).values
    parts = np.concatenate([ux ** 2, alpha * vx ** 2, -p.u.values * p.v.values ** 2])
    return math.fsum(parts) * g.dx


def _grad2(x1, x2):
    return x1 * x2


def energy_E_frequency(p: FieldPair, alpha: float = 4.0) -> float:
    a = hyperplane_sum_2(_grad2, p.u, p.u)
    b = hyperplane_sum_2(_grad2, p.v, p.v)
    c = hyperplane_sum_3(lambda x1, x2, x3: np.ones_like(x1), p.u, p.v, p.v)
    return (-a - alpha * b - c).real


def _lambda2_terms(p, profile):
    a = hyperplane_sum_2(lambda x1, x2: x1 * x2 * m1_eval(profile, x1) * m1_eval(profile, x2),
                         p.u, p.u)
    b = hyperplane_sum_2(lambda x1, x2: x1 * x2 * m2_eval(profile, x1) * m2_eval(profile, x2),
                         p.v, p.v)
    return -a.real, -4.0 * b.real


def _m1m2m2(profile):
    return lambda x1, x2, x3: (m1_eval(profile, x1) * m2_eval(profile, x2)
                               * m2_eval(profile, x3))


def modified_E1(p: FieldPair, profile: MultiplierProfile, path: str = "operator") -> float:
    """``E(I1 u, I2 v)``; ``path="lambda"`` evaluates the frequency-side form."""
    if path == "operator":
        return energy_E(FieldPair(apply_I(1, profile, p.u), apply_I(2, profile, p.v)))
    if path == "lambda":
        return sum(energy_terms(p, profile)["E1"])
    raise UsageError(f"unknown path {path!r}")


def _lambda3_sigma(p: FieldPair, profile: MultiplierProfile) -> complex:
    grid = p.grid
    xi = grid.band_xi()
    F = xi ** 3 * m1_eval(profile, xi) ** 2
    G = 4.0 * xi ** 3 * m2_eval(profile, xi) ** 2
    limd, lim0 = sigma3_limits(profile, xi)
    s = kernels.lambda3_sigma(xi, F, G, limd, lim0, profile.N, profile.N / profile.rho, TAU,
                              p.u.band(), p.v.band(), p.v.band())
    return s / grid.length ** 2


def energy_terms(p: FieldPair, profile: MultiplierProfile) -> dict:
    """Three-term breakdowns ``(Lambda2 u, Lambda2 v, Lambda3)`` of E1 and E2."""
    _check_rho(profile, False)
    l2u, l2v = _lambda2_terms(p, profile)
    l3_1 = hyperplane_sum_3(_m1m2m2(profile), p.u, p.v, p.v)
    l3_2 = _lambda3_sigma(p, profile)
    scale = abs(l2u) + abs(l2v)
    r1 = abs(l3_1.imag) / max(abs(l3_1), scale, 1e-300)
    r2 = abs(l3_2.imag) / max(abs(l3_2), scale, 1e-300)
    return {"E1": (l2u, l2v, -l3_1.real), "E2": (l2u, l2v, -l3_2.real),
            "imag_residue": max(r1, r2)}


def modified_E2(p: FieldPair, profile: MultiplierProfile) -> float:
    _check_rho(profile, False)
    l2u, l2v = _lambda2_terms(p, profile)
    s = _lambda3_sigma(p, profile)
    l3, _ = _real(s, abs(l2u) + abs(l2v), "E2 trilinear term")
    return l2u + l2v - l3


# ------------------------------------------------------- time derivatives

def _pair_tables(grid, profile, which):
    """Pair-structured quadrilinear multipliers on the band mesh.

    Returns ``(W_a, W_b)`` where ``W_a[k2, k3]`` multiplies the all-v term and
    ``W_b[k1, k4]`` the u,u,v,v term; entries with a merged frequency
    outside the band are zero.
    """
    K = grid.band
    k = grid.band_k()
    dk = grid.dk
    ka, kb = np.meshgrid(k, k, indexing="ij")
    merged = -(ka + kb)
    inband = np.abs(merged) <= K
    xa, xb, xm = dk * ka, dk * kb, dk * merged
    if which == "E1":
        # (xi1+xi4) m1(xi1+xi4) m2(xi2) m2(xi3) and (xi2+xi3) m1(xi1) m2(xi2+xi3) m2(xi4)
        wa = xm * m1_eval(profile, xm) * m2_eval(profile, xa) * m2_eval(profile, xb)
        wb = xm * m1_eval(profile, xa) * m2_eval(profile, xm) * m2_eval(profile, xb)
    elif which == "E2":
        wa = 0.5 * xm * sigma3_arrays(xm, xa, xb, profile)
        wb = 2.0 * xm * sigma3_arrays(xa, xm, xb, profile)
    else:
        raise UsageError(which)
    return (np.ascontiguousarray(np.where(inband, wa, 0.0)),
            np.ascontiguousarray(np.where(inband, wb, 0.0)))


def _pair(method, W, pair, f, g, h, w, allow_large):
    if method == "factored":
        return pair_sum_factored(W, pair, f, g, h, w)
    if method == "brute":
        return pair_sum_brute(W, pair, f, g, h, w, allow_large=allow_large)
    raise UsageError(f"unknown method {method!r}")


def rhs_terms(p: FieldPair, profile: MultiplierProfile, which: str = "E1",
              method: str = "factored", allow_large: bool = False) -> dict:
    """Individual real terms of dE1/dt or dE2/dt (each already multiplied by i)."""
    u, v = p.u, p.v
    terms = {}
    bound = 0.0
    if which == "E1":
        eta = lambda x1, x2, x3: (x1 ** 3 * m1_eval(profile, x1) ** 2
                                  + 4 * x2 ** 3 * m2_eval(profile, x2) ** 2
                                  + 4 * x3 ** 3 * m2_eval(profile, x3) ** 2)
        amm = lambda x1, x2, x3: (-3.0 * x1 * (x2 - x3) ** 2) * _m1m2m2(profile)(x1, x2, x3)
        terms["L3_eta"] = 1j * hyperplane_sum_3(eta, u, v, v)
        terms["L3_alpha"] = -1j * hyperplane_sum_3(amm, u, v, v)
        bound += abs(terms["L3_eta"]) + abs(terms["L3_alpha"])
        wa, wb = _pair_tables(p.grid, profile, "E1")
        ca, cb = 0.5, 2.0
    elif which == "E2":
        _check_rho(profile, False)
        wa, wb = _pair_tables(p.grid, profile, "E2")
        ca, cb = 1.0, 1.0
    else:
        raise UsageError(which)
    terms["L4_v"] = 1j * ca * _pair(method, wa, 0, v, v, v, v, allow_large)
    terms["L4_uuvv"] = 1j * cb * _pair(method, wb, 1, u, u, v, v, allow_large)
    # moduli bound the quadrilinear sums, so they set the rounding scale
    scale = bound + ca * pair_sum_bound(wa, 0, v, v, v, v) + cb * pair_sum_bound(wb, 1, u, u, v, v)
    out = {}
    worst = 0.0
    for name, z in terms.items():
        out[name], r = _real(z, scale, f"d{which}/dt term {name}")
        worst = max(worst, r)
    out["imag_residue"] = worst
    return out


def dE1_dt_rhs(p: FieldPair, profile: MultiplierProfile, method: str = "factored",
               allow_large: bool = False) -> float:
    t = rhs_terms(p, profile, "E1", method, allow_large)
    return math.fsum([t["L3_eta"], t["L3_alpha"], t["L4_v"], t["L4_uuvv"]])


def dE2_dt_rhs(p: FieldPair, profile: MultiplierProfile, method: str = "factored",
               allow_large: bool = False) -> float:
    t = rhs_terms(p, profile, "E2", method, allow_large)
    return t["L4_v"] + t["L4_uuvv"]


# ------------------------------------------------------------ inequalities

@dataclass(frozen=True)
class SandwichReport:
    h1_sq: float
    E: float
    M: float
    lower_rhs: float
    upper_rhs: float
    margin_lower: float
    margin_upper: float
    ok: bool


def _zero_mean(f: Field) -> bool:
    tol = 1e-9 * math.sqrt(f.grid.length) * max(l2_norm(f), 1e-300)
    return abs(f.coeffs[0]) <= tol


def sandwich_check(f: Field, g: Field) -> SandwichReport:
    """Energy versus squared H^1 norm with the explicit constants 3/8, 5, 3/4.

    Uses the standard norm ``||f||^2 + ||f_x||^2``.  Violations are
    reported through ``ok`` and the margins, never raised.
    """
    if not (_zero_mean(f) and _zero_mean(g)):
        raise UsageError("sandwich_check needs zero-mean fields")
    p = FieldPair(f, g)
    h1_sq = h1_norm(f) ** 2 + h1_norm(g) ** 2
    M = math.sqrt(l2_norm(f) ** 2 + l2_norm(g) ** 2)
    E = energy_E(p)
    lower_rhs = E + 0.375 * M ** (10.0 / 3.0) + M ** 2
    upper_rhs = 5.0 * h1_sq + 0.75 * M ** (10.0 / 3.0)
    m_lo = lower_rhs - h1_sq
    m_hi = upper_rhs - abs(E)
    # margins are compared with a rounding allowance relative to the terms
    slack = 1e-12 * (abs(lower_rhs) + h1_sq + upper_rhs + abs(E))
    return SandwichReport(h1_sq, E, M, lower_rhs, upper_rhs, m_lo, m_hi,
                          bool(m_lo >= -slack and m_hi >= -slack))


def sandwich_check_modified(p: FieldPair, profile: MultiplierProfile) -> SandwichReport:
    """Same inequalities for ``(I1 u, I2 v)`` so that E becomes E1."""
    return sandwich_check(apply_I(1, profile, p.u), apply_I(2, profile, p.v))


def gap_ratio(p: FieldPair, profile: MultiplierProfile) -> float:
    """``|E2 - E1| / (||I1 u||_{H1} ||I2 v||_{H1}^2)``."""
    Iu = apply_I(1, profile, p.u)
    Iv = apply_I(2, profile, p.v)
    den = h1_norm(Iu) * h1_norm(Iv) ** 2
    if den == 0:
        return 0.0
    _check_rho(profile, False)
    l3_1 = lambda3_product(p, profile)
    l3_2, _ = _real(_lambda3_sigma(p, profile), den, "E2 trilinear term")
    return abs(l3_2 - l3_1) / den


def lambda3_product(p: FieldPair, profile: MultiplierProfile) -> float:
    """``Lambda_3(m1 m2 m2; u, v, v)`` as the physical integral of ``I1u (I2v)^2``.

    Exact for band-limited pairs because three band frequencies cannot alias.
    """
    Iu = apply_I(1, profile, p.u.projected())
    Iv = apply_I(2, profile, p.v.projected())
    return math.fsum(Iu.values * Iv.values ** 2) * p.grid.dx


# ---------------------------------------------------------------- reports

@dataclass
class EnergyReport:
    t: float
    M: float
    E: float
    E1: float
    E2: float
    H1_I: float
    L2_I: float
    E1_terms: tuple = field(default_factory=tuple)
    E2_terms: tuple = field(default_factory=tuple)
    imag_residue: float = 0.0

    def row(self) -> list:
        return ([self.t, self.M, self.E, self.E1, self.E2, self.H1_I, self.L2_I]
                + list(self.E1_terms) + list(self.E2_terms) + [self.imag_residue])


CSV_COLUMNS = ["t", "M", "E", "E1", "E2", "H1_I", "L2_I",
               "E1_L2u", "E1_L2v", "E1_L3", "E2_L2u", "E2_L2v", "E2_L3", "imag_residue"]


def energy_report(p: FieldPair, profile: MultiplierProfile, t: float = 0.0) -> EnergyReport:
    terms = energy_terms(p, profile)
    Iu = apply_I(1, profile, p.u)
    Iv = apply_I(2, profile, p.v)
    h1 = math.sqrt(h1_norm(Iu) ** 2 + h1_norm(Iv) ** 2)
    l2 = math.sqrt(l2_norm(Iu) ** 2 + l2_norm(Iv) ** 2)
    rep = EnergyReport(float(t), mass_M(p), energy_E(p), math.fsum(terms["E1"]),
                       math.fsum(terms["E2"]), h1, l2, tuple(terms["E1"]), tuple(terms["E2"]),
                       terms["imag_residue"])
    for name in ("M", "E", "E1", "E2", "H1_I", "L2_I"):
        if not math.isfinite(getattr(rep, name)):
            raise ArithmeticError(f"non-finite {name} in energy report")
    return rep


class EnergyCSV:
    """Append-only CSV time series of :class:`EnergyReport` rows."""

    columns = CSV_COLUMNS

    def __init__(self, path):
        self.path = path
        with open(path, "w", newline="") as fh:
            csv.writer(fh).writerow(self.columns)

    def append(self, rep: EnergyReport):
        with open(self.path, "a", newline="") as fh:
            csv.writer(fh).writerow([repr(float(x)) for x in rep.row()])

    def __call__(self, t, pair, profile):
        self.append(energy_report(pair, profile, t))

    def observer(self, profile):
        """Callback ``fn(t, pair)`` for :func:`mbkdv.solver.evolve`."""
        return lambda t, pair: self(t, pair, profile)
