"""Resonance function and the trilinear/quadrilinear correction multipliers.

sigma_3 is the ratio ``eta_3 / alpha_3`` with

    eta_3   = xi1^3 m1(xi1)^2 + 4 xi2^3 m2(xi2)^2 + 4 xi3^3 m2(xi3)^2
    alpha_3 = xi1^3 + 4 xi2^3 + 4 xi3^3 = -3 xi1 (xi2 - xi3)^2.

Writing ``f(x) = x^3 m1(x)^2`` and ``delta = xi2 - xi3``, the choice
``m2(x) = m1(2x)`` gives ``eta_3 = -(f(xi1+delta) - 2 f(xi1) + f(xi1-delta)) / 2``
so both zero lines of ``alpha_3`` are removable:

    delta -> 0:  sigma_3 -> f''(xi1) / (6 xi1)
    xi1   -> 0:  sigma_3 -> m2(xi2)^2 + (2/3) xi2 m2(xi2) m2'(xi2)

Below the guard ``|alpha_3| < tau (|xi1|^3 + 4|xi2|^3 + 4|xi3|^3 + 1)`` the
limit is returned instead of the (cancellation-dominated) ratio.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import RhoRefusal, UsageError
from .multipliers import MultiplierProfile, m1_eval, m2_eval

__all__ = [
    "TAU",
    "TripleFreq",
    "QuadFreq",
    "alpha3",
    "alpha3_compact",
    "eta3",
    "sigma3",
    "sigma3_arrays",
    "sigma3_limits",
    "M31",
    "M41",
    "M42",
    "leading_coefficient",
    "rho_scan",
    "certify_lemma31",
    "certify_lemma32",
    "CertificationReport",
]

TAU = 1e-8


@dataclass(frozen=True)
class TripleFreq:
    """Point of the plane xi1 + xi2 + xi3 = 0; xi3 is derived."""

    xi1: object
    xi2: object

    @property
    def xi3(self):
        return -(np.asarray(self.xi1, dtype=float) + np.asarray(self.xi2, dtype=float))

    def arrays(self):
        return np.asarray(self.xi1, dtype=float), np.asarray(self.xi2, dtype=float), self.xi3


@dataclass(frozen=True)
class QuadFreq:
    """Point of xi1 + xi2 + xi3 + xi4 = 0; xi4 is derived."""

    xi1: object
    xi2: object
    xi3: object

    @property
    def xi4(self):
        a, b, c = (np.asarray(z, dtype=float) for z in (self.xi1, self.xi2, self.xi3))
        return -((a + b) + c)

    def arrays(self):
        a, b, c = (np.asarray(z, dtype=float) for z in (self.xi1, self.xi2, self.xi3))
        return a, b, c, self.xi4


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _triple(t):
    if isinstance(t, TripleFreq):
        return t.arrays()
    x1, x2 = (np.asarray(z, dtype=float) for z in t[:2])
    return x1, x2, -(x1 + x2)


def alpha3(t) -> float:
    x1, x2, x3 = _triple(t)
    return _scalar(x1 ** 3 + 4.0 * x2 ** 3 + 4.0 * x3 ** 3)


def alpha3_compact(t) -> float:
    x1, x2, x3 = _triple(t)
    return _scalar(-3.0 * x1 * (x2 - x3) ** 2)


def eta3(t, profile: MultiplierProfile):
    x1, x2, x3 = _triple(t)
    return _scalar(_eta(x1, x2, x3, profile))


def _eta(x1, x2, x3, profile):
    return (x1 ** 3 * m1_eval(profile, x1) ** 2
            + 4.0 * x2 ** 3 * m2_eval(profile, x2) ** 2
            + 4.0 * x3 ** 3 * m2_eval(profile, x3) ** 2)


def sigma3_limits(profile: MultiplierProfile, xi):
    """Both removable-singularity limits evaluated at ``xi``.

    Returns ``(lim_delta, lim_zero)``: the limit on xi2 = xi3 as a function
    of xi1, and the limit on xi1 = 0 as a function of xi2.  Both are even,
    and equal 1 at the origin.
    """
    xi = np.asarray(xi, dtype=float)
    m = m1_eval(profile, xi)
    d1 = m1_eval(profile, xi, 1)
    d2 = m1_eval(profile, xi, 2)
    # f''/(6 xi) with f = xi^3 m1^2
    lim_delta = m * m + 2.0 * xi * m * d1 + xi * xi * (d1 * d1 + m * d2) / 3.0
    n = m2_eval(profile, xi)
    n1 = m2_eval(profile, xi, 1)
    lim_zero = n * n + (2.0 / 3.0) * xi * n * n1
    return lim_delta, lim_zero


def _check_rho(profile, allow_rho):
    if profile.rho != 2.0 and not allow_rho:
        raise RhoRefusal(
            f"sigma_3 needs rho = 2 for its resonance limits to exist (got rho={profile.rho}); "
            "pass allow_rho=True for the raw ratio"
        )


def sigma3_arrays(x1, x2, x3, profile: MultiplierProfile, allow_rho: bool = False,
                  tau: float = TAU):
    """sigma_3 on arrays of zero-sum triples (all three components supplied)."""
    _check_rho(profile, allow_rho)
    x1, x2, x3 = np.broadcast_arrays(*(np.asarray(z, dtype=float) for z in (x1, x2, x3)))
    shape = x1.shape
    x1, x2, x3 = (np.ravel(z) for z in (x1, x2, x3))
    scale = np.abs(x1) ** 3 + 4.0 * np.abs(x2) ** 3 + 4.0 * np.abs(x3) ** 3 + 1.0
    resid = np.abs(x1 + x2 + x3)
    if np.any(resid > 1e-12 * np.cbrt(scale) + 1e-300):
        raise UsageError("frequency triple is not on the zero-sum plane")
    N, rho = profile.N, profile.rho
    d = x2 - x3
    al = -3.0 * x1 * d * d
    eta = _eta(x1, x2, x3, profile)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = eta / al
    if profile.rho == 2.0:
        guard = np.abs(al) < tau * scale
        if guard.any():
            ld, _ = sigma3_limits(profile, x1[guard])
            _, l0 = sigma3_limits(profile, x2[guard])
            sig[guard] = np.where(np.abs(d[guard]) <= np.abs(x1[guard]), ld, l0)
    else:
        # no removable limit: the ratio blows up on the resonance lines
        sig = np.where(al == 0.0, np.where(eta == 0.0, np.nan, np.copysign(np.inf, eta * al)), sig)
    plat = (np.abs(x1) <= N) & (np.abs(x2) <= N / rho) & (np.abs(x3) <= N / rho)
    return np.where(plat, 1.0, sig).reshape(shape)


def sigma3(t, profile: MultiplierProfile, allow_rho: bool = False, tau: float = TAU):
    x1, x2, x3 = _triple(t)
    return _scalar(sigma3_arrays(x1, x2, x3, profile, allow_rho, tau))


def M31(t, profile: MultiplierProfile, allow_rho: bool = False):
    """``eta_3 - alpha_3 sigma_3``; zero by construction up to rounding."""
    x1, x2, x3 = _triple(t)
    sig = sigma3_arrays(x1, x2, x3, profile, allow_rho)
    al = -3.0 * x1 * (x2 - x3) ** 2
    return _scalar(_eta(x1, x2, x3, profile) - al * sig)


def _quad(q):
    if isinstance(q, QuadFreq):
        return q.arrays()
    a, b, c = (np.asarray(z, dtype=float) for z in q[:3])
    return a, b, c, -((a + b) + c)


def M41(q, profile: MultiplierProfile, allow_rho: bool = False):
    """``(xi1 + xi4) sigma_3(xi1 + xi4, xi2, xi3) / 2``; xi1 + xi4 = -(xi2 + xi3)."""
    _, x2, x3, _ = _quad(q)
    p = -(x2 + x3)
    sig = sigma3_arrays(p, x2, x3, profile, allow_rho)
    with np.errstate(invalid="ignore"):
        # 0 * inf on resonant slices is nan for rho != 2; rho = 2 stays finite
        return _scalar(0.5 * p * sig)


def M42(q, profile: MultiplierProfile, allow_rho: bool = False):
    """``2 (xi2 + xi3) sigma_3(xi1, xi2 + xi3, xi4)`` (symmetrized form)."""
    x1, x2, x3, _ = _quad(q)
    p = x2 + x3
    x4 = -(x1 + p)
    sig = sigma3_arrays(x1, p, x4, profile, allow_rho)
    with np.errstate(invalid="ignore"):
        return _scalar(2.0 * p * sig)


def leading_coefficient(s: float, rho):
    """Coefficient of the un-cancelled ``N^(2-2s) N1^(2s+1)`` term of eta_3 on the ray."""
    rho = np.asarray(rho, dtype=float)
    return _scalar(1.0 - (2.0 / rho) ** (2.0 - 2.0 * s))


# ---------------------------------------------------------------- rho scan

def rho_scan(s: float, N: float, rho_grid, n_xi1: int = 25, thetas=None,
             xi1_range=(4.0, 512.0)):
    """Leading coefficient and ray sup of |sigma_3| for each rho.

    The ray is ``xi1 = N1``, ``xi2 - xi3 = theta N1^(-1/2)`` with
    ``theta`` in ``[0.1, 1]`` (the exact resonance theta = 0 is excluded
    because the ratio is infinite there for rho != 2).
    """
    rho_grid = [float(r) for r in rho_grid]
    if any(not r > 0 for r in rho_grid):
        raise UsageError("rho values must be positive")
    thetas = np.linspace(0.1, 1.0, 19) if thetas is None else np.asarray(thetas, float)
    xi1 = N * np.geomspace(xi1_range[0], xi1_range[1], n_xi1)
    X, TH = np.meshgrid(xi1, thetas, indexing="ij")
    d = TH / np.sqrt(X)
    x2 = -0.5 * (X - d)
    x3 = -(X + x2)
    norm = (xi1 / N) ** (2.0 - 2.0 * s)
    rows = []
    for rho in rho_grid:
        prof = MultiplierProfile(s, N, rho)
        sig = np.abs(sigma3_arrays(X, x2, x3, prof, allow_rho=True))
        sup = sig.max(axis=1)
        nsup = sup * norm
        steps = np.diff(sup)
        rows.append({
            "rho": rho,
            "coefficient": leading_coefficient(s, rho),
            "xi1": xi1.tolist(),
            "ray_sup": sup.tolist(),
            "normalized_sup": nsup.tolist(),
            "raw_growth": float(sup[-1] / sup[0]),
            "normalized_variation": float(nsup.max() / nsup.min()),
            "monotone_increasing": bool(np.all(steps > 0)),
            "nonincreasing": bool(np.all(steps <= 1e-12 * sup[:-1])),
        })
    return rows


# ---------------------------------------------------------- certification

@dataclass
class CertificationReport:
    lemma: str
    records: list
    stability: dict
    passed: bool
    stats: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps({"lemma": self.lemma, "passed": self.passed, "stability": self.stability,
                           "stats": self.stats, "records": self.records}, indent=2)


def _loguniform(rng, lo, hi, size):
    return np.exp(rng.uniform(np.log(lo), np.log(hi), size))


def _signs(rng, size):
    return rng.choice([-1.0, 1.0], size)


def _split(total, fractions):
    counts = [int(total * f) for f in fractions]
    counts[0] += total - sum(counts)
    return counts


def _triples_lemma31(rng, N, count):
    """Stratified triples as (case, xi1, xi2, xi3) blocks, in units where N is given."""
    c1, c2, c3, cr, cp = _split(count, [0.30, 0.25, 0.25, 0.15, 0.05])
    out = {}
    # |delta| << |xi1|
    a = _signs(rng, c1) * N * _loguniform(rng, 0.5, 1e4, c1)
    d = _signs(rng, c1) * np.abs(a) * _loguniform(rng, 1e-8, 0.25, c1)
    out["case1"] = (a, d)
    # |delta| ~ |xi1|
    a = _signs(rng, c2) * N * _loguniform(rng, 0.5, 1e4, c2)
    d = _signs(rng, c2) * np.abs(a) * _loguniform(rng, 0.25, 4.0, c2)
    out["case2"] = (a, d)
    # |xi1| << |delta|
    d = _signs(rng, c3) * N * _loguniform(rng, 1.0, 2e4, c3)
    a = _signs(rng, c3) * np.abs(d) * _loguniform(rng, 1e-8, 0.25, c3)
    out["case3"] = (a, d)
    # resonance ray |xi2 - xi3| <= xi1^(-1/2), xi1 >= 4N
    a = _signs(rng, cr) * N * _loguniform(rng, 4.0, 512.0, cr)
    d = rng.uniform(-1.0, 1.0, cr) / np.sqrt(np.abs(a))
    out["ray"] = (a, d)
    blocks = {}
    for case, (a, d) in out.items():
        x2 = -0.5 * (a - d)
        blocks[case] = (a, x2, -(a + x2))
    # plateau: max |xi_i| <= N/2
    x1 = rng.uniform(-0.5 * N, 0.5 * N, 4 * cp)
    x2 = rng.uniform(-0.5 * N, 0.5 * N, 4 * cp)
    x3 = -(x1 + x2)
    keep = np.abs(x3) <= 0.5 * N
    blocks["plateau"] = (x1[keep][:cp], x2[keep][:cp], x3[keep][:cp])
    return blocks


def _stable(values):
    v = np.asarray(values, dtype=float)
    if np.all(v == 0):
        return 1.0
    if np.any(~np.isfinite(v)) or np.any(v <= 0):
        return float("inf")
    return float(v.max() / v.min())


def _finish(lemma, records, s, rho, extra_stats=None, exact_ok=True):
    cases = sorted({r["case"] for r in records})
    stability = {}
    for case in cases:
        vals = [r["fitted_C"] for r in records if r["case"] == case]
        stability[case] = _stable(vals)
    ok = all(v < 2.0 for v in stability.values()) and exact_ok
    for r in records:
        r["pass"] = bool(stability[r["case"]] < 2.0 and exact_ok)
    return CertificationReport(lemma, records, stability, bool(ok), extra_stats or {})


def _record(s, N, rho, case, vals):
    vals = np.asarray(vals, dtype=float)
    finite = np.isfinite(vals)
    fitted = float(np.percentile(vals, 99.9)) if finite.all() else float("inf")
    raw = float(np.max(vals)) if finite.all() else float("inf")
    return {"s": s, "N": float(N), "rho": rho, "case": case, "samples": int(vals.size),
            "fitted_C": fitted, "raw_max": raw}


def _seeds(seed, count):
    return [np.random.default_rng(ss) for ss in np.random.SeedSequence(seed).spawn(count)]


def certify_lemma31(profile: MultiplierProfile, sample_count: int = 100_000,
                    N_list=(16, 32, 64, 128), seed: int = 0,
                    allow_rho: bool = False) -> CertificationReport:
    """Empirical constant ``sup |sigma_3| N_max^(2-2s) N^(2s-2)`` per stratum and N."""
    if sample_count <= 0:
        raise UsageError("sample_count must be positive")
    _check_rho(profile, allow_rho)
    s, rho = profile.s, profile.rho
    records = []
    plateau_exact = True
    for N, rng in zip(N_list, _seeds(seed, len(N_list))):
        prof = profile.with_N(N)
        for case, (x1, x2, x3) in _triples_lemma31(rng, N, sample_count).items():
            sig = sigma3_arrays(x1, x2, x3, prof, allow_rho=True)
            nmax = np.maximum(np.maximum(np.abs(x1), np.abs(x2)), np.abs(x3))
            if case == "plateau":
                plateau_exact &= bool(np.all(sig == 1.0))
            const = np.abs(sig) * (nmax / N) ** (2.0 - 2.0 * s)
            records.append(_record(s, N, rho, case, const))
    return _finish("sigma3", records, s, rho, {"plateau_exact": plateau_exact},
                   exact_ok=plateau_exact)


def _quads_lemma32(rng, N, count):
    c = _split(count, [0.2, 0.2, 0.2, 0.2, 0.1, 0.1])
    blocks = {}

    def spread(p, k):
        e = _signs(rng, k) * np.abs(p) * _loguniform(rng, 1e-3, 4.0, k)
        return 0.5 * p + e

    # M41 strata: p = xi1 + xi4, delta = xi2 - xi3
    def m41(p, d, k):
        x2 = 0.5 * (d - p)
        x3 = -(p + x2)
        x1 = spread(p, k)
        return x1, x2, x3

    p = _signs(rng, c[0]) * N * _loguniform(rng, 0.5, 1e4, c[0])
    d = _signs(rng, c[0]) * np.abs(p) * _loguniform(rng, 1e-8, 4.0, c[0])
    blocks["m41_case1"] = m41(p, d, c[0])
    d = _signs(rng, c[1]) * N * _loguniform(rng, 1.0, 2e4, c[1])
    p = _signs(rng, c[1]) * np.abs(d) * _loguniform(rng, 1e-8, 0.25, c[1])
    blocks["m41_case2"] = m41(p, d, c[1])
    p = _signs(rng, c[4]) * N * _loguniform(rng, 4.0, 512.0, c[4])
    d = rng.uniform(-1.0, 1.0, c[4]) / np.sqrt(np.abs(p))
    blocks["m41_ray"] = m41(p, d, c[4])

    # M42 strata: triple (xi1, q, xi4) with q = xi2 + xi3, delta' = q - xi4
    def m42(x1, d, k):
        q = 0.5 * (d - x1)
        x2 = spread(q, k)
        x3 = q - x2
        return x1, x2, x3

    a = _signs(rng, c[2]) * N * _loguniform(rng, 0.5, 1e4, c[2])
    d = _signs(rng, c[2]) * np.abs(a) * _loguniform(rng, 1e-8, 4.0, c[2])
    blocks["m42_case1"] = m42(a, d, c[2])
    d = _signs(rng, c[3]) * N * _loguniform(rng, 1.0, 2e4, c[3])
    a = _signs(rng, c[3]) * np.abs(d) * _loguniform(rng, 1e-8, 0.25, c[3])
    blocks["m42_case2"] = m42(a, d, c[3])
    a = _signs(rng, c[5]) * N * _loguniform(rng, 4.0, 512.0, c[5])
    d = rng.uniform(-1.0, 1.0, c[5]) / np.sqrt(np.abs(a))
    blocks["m42_ray"] = m42(a, d, c[5])
    return blocks


def certify_lemma32(profile: MultiplierProfile, sample_count: int = 100_000,
                    N_list=(16, 32, 64, 128), seed: int = 0,
                    allow_rho: bool = False) -> CertificationReport:
    """Empirical constant ``sup (|M41|+|M42|) N_max^(1-2s) N^(2s-2)``."""
    if sample_count <= 0:
        raise UsageError("sample_count must be positive")
    _check_rho(profile, allow_rho)
    s, rho = profile.s, profile.rho
    records = []
    ratio_lo, ratio_hi = np.inf, -np.inf
    zero_exact = True
    for N, rng in zip(N_list, _seeds(seed, len(N_list))):
        prof = profile.with_N(N)
        for case, (x1, x2, x3) in _quads_lemma32(rng, N, sample_count).items():
            q = QuadFreq(x1, x2, x3)
            val = np.abs(M41(q, prof, True)) + np.abs(M42(q, prof, True))
            x4 = q.xi4
            nmax = np.max(np.abs(np.stack([x1, x2, x3, x4])), axis=0)
            const = val * (nmax / N) ** (1.0 - 2.0 * s) / N
            records.append(_record(s, N, rho, case, const))
            if case == "m41_case2":
                r = np.abs(x2) / np.abs(x2 - x3)
                ratio_lo, ratio_hi = min(ratio_lo, r.min()), max(ratio_hi, r.max())
        # prefactor slices xi2 + xi3 = 0 vanish identically
        y = N * rng.uniform(-50, 50, 64)
        z = QuadFreq(N * rng.uniform(-50, 50, 64), y, -y)
        zero_exact &= bool(np.all(M41(z, prof, True) == 0) and np.all(M42(z, prof, True) == 0))
    stats = {"m41_case2_xi2_over_delta": [float(ratio_lo), float(ratio_hi)],
             "zero_slices_exact": zero_exact}
    return _finish("M4", records, s, rho, stats, exact_ok=zero_exact)
