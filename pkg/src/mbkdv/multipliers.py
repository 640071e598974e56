"""Dual I-operator multipliers.

``m1`` is 1 on ``|xi| <= N`` and ``(N/|xi|)^(1-s)`` on ``|xi| >= 2N``; in
between ``m1 = r^((s-1) w(r))`` with ``r = |xi|/N`` and ``w`` the quintic
smoothstep, which makes ``m1`` C^2 at both ends of the transition.
``m2(xi) = m1(rho xi)``.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, ProfileDefectError, UsageError
from .grid import Field

__all__ = [
    "MultiplierProfile",
    "m1_eval",
    "m2_eval",
    "apply_I",
    "apply_I_inverse",
    "certify_derivative_bounds",
    "DerivativeBounds",
    "scaling_constant",
    "bracket_constant",
]


def _smoothstep(t):
    """Quintic smoothstep and its first two derivatives on t in [0, 1]."""
    w = t ** 3 * (10.0 - 15.0 * t + 6.0 * t ** 2)
    w1 = 30.0 * t ** 2 * (1.0 - t) ** 2
    w2 = 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t)
    return w, w1, w2


@dataclass(frozen=True)
class MultiplierProfile:
    s: float
    N: float
    rho: float = 2.0

    def __post_init__(self):
        if not (0.75 <= self.s < 1.0):
            raise ConfigurationError(f"s must lie in [3/4, 1), got {self.s}")
        if not (self.N > 0 and np.isfinite(self.N)):
            raise ConfigurationError(f"N must be positive, got {self.N}")
        if not (self.rho > 0 and np.isfinite(self.rho)):
            raise ConfigurationError(f"rho must be positive, got {self.rho}")
        for name in ("s", "N", "rho"):
            object.__setattr__(self, name, float(getattr(self, name)))

    def m1(self, xi, order: int = 0):
        return m1_eval(self, xi, order)

    def m2(self, xi, order: int = 0):
        return m2_eval(self, xi, order)

    def with_N(self, N) -> "MultiplierProfile":
        return MultiplierProfile(self.s, N, self.rho)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d) -> "MultiplierProfile":
        return cls(float(d["s"]), float(d["N"]), float(d.get("rho", 2.0)))


def m1_eval(profile: MultiplierProfile, xi, derivative_order: int = 0):
    if derivative_order not in (0, 1, 2):
        raise UsageError(f"derivative_order must be 0, 1 or 2, got {derivative_order!r}")
    scalar = np.ndim(xi) == 0
    xi = np.asarray(xi, dtype=float)
    s, N = profile.s, profile.N
    a = np.abs(xi)
    r = a / N
    out = np.zeros_like(a)

    plat = r <= 1.0
    power = r >= 2.0
    mid = ~(plat | power)

    if derivative_order == 0:
        out[plat] = 1.0
    if power.any():
        rp = r[power]
        m = rp ** (s - 1.0)
        if derivative_order == 0:
            out[power] = m
        elif derivative_order == 1:
            out[power] = (s - 1.0) * m / xi[power]
        else:
            out[power] = (s - 1.0) * (s - 2.0) * m / xi[power] ** 2
    if mid.any():
        rm = r[mid]
        w, w1, w2 = _smoothstep(rm - 1.0)
        lr = np.log(rm)
        m = np.exp((s - 1.0) * w * lr)
        if derivative_order == 0:
            out[mid] = m
        else:
            e1 = (s - 1.0) * (w1 * lr + w / rm)
            if derivative_order == 1:
                out[mid] = m * e1 * np.sign(xi[mid]) / N
            else:
                e2 = (s - 1.0) * (w2 * lr + 2.0 * w1 / rm - w / rm ** 2)
                out[mid] = m * (e1 * e1 + e2) / N ** 2
    return float(out) if scalar else out


def m2_eval(profile: MultiplierProfile, xi, derivative_order: int = 0):
    rho = profile.rho
    v = m1_eval(profile, rho * np.asarray(xi, dtype=float), derivative_order)
    return v * rho ** derivative_order


def _multiplier(which, profile, xi):
    if which == 1:
        return m1_eval(profile, xi)
    if which == 2:
        return m2_eval(profile, xi)
    raise UsageError(f"which must be 1 or 2, got {which!r}")


def apply_I(which: int, profile: MultiplierProfile, f: Field) -> Field:
    m = _multiplier(which, profile, f.grid.xi)
    return Field.from_spectral(f.grid, m * f.coeffs)


def apply_I_inverse(which: int, profile: MultiplierProfile, f: Field) -> Field:
    m = _multiplier(which, profile, f.grid.xi)
    return Field.from_spectral(f.grid, f.coeffs / m)


@dataclass(frozen=True)
class DerivativeBounds:
    C1: float
    C2: float
    band: tuple
    samples: int


def certify_derivative_bounds(profile: MultiplierProfile, band=None,
                              samples: int = 10_000) -> DerivativeBounds:
    """Empirical sup of ``|m1'| |xi| / m1`` and ``|m1''| xi^2 / m1`` over a band."""
    N = profile.N
    lo, hi = band if band is not None else (0.5 * N, 64.0 * N)
    if not lo > 0.5 * N * (1 - 1e-12):
        raise UsageError(f"band must lie within (N/2, inf), got lower end {lo}")
    if not hi > lo:
        raise UsageError(f"empty band ({lo}, {hi})")
    if samples < 1000:
        raise UsageError(f"need at least 1000 samples, got {samples}")
    half = samples // 2
    xi = np.unique(np.concatenate([
        np.linspace(lo, hi, samples - half),
        np.geomspace(lo, hi, half),
        # transition endpoints where the profile switches branch
        np.clip([N, 2.0 * N], lo, hi),
    ]))
    m = m1_eval(profile, xi)
    d1 = m1_eval(profile, xi, 1)
    d2 = m1_eval(profile, xi, 2)
    if not (np.all(np.isfinite(d1)) and np.all(np.isfinite(d2)) and np.all(m > 0)):
        bad = xi[~(np.isfinite(d1) & np.isfinite(d2) & (m > 0))][0]
        raise ProfileDefectError(f"non-finite profile derivative at xi={bad}")
    C1 = float(np.max(np.abs(d1) * xi / m))
    C2 = float(np.max(np.abs(d2) * xi ** 2 / m))
    return DerivativeBounds(C1, C2, (float(lo), float(hi)), int(xi.size))


def scaling_constant(profile: MultiplierProfile, lam: float, xi) -> float:
    """max over xi of ``m1(xi/lam) / (lam^(1-s) m1(xi))``.

    The value is exactly 1 on the pure power branch; the smooth transition
    lets it exceed 1 by a few percent near ``|xi| ~ lam N``.
    """
    if lam < 1:
        raise UsageError(f"lambda must be >= 1, got {lam}")
    xi = np.asarray(xi, dtype=float)
    num = m1_eval(profile, xi / lam)
    den = lam ** (1.0 - profile.s) * m1_eval(profile, xi)
    return float(np.max(num / den))


def bracket_constant(profile: MultiplierProfile, xi) -> float:
    """min over xi of ``(1+|xi|)^(1-s) m1(xi)``."""
    xi = np.asarray(xi, dtype=float)
    return float(np.min((1.0 + np.abs(xi)) ** (1.0 - profile.s) * m1_eval(profile, xi)))
