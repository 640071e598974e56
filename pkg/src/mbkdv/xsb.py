"""Discrete Fourier-restriction norms on a space-time lattice.

Fields live on ``[-L/2, L/2) x [0, T)`` and are multiplied by a raised
cosine window in time before the joint transform, so the lattice norm is a
surrogate for the norm on the whole plane.  All ratios built from these
norms are heuristic evidence, not estimates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError, UsageError
from .grid import SpectralGrid
from .multipliers import MultiplierProfile, m1_eval, m2_eval

__all__ = [
    "SpaceTimeField",
    "time_window",
    "xsb_norm",
    "EnsembleSpec",
    "sample_member",
    "bilinear_ratios",
    "bilinear_ratio_probe",
]


def time_window(t: np.ndarray, T: float) -> np.ndarray:
    """Raised cosine ``(1 - cos(2 pi t / T)) / 2``; vanishes to first order at both ends."""
    return 0.5 * (1.0 - np.cos(2.0 * np.pi * t / T))


@dataclass(frozen=True)
class SpaceTimeField:
    """Coefficients ``F[k, m] = w_hat(xi_k, tau_m)`` of a real space-time field."""

    grid: SpectralGrid
    T: float
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.ndim != 2 or c.shape[0] != self.grid.n:
            raise ConfigurationError(f"coefficient array of shape {c.shape} does not match grid")
        if not np.all(np.isfinite(c)):
            raise ConfigurationError("non-finite space-time coefficients")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_t(self) -> int:
        return self.coeffs.shape[1]

    @property
    def dt(self) -> float:
        return self.T / self.n_t

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.n_t)

    @property
    def tau(self) -> np.ndarray:
        return 2.0 * np.pi / self.T * np.fft.fftfreq(self.n_t, 1.0 / self.n_t)

    @classmethod
    def from_samples(cls, grid: SpectralGrid, T: float, samples, window: bool = True):
        """Samples ``w[j, l] = w(x_j, t_l)``; the time window is applied unless disabled."""
        w = np.asarray(samples, dtype=float)
        if w.ndim != 2 or w.shape[0] != grid.n:
            raise ConfigurationError(f"samples of shape {w.shape} do not match grid")
        n_t = w.shape[1]
        if window:
            w = w * time_window(T / n_t * np.arange(n_t), T)[None, :]
        F = np.fft.fft2(w) * grid._phase[:, None] * (grid.dx * T / n_t)
        return cls(grid, T, F)

    def to_samples(self) -> np.ndarray:
        g = self.grid
        w = np.fft.ifft2(self.coeffs / g._phase[:, None]) / (g.dx * self.dt)
        return w.real

    def hermitian_defect(self) -> float:
        """Relative imaginary part of the inverse transform (0 for a real field)."""
        g = self.grid
        w = np.fft.ifft2(self.coeffs / g._phase[:, None])
        return float(np.abs(w.imag).max() / max(np.abs(w).max(), 1e-300))

    def spatial_multiplier(self, mult: np.ndarray) -> "SpaceTimeField":
        return SpaceTimeField(self.grid, self.T, self.coeffs * np.asarray(mult)[:, None])

    def derivative(self) -> "SpaceTimeField":
        ik = 1j * self.grid.xi
        if self.grid.n % 2 == 0:
            ik = ik.copy()
            ik[self.grid.n // 2] = 0.0
        return self.spatial_multiplier(ik)

    def __mul__(self, other: "SpaceTimeField") -> "SpaceTimeField":
        if other.grid != self.grid or other.T != self.T or other.n_t != self.n_t:
            raise ConfigurationError("space-time fields live on different lattices")
        return SpaceTimeField.from_samples(self.grid, self.T,
                                           self.to_samples() * other.to_samples(), window=False)


def xsb_norm(F: SpaceTimeField, alpha: float, s: float, b: float) -> float:
    """``(1/(L T) sum <xi>^(2s) <tau - alpha xi^3>^(2b) |F|^2)^(1/2)`` with ``<z> = 1 + |z|``."""
    xi = F.grid.xi[:, None]
    tau = F.tau[None, :]
    w = (1.0 + np.abs(xi)) ** s * (1.0 + np.abs(tau - alpha * xi ** 3)) ** b
    terms = (np.abs(w * F.coeffs) ** 2).ravel()
    return math.sqrt(math.fsum(terms) / (F.grid.length * F.T))


# ------------------------------------------------------------- ratio probe

@dataclass(frozen=True)
class EnsembleSpec:
    """Random superpositions of detuned linear waves, defined independently of resolution.

    Member ``j`` has ``u = psi(t) Re sum_k a_k exp(i(xi_k x + (xi_k^3 + d_k) t))``
    and ``v`` likewise with ``4 xi^3``, over ``1 <= k <= kmax``, with complex
    Gaussian ``a_k`` scaled by ``(1+k)^-decay`` and detunings ``d_k`` uniform
    in ``[-detune, detune]``.
    """

    size: int = 16
    kmax: int = 6
    length: float = 2.0 * np.pi
    T: float = 2.0 * np.pi
    decay: float = 1.0
    detune: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.size < 1 or self.kmax < 1:
            raise UsageError("ensemble needs size >= 1 and kmax >= 1")


def _member_params(spec: EnsembleSpec):
    children = np.random.SeedSequence(spec.seed).spawn(spec.size)
    k = np.arange(1, spec.kmax + 1)
    env = (1.0 + k) ** (-spec.decay)
    out = []
    for ch in children:
        rng = np.random.default_rng(ch)
        au = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * env
        av = (rng.standard_normal(k.size) + 1j * rng.standard_normal(k.size)) * env
        du = rng.uniform(-spec.detune, spec.detune, k.size)
        dv = rng.uniform(-spec.detune, spec.detune, k.size)
        out.append((au, av, du, dv))
    return out


def sample_member(spec: EnsembleSpec, params, n: int, n_t: int):
    """Sample one member on an ``n x n_t`` lattice; returns windowed ``(U, V)``."""
    grid = SpectralGrid(spec.length, n)
    if 2 * spec.kmax >= n // 2:
        raise ConfigurationError(f"n={n} too small for products of modes up to {spec.kmax}")
    au, av, du, dv = params
    xi = grid.dk * np.arange(1, spec.kmax + 1)
    x = grid.x[:, None, None]
    t = (spec.T / n_t * np.arange(n_t))[None, :, None]

    def wave(a, d, alpha):
        ph = xi[None, None, :] * x + (alpha * xi[None, None, :] ** 3 + d[None, None, :]) * t
        return np.real((a[None, None, :] * np.exp(1j * ph)).sum(axis=2))

    U = SpaceTimeField.from_samples(grid, spec.T, wave(au, du, 1.0))
    V = SpaceTimeField.from_samples(grid, spec.T, wave(av, dv, 4.0))
    return U, V


def _check_params(s, b, sigma1):
    if not 0.75 <= s < 1.0:
        raise UsageError(f"s={s} outside [3/4, 1)")
    if not 0.5 < b <= 1.0:
        raise UsageError(f"b={b} outside (1/2, 1]")
    if sigma1 > 1.0 - b:
        raise UsageError(f"sigma1={sigma1} exceeds 1 - b")


def bilinear_ratios(U: SpaceTimeField, V: SpaceTimeField, profile: MultiplierProfile,
                    b: float, sigma1: float = 0.0) -> tuple[float, float]:
    """Ratios for the two bilinear estimates.

    ``I1(v v_x)`` in ``X^1_{1,b-1+sigma1}`` over ``||I2 v||^2`` in ``X^4_{1,b}``,
    and ``I2[(u v)_x]`` in ``X^4_{1,b-1+sigma1}`` over
    ``||I1 u||_{X^1_{1,b}} ||I2 v||_{X^4_{1,b}}``.  A ratio is 0 when its
    left side vanishes and ``nan`` when only the denominator does.
    """
    xi = U.grid.xi
    M1, M2 = m1_eval(profile, xi), m2_eval(profile, xi)
    Iu = U.spatial_multiplier(M1)
    Iv = V.spatial_multiplier(M2)
    nu = xsb_norm(Iu, 1.0, 1.0, b)
    nv = xsb_norm(Iv, 4.0, 1.0, b)
    bb = b - 1.0 + sigma1
    vvx = (V * V.derivative()).spatial_multiplier(M1)
    uvx = (U * V).derivative().spatial_multiplier(M2)
    return (_ratio(xsb_norm(vvx, 1.0, 1.0, bb), nv ** 2),
            _ratio(xsb_norm(uvx, 4.0, 1.0, bb), nu * nv))


def _ratio(num, den):
    # a vanishing left side satisfies the estimate with ratio 0
    if num == 0:
        return 0.0
    return num / den if den > 0 else float("nan")


def bilinear_ratio_probe(spec: EnsembleSpec, profile: MultiplierProfile, s: float, b: float,
                         sigma1: float = 0.0, n: int = 32, n_t: int = 4096,
                         levels: int = 2) -> dict:
    """Empirical bilinear ratios over a fixed ensemble at ``levels`` doubled resolutions.

    Returns per-level maxima and distributions plus ``change``, the largest
    factor by which a maximum moves between consecutive levels.  The report
    is labelled heuristic: windowed lattice norms stand in for norms on the
    plane.
    """
    _check_params(s, b, sigma1)
    prof = replace(profile, s=s)
    params = _member_params(spec)
    rows = []
    for lev in range(levels):
        nn, nt = n * 2 ** lev, n_t * 2 ** lev
        r1s, r2s = [], []
        for par in params:
            U, V = sample_member(spec, par, nn, nt)
            r1, r2 = bilinear_ratios(U, V, prof, b, sigma1)
            if math.isfinite(r1):
                r1s.append(r1)
            if math.isfinite(r2):
                r2s.append(r2)
        rows.append({"n": nn, "n_t": nt, "max_I1": max(r1s, default=float("nan")),
                     "max_I2": max(r2s, default=float("nan")), "ratios_I1": r1s,
                     "ratios_I2": r2s, "skipped": 2 * len(params) - len(r1s) - len(r2s)})
    change = 1.0
    for a, c in zip(rows, rows[1:]):
        for key in ("max_I1", "max_I2"):
            lo, hi = sorted((a[key], c[key]))
            change = max(change, hi / lo if lo > 0 else float("inf"))
    finite = all(math.isfinite(r[k]) for r in rows for k in ("max_I1", "max_I2"))
    return {"label": "heuristic", "s": s, "b": b, "sigma1": sigma1, "profile": prof.to_dict(),
            "ensemble": spec.__dict__.copy(), "levels": rows, "change": change,
            "finite": finite, "pass": bool(finite and change < 2.0)}
