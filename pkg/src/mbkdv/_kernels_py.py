"""Pure numpy fallback for the compiled lattice kernels.

Same signatures and index conventions as the extension; rows are summed
with numpy pairwise summation and row totals merged with ``math.fsum``.
"""
import math

import numpy as np


def _merge(rows):
    rows = np.asarray(rows)
    return complex(math.fsum(rows.real), math.fsum(rows.imag))


def _row_window(i, K, m):
    jlo = max(K - i, 0)
    jhi = min(3 * K - i, m - 1)
    return jlo, jhi


def lambda3_table(T, a, b, c, num_threads=1):
    T = np.asarray(T, dtype=float)
    a, b, c = (np.asarray(z, dtype=complex) for z in (a, b, c))
    m = a.shape[0]
    K = (m - 1) // 2
    rows = np.zeros(m, dtype=complex)
    for i in range(m):
        jlo, jhi = _row_window(i, K, m)
        j = np.arange(jlo, jhi + 1)
        rows[i] = a[i] * np.sum(T[i, j] * b[j] * c[3 * K - i - j])
    return _merge(rows)


def sigma_row(x1, x2, x3, F1, G2, G3, limd1, lim02, plateau1, plateau2, tau):
    """Vectorized sigma_3 used by both the fallback and the table builders."""
    d = x2 - x3
    al = -3.0 * x1 * d * d
    scale = np.abs(x1) ** 3 + 4.0 * np.abs(x2) ** 3 + 4.0 * np.abs(x3) ** 3 + 1.0
    guard = np.abs(al) < tau * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = (F1 + G2 + G3) / al
    lim = np.where(np.abs(d) <= np.abs(x1), limd1, lim02)
    sig = np.where(guard, lim, sig)
    plat = (np.abs(x1) <= plateau1) & (np.abs(x2) <= plateau2) & (np.abs(x3) <= plateau2)
    return np.where(plat, 1.0, sig)


def lambda3_sigma(xi, F, G, limd, lim0, plateau1, plateau2, tau, a, b, c, num_threads=1):
    xi, F, G, limd, lim0 = (np.asarray(z, dtype=float) for z in (xi, F, G, limd, lim0))
    a, b, c = (np.asarray(z, dtype=complex) for z in (a, b, c))
    m = a.shape[0]
    K = (m - 1) // 2
    rows = np.zeros(m, dtype=complex)
    for i in range(m):
        jlo, jhi = _row_window(i, K, m)
        j = np.arange(jlo, jhi + 1)
        l = 3 * K - i - j
        sig = sigma_row(xi[i], xi[j], xi[l], F[i], G[j], G[l], limd[i], lim0[j],
                        plateau1, plateau2, tau)
        rows[i] = a[i] * np.sum(sig * b[j] * c[l])
    return _merge(rows)


def lambda4_pair(W, pair, a, b, c, d, num_threads=1):
    if pair not in (0, 1):
        raise ValueError("pair must be 0 or 1")
    W = np.asarray(W, dtype=float)
    a, b, c, d = (np.asarray(z, dtype=complex) for z in (a, b, c, d))
    m = a.shape[0]
    K = (m - 1) // 2
    jj, kk = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    rows = np.zeros(m, dtype=complex)
    for i in range(m):
        l = 4 * K - i - jj - kk
        ok = (l >= 0) & (l < m)
        lc = np.clip(l, 0, m - 1)
        w = W[jj, kk] if pair == 0 else W[i, lc]
        term = np.where(ok, w * b[jj] * c[kk] * d[lc], 0.0)
        rows[i] = a[i] * np.sum(term)
    return _merge(rows)
