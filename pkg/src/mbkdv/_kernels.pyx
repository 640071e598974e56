# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled lattice sums over the zero-sum hyperplane.

All arrays are band-ordered: index ``i`` holds wavenumber ``i - K`` with
``m = 2K + 1`` entries.  Rows are summed in parallel with a Kahan
accumulator each; row totals are merged sequentially in row order, so the
result does not depend on the thread count.
"""
import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange
from libc.math cimport fabs

cnp.import_array()


cdef inline void _kahan_add(double *s, double *c, double x) noexcept nogil:
    cdef double y = x - c[0]
    cdef double t = s[0] + y
    c[0] = (t - s[0]) - y
    s[0] = t


cdef complex _merge(double[::1] re, double[::1] im):
    cdef Py_ssize_t i
    cdef double sr = 0.0, cr = 0.0, si = 0.0, ci = 0.0
    for i in range(re.shape[0]):
        _kahan_add(&sr, &cr, re[i])
        _kahan_add(&si, &ci, im[i])
    return complex(sr, si)


def lambda3_table(const double[:, ::1] T, const double complex[::1] a,
                  const double complex[::1] b, const double complex[::1] c,
                  int num_threads=1):
    """sum_{i,j} T[i,j] a[i] b[j] c[3K-i-j] over valid index triples."""
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t K = (m - 1) // 2
    cdef Py_ssize_t i, j, l, jlo, jhi
    cdef double w, pr, pi, sr, cr, si, ci
    cdef double complex ai, bj, cl
    row_re = np.zeros(m)
    row_im = np.zeros(m)
    cdef double[::1] rre = row_re
    cdef double[::1] rim = row_im
    for i in prange(m, nogil=True, num_threads=num_threads, schedule="static"):
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        ai = a[i]
        # need 0 <= 3K - i - j <= 2K
        jlo = K - i
        if jlo < 0:
            jlo = 0
        jhi = 3 * K - i
        if jhi > m - 1:
            jhi = m - 1
        for j in range(jlo, jhi + 1):
            w = T[i, j]
            if w == 0.0:
                continue
            l = 3 * K - i - j
            bj = b[j]
            cl = c[l]
            pr = bj.real * cl.real - bj.imag * cl.imag
            pi = bj.real * cl.imag + bj.imag * cl.real
            _kahan_add(&sr, &cr, w * pr)
            _kahan_add(&si, &ci, w * pi)
        rre[i] = ai.real * sr - ai.imag * si
        rim[i] = ai.real * si + ai.imag * sr
    return _merge(rre, rim)


def lambda3_sigma(const double[::1] xi, const double[::1] F, const double[::1] G,
                  const double[::1] limd, const double[::1] lim0,
                  double plateau1, double plateau2, double tau,
                  const double complex[::1] a, const double complex[::1] b,
                  const double complex[::1] c, int num_threads=1):
    """Lambda_3 sum with the sigma_3 multiplier built on the fly.

    ``F = xi^3 m1^2``, ``G = 4 xi^3 m2^2``; ``limd`` is the limit on
    ``xi2 = xi3`` indexed by xi1, ``lim0`` the limit on ``xi1 = 0`` indexed
    by xi2.  sigma_3 is exactly 1 when ``|xi1| <= plateau1`` and
    ``|xi2|, |xi3| <= plateau2`` (all multipliers equal 1 there).
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t K = (m - 1) // 2
    cdef Py_ssize_t i, j, l, jlo, jhi
    cdef double x1, x2, x3, d, al, eta, sig, scale, pr, pi, sr, cr, si, ci
    cdef double complex ai, bj, cl
    row_re = np.zeros(m)
    row_im = np.zeros(m)
    cdef double[::1] rre = row_re
    cdef double[::1] rim = row_im
    for i in prange(m, nogil=True, num_threads=num_threads, schedule="static"):
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        ai = a[i]
        x1 = xi[i]
        jlo = K - i
        if jlo < 0:
            jlo = 0
        jhi = 3 * K - i
        if jhi > m - 1:
            jhi = m - 1
        for j in range(jlo, jhi + 1):
            l = 3 * K - i - j
            x2 = xi[j]
            x3 = xi[l]
            if fabs(x1) <= plateau1 and fabs(x2) <= plateau2 and fabs(x3) <= plateau2:
                sig = 1.0
            else:
                d = x2 - x3
                al = -3.0 * x1 * d * d
                scale = fabs(x1) ** 3 + 4.0 * fabs(x2) ** 3 + 4.0 * fabs(x3) ** 3 + 1.0
                if fabs(al) < tau * scale:
                    if fabs(d) <= fabs(x1):
                        sig = limd[i]
                    else:
                        sig = lim0[j]
                else:
                    eta = F[i] + G[j] + G[l]
                    sig = eta / al
            bj = b[j]
            cl = c[l]
            pr = bj.real * cl.real - bj.imag * cl.imag
            pi = bj.real * cl.imag + bj.imag * cl.real
            _kahan_add(&sr, &cr, sig * pr)
            _kahan_add(&si, &ci, sig * pi)
        rre[i] = ai.real * sr - ai.imag * si
        rim[i] = ai.real * si + ai.imag * sr
    return _merge(rre, rim)


def lambda4_pair(const double[:, ::1] W, int pair,
                 const double complex[::1] a, const double complex[::1] b,
                 const double complex[::1] c, const double complex[::1] d,
                 int num_threads=1):
    """Brute-force quadrilinear sum with a pair-structured multiplier.

    ``pair == 0``: weight ``W[i2, i3]``; ``pair == 1``: weight ``W[i1, i4]``.
    The fourth index is forced by the zero-sum constraint.
    """
    cdef Py_ssize_t m = a.shape[0]
    cdef Py_ssize_t K = (m - 1) // 2
    cdef Py_ssize_t i, j, k, l, klo, khi
    cdef double w, pr, pi, qr, qi, sr, cr, si, ci
    cdef double complex ai, bj, ck, dl
    if pair != 0 and pair != 1:
        raise ValueError("pair must be 0 or 1")
    row_re = np.zeros(m)
    row_im = np.zeros(m)
    cdef double[::1] rre = row_re
    cdef double[::1] rim = row_im
    for i in prange(m, nogil=True, num_threads=num_threads, schedule="dynamic"):
        sr = 0.0
        cr = 0.0
        si = 0.0
        ci = 0.0
        ai = a[i]
        for j in range(m):
            bj = b[j]
            # need 0 <= 4K - i - j - k <= 2K
            klo = 2 * K - i - j
            if klo < 0:
                klo = 0
            khi = 4 * K - i - j
            if khi > m - 1:
                khi = m - 1
            for k in range(klo, khi + 1):
                l = 4 * K - i - j - k
                if pair == 0:
                    w = W[j, k]
                else:
                    w = W[i, l]
                if w == 0.0:
                    continue
                ck = c[k]
                dl = d[l]
                pr = bj.real * ck.real - bj.imag * ck.imag
                pi = bj.real * ck.imag + bj.imag * ck.real
                qr = pr * dl.real - pi * dl.imag
                qi = pr * dl.imag + pi * dl.real
                _kahan_add(&sr, &cr, w * qr)
                _kahan_add(&si, &ci, w * qi)
        rre[i] = ai.real * sr - ai.imag * si
        rim[i] = ai.real * si + ai.imag * sr
    return _merge(rre, rim)
