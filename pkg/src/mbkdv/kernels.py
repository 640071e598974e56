"""Backend selection for the hyperplane lattice kernels.

The compiled extension is used when it imports; set ``MBKDV_PURE_PYTHON=1``
to force the numpy fallback.  ``MBKDV_NUM_THREADS`` sets the OpenMP thread
count of the compiled kernels (results do not depend on it).
"""
import os

from . import _kernels_py

try:
    if os.environ.get("MBKDV_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure python requested")
    from . import _kernels as _impl

    BACKEND = "compiled"
except ImportError:
    _impl = _kernels_py
    BACKEND = "python"


def num_threads():
    try:
        return max(1, int(os.environ.get("MBKDV_NUM_THREADS", "1")))
    except ValueError:
        return 1


def lambda3_table(T, a, b, c):
    return _impl.lambda3_table(T, a, b, c, num_threads=num_threads())


def lambda3_sigma(xi, F, G, limd, lim0, plateau1, plateau2, tau, a, b, c):
    return _impl.lambda3_sigma(xi, F, G, limd, lim0, float(plateau1), float(plateau2),
                               float(tau), a, b, c, num_threads=num_threads())


def lambda4_pair(W, pair, a, b, c, d):
    return _impl.lambda4_pair(W, int(pair), a, b, c, d, num_threads=num_threads())


python_backend = _kernels_py
