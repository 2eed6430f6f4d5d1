"""Backend selection for the inner loops.

The compiled extension is used when it imports; set ``LLOSIM_PURE_PYTHON=1``
to force the NumPy fallback.
"""

import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if not os.environ.get("LLOSIM_PURE_PYTHON"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        _impl = _ckernels


def _c(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def window_means(omegas, phases, amps, centers, halfwidths):
    """(R, K) window averages of sum-of-cosine realizations; see ``_pykernels``."""
    return _impl.window_means(_c(omegas), _c(phases), _c(amps), _c(centers), _c(halfwidths))


def overlap_sums(omega, wk, wg, delta, ta, tb):
    """(Q, 3) Gauss-Kronrod sums for pair transfer functions; see ``_pykernels``."""
    return _impl.overlap_sums(_c(omega), _c(wk), _c(wg), _c(delta), _c(ta), _c(tb))
