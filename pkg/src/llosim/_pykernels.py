"""NumPy implementations of the inner loops (fallback when the extension is absent)."""

import numpy as np


def _sinc(x):
    small = np.abs(x) < 1e-4
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x * x / 6.0, np.sin(safe) / safe)


def window_means(omegas, phases, amps, centers, halfwidths):
    """out[r, k] = sum_j amps[j] * sinc(omega[r, j] * h_k) * cos(omega[r, j] * c_k + phase[r, j])."""
    omegas = np.asarray(omegas, dtype=float)
    phases = np.asarray(phases, dtype=float)
    amps = np.asarray(amps, dtype=float)
    out = np.empty((omegas.shape[0], len(centers)))
    for k, (c, h) in enumerate(zip(centers, halfwidths)):
        # row-wise sum rather than matmul: BLAS blocking would make the bits
        # depend on how many realizations share a call
        out[:, k] = (_sinc(omegas * h) * np.cos(omegas * c + phases) * amps).sum(axis=1)
    return out


def overlap_sums(omega, wk, wg, delta, ta, tb):
    """Gauss-Kronrod panel sums of cos(w*delta) sinc(w*ta/2) sinc(w*tb/2).

    Returns (Q, 3): value, sum over panels of |K - G|, sum over panels of |K|.
    """
    omega = np.asarray(omega, dtype=float)
    delta = np.asarray(delta, dtype=float)
    ta = np.asarray(ta, dtype=float)
    tb = np.asarray(tb, dtype=float)
    out = np.empty((delta.size, 3))
    chunk = max(1, int(4_000_000 // max(omega.size, 1)))
    for start in range(0, delta.size, chunk):
        sl = slice(start, start + chunk)
        w = omega[None, :, :]
        f = (
            np.cos(w * delta[sl, None, None])
            * _sinc(w * (0.5 * ta[sl, None, None]))
            * _sinc(w * (0.5 * tb[sl, None, None]))
        )
        kp = np.einsum("qpm,pm->qp", f, wk)
        gp = np.einsum("qpm,pm->qp", f, wg)
        out[sl, 0] = kp.sum(axis=1)
        out[sl, 1] = np.abs(kp - gp).sum(axis=1)
        out[sl, 2] = np.abs(kp).sum(axis=1)
    return out
