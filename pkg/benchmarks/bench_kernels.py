"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Both backends are imported directly, so no environment switch is needed.
Inputs are sized like a typical run: 1000 realizations x 2000 components
x 40 windows for the sampler, and 3000 window pairs for the quadrature.
"""

import argparse
import timeit

import numpy as np

from llosim import _pykernels

try:
    from llosim import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def sampler_inputs(rng, R=1000, J=2000, K=40):
    return (
        rng.uniform(0.0, 100.0, (R, J)),
        rng.uniform(0.0, 2 * np.pi, (R, J)),
        rng.uniform(0.0, 1.0, J),
        np.linspace(0.25, 39.25, K),
        np.full(K, 0.25),
    )


def quadrature_inputs(rng, P=64, M=31, Q=3000):
    return (
        np.sort(rng.uniform(0.0, 1e3, (P, M)), axis=1),
        rng.uniform(0.0, 1.0, (P, M)),
        rng.uniform(0.0, 1.0, (P, M)),
        rng.uniform(0.0, 50.0, Q),
        rng.uniform(0.01, 5.0, Q),
        rng.uniform(0.01, 5.0, Q),
    )


def bench(name, args, repeat):
    rows = []
    for label, mod in (("numpy", _pykernels), ("cython", _ckernels)):
        if mod is None:
            continue
        fn = getattr(mod, name)
        best = min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))
        rows.append((label, best))
    ref = rows[0][1]
    for label, t in rows:
        print(f"{name:14s} {label:7s} {t * 1e3:9.1f} ms   x{ref / t:5.2f}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    if _ckernels is None:
        print("compiled extension not available; timing the NumPy fallback only")
    bench("window_means", sampler_inputs(rng), args.repeat)
    bench("overlap_sums", quadrature_inputs(rng), args.repeat)


if __name__ == "__main__":
    main()
