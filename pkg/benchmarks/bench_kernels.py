"""Compare the numba and numpy versions of the hot kernels.

Run with ``python3 benchmarks/bench_kernels.py``. Both versions are imported
from the same module, so the numba flag is irrelevant here; each pair is also
checked for agreement.
"""

import time

import numpy as np

from meancount import _kernels as K


def best_of(fn, *args, repeat=5):
    fn(*args)  # warm-up, includes jit compilation
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t)
    return best


def main():
    if not K.HAS_NUMBA:
        print("numba unavailable (or MEANCOUNT_DISABLE_NUMBA set): nothing to compare")
        return
    rng = np.random.default_rng(7)
    n_idx = np.arange(1, 65)
    logs = np.log(n_idx).astype(np.float64)
    coeffs = (rng.standard_normal(64) + 1j * rng.standard_normal(64)) / n_idx
    s = 0.3 + 1j * rng.uniform(-500, 500, 200_000)

    expo = rng.integers(0, 4, size=(40, 3)).astype(np.int64)
    amps = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    theta = rng.uniform(0, 2 * np.pi, size=(200_000, 3))

    h = np.zeros(4097, dtype=np.complex128)
    h[1:] = (-1.0) ** np.arange(4096) * (1 - 2 * 1.3) / np.arange(1, 4097)

    cases = [
        ("eval_terms", (logs, coeffs, s)),
        ("eval_terms_d", (logs, coeffs, s)),
        ("torus_values", (amps, expo, theta)),
        ("power_exp", (h, 4096)),
    ]
    print(f"{'kernel':<14} {'numpy [s]':>10} {'numba [s]':>10} {'speedup':>8} {'max diff':>10}")
    for name, args in cases:
        fnp = getattr(K, name + "_numpy")
        fnb = getattr(K, name + "_numba")
        a, b = fnp(*args), fnb(*args)
        if isinstance(a, tuple):
            diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
        else:
            diff = float(np.max(np.abs(a - b)))
        tn, tb = best_of(fnp, *args), best_of(fnb, *args)
        print(f"{name:<14} {tn:>10.4f} {tb:>10.4f} {tn / tb:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
