"""Compare the compiled kernels with the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Prints one line per kernel and input size with the median time of each
backend and the speedup of the compiled one.
"""

import argparse
import timeit

import numpy as np

from aerial import _pykernels

try:
    from aerial import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def bounds_for(sizes):
    return np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)


def cases(rng):
    for rows, k in ((256, 9), (2048, 22), (8192, 57)):
        bounds = bounds_for(rng.integers(2, 6, size=k))
        d = int(bounds[-1])
        logits = rng.normal(size=(rows, d))
        probs = _pykernels.block_softmax(logits, bounds)
        target = np.zeros_like(probs)
        for lo, hi in zip(bounds[:-1], bounds[1:]):
            target[np.arange(rows), rng.integers(lo, hi, size=rows)] = 1.0
        yield f"block_softmax {rows}x{d}", "block_softmax", (logits, bounds)
        yield f"block_bce     {rows}x{d}", "block_bce", (probs, target, bounds, 1e-7)

    for n, d, m in ((286, 43, 2000), (8124, 117, 20000)):
        member = rng.random((d, n)) < 0.3
        words = -(-n // 64)
        padded = np.zeros((d, words * 64), dtype=bool)
        padded[:, :n] = member
        bits = np.ascontiguousarray(np.packbits(padded, axis=1, bitorder="little").view(np.uint64))
        sets = np.full((m, 3), -1, dtype=np.int64)
        for r in range(m):
            k = rng.integers(1, 4)
            sets[r, :k] = rng.choice(d, size=k, replace=False)
        yield f"itemset_counts n={n} sets={m}", "itemset_counts", (bits, sets)


def median_time(fn, args, repeat):
    number = 5
    return float(np.median(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat))) / number


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=7)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'case':38s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, kernel, inputs in cases(rng):
        t_py = median_time(getattr(_pykernels, kernel), inputs, args.repeat)
        if _ckernels is None:
            print(f"{name:38s} {t_py * 1e3:10.3f} {'-':>10s} {'-':>8s}")
            continue
        ref = getattr(_pykernels, kernel)(*inputs)
        got = getattr(_ckernels, kernel)(*inputs)
        # block_bce returns (loss, grad); the others a single array
        for a, b in zip(ref if isinstance(ref, tuple) else (ref,), got if isinstance(got, tuple) else (got,)):
            np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-14)
        t_c = median_time(getattr(_ckernels, kernel), inputs, args.repeat)
        print(f"{name:38s} {t_py * 1e3:10.3f} {t_c * 1e3:10.3f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
