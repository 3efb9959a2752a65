"""Timing comparison of the compiled and pure-Python kernel backends.

Shapes mirror the desk-scale image experiment: 3000 samples of 784 pixels
mapped to 10 classes. Outputs one row per kernel with both timings and the
speedup factor. Results are checked for bitwise equality while timing, so
a speedup never comes from computing something different.

Run:  python3 benchmarks/kernel_benchmark.py [--samples N] [--repeats R]
"""

import argparse
import random
import time
from array import array

from bregman_perceptron import _kernels_py

try:
    from bregman_perceptron import _kernels_cy
except ImportError:
    _kernels_cy = None


def _buf(rng, count, lo=-1.0, hi=1.0):
    return array("d", (rng.uniform(lo, hi) for _ in range(count)))


def build_cases(samples, pixels, classes):
    rng = random.Random(4242)
    xs = _buf(rng, samples * pixels, 0.0, 1.0)
    w = _buf(rng, pixels * classes)
    b = _buf(rng, classes)
    e = _buf(rng, classes)
    g = _buf(rng, pixels * classes)
    flat = _buf(rng, samples * classes)

    def out(n):
        return array("d", bytes(8 * n))

    # name -> (args factory, mutates arg index or None)
    return [
        ("matmul_affine", lambda: (xs, samples, pixels, w, classes, b,
                                   out(samples * classes))),
        ("matvec_transposed", lambda: (w, pixels, classes, xs, 0, out(classes))),
        ("affine_transposed", lambda: (w, pixels, classes, xs, 0, b, out(classes))),
        ("add_outer", lambda: (array("d", g), e, classes, xs, 0, pixels)),
        ("outer", lambda: (e, classes, xs[:pixels], pixels, out(pixels * classes))),
        ("axpy", lambda: (0.5, g, w, out(pixels * classes))),
        ("scale_inplace", lambda: (array("d", g), 0.99)),
        ("soft_threshold", lambda: (g, 0.01, out(pixels * classes))),
        ("l1_norm", lambda: (g,)),
        ("dot", lambda: (flat, flat)),
        ("count_zeros", lambda: (g,)),
    ]


def time_kernel(module, name, make_args, repeats):
    fn = getattr(module, name)
    best = float("inf")
    result = None
    for _ in range(repeats):
        args = make_args()
        t0 = time.perf_counter()
        ret = fn(*args)
        best = min(best, time.perf_counter() - t0)
        # the observable output is either the return value or the last
        # mutable buffer argument
        result = ret if ret is not None else args[-1]
        if name in ("scale_inplace", "add_outer"):
            result = args[0]
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--samples", type=int, default=3000)
    ap.add_argument("--pixels", type=int, default=784)
    ap.add_argument("--classes", type=int, default=10)
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()

    if _kernels_cy is None:
        print("compiled extension not available; showing pure-Python timings only")

    cases = build_cases(args.samples, args.pixels, args.classes)
    print(f"shapes: {args.samples} samples x {args.pixels} pixels -> "
          f"{args.classes} classes, best of {args.repeats}")
    header = f"{'kernel':20s} {'python':>12s} {'cython':>12s} {'speedup':>9s}"
    print(header)
    print("-" * len(header))
    for name, make_args in cases:
        t_py, r_py = time_kernel(_kernels_py, name, make_args, args.repeats)
        if _kernels_cy is None:
            print(f"{name:20s} {t_py * 1e3:10.3f}ms {'-':>12s} {'-':>9s}")
            continue
        t_cy, r_cy = time_kernel(_kernels_cy, name, make_args, args.repeats)
        if isinstance(r_py, array):
            same = r_py.tobytes() == r_cy.tobytes()
        else:
            same = r_py == r_cy
        marker = "" if same else "  RESULTS DIFFER"
        print(f"{name:20s} {t_py * 1e3:10.3f}ms {t_cy * 1e3:10.3f}ms "
              f"{t_py / t_cy:8.1f}x{marker}")


if __name__ == "__main__":
    main()
