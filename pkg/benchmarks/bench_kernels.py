"""Time the compiled kernels against the NumPy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 64]

Both backend modules are imported directly, so the comparison does not
depend on ``PLATEAU_PURE_PYTHON``. Each kernel is run on identical inputs;
the table lists the best wall time of ``--repeat`` runs, the speed-up, and
the largest absolute difference between the two results.
"""
import argparse
import sys
import time

import numpy as np

from plateau import _kernels_py

try:
    from plateau import _ckernels
except ImportError:
    _ckernels = None


def best_time(fn, repeat):
    out, best = None, np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases(n, rng):
    shape = (n + 1,) * 3
    h = 1.0 / n
    origin = np.zeros(3)
    field = rng.random(shape)
    pts = rng.random((200_000, 3))
    mass = rng.random(len(pts))
    diag = rng.random(shape)
    diag[[0, -1]] = 0.0
    x = rng.random(shape)

    m = 2000
    a = rng.random((m, 3))
    b = a + 0.02 * rng.standard_normal((m, 3))
    c = a + 0.02 * rng.standard_normal((m, 3))
    qs = rng.random((5000, 3))
    start = np.zeros(len(qs), dtype=np.int64)

    yield "splat", lambda k: k.splat(pts, mass, origin, h, shape)
    yield "trilinear", lambda k: k.trilinear(field, pts, origin, h)
    yield "trilinear_grad", lambda k: k.trilinear_grad(field, pts, origin, h)[1]
    yield "stencil_apply", lambda k: k.stencil_apply(x, diag, 0.3, np.empty_like(x))
    yield "triangle_distance", lambda k: k.triangle_distance(qs, a, b, c, start)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=64, help="grid cells per axis")
    args = ap.parse_args(argv)
    if _ckernels is None:
        print("compiled kernels are not built; nothing to compare", file=sys.stderr)
        return 1
    rng = np.random.default_rng(0)
    print(f"{'kernel':<18} {'cython [s]':>11} {'numpy [s]':>11} {'speed-up':>9} {'max |diff|':>11}")
    for name, call in cases(args.n, rng):
        tc, oc = best_time(lambda: call(_ckernels), args.repeat)
        tp, op = best_time(lambda: call(_kernels_py), args.repeat)
        diff = float(np.max(np.abs(np.asarray(oc) - np.asarray(op))))
        print(f"{name:<18} {tc:11.4f} {tp:11.4f} {tp / tc:9.1f} {diff:11.2e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
