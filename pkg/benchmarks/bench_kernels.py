"""Compare the compiled and numpy kernels on the Monte-Carlo hot path.

    python benchmarks/bench_kernels.py [--n 1000000] [--d 2 3 6]
"""

import argparse
import time

import numpy as np

from qsteer import kernels
from qsteer.kernels import _pykernels

try:
    from qsteer.kernels import _ckernels
except ImportError:
    _ckernels = None


def best_of(fn, repeat=3):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--d", type=int, nargs="+", default=[2, 3, 6])
    args = ap.parse_args()

    impls = {"python": _pykernels}
    if _ckernels is not None:
        impls["cython"] = _ckernels
    print(f"active backend: {kernels.BACKEND}; n = {args.n}")
    print(f"{'kernel':<18}{'d':>3}" + "".join(f"{k:>12}" for k in impls) + f"{'speedup':>10}")
    rng = np.random.default_rng(0)
    for d in args.d:
        psi = rng.normal(size=(args.n, d)) + 1j * rng.normal(size=(args.n, d))
        psi /= np.linalg.norm(psi, axis=1, keepdims=True)
        frame = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))[0]
        frame = np.ascontiguousarray(frame)
        labels = rng.integers(0, d, size=args.n).astype(np.intp)
        rows = {
            "respond": lambda m: m.respond(psi, frame, False),
            "accumulate_outer": lambda m: m.accumulate_outer(psi, labels, d),
        }
        for name, call in rows.items():
            t = {k: best_of(lambda m=m: call(m)) for k, m in impls.items()}
            speed = f"{t['python'] / t['cython']:.1f}x" if "cython" in t else "-"
            print(f"{name:<18}{d:>3}" + "".join(f"{t[k]:>11.3f}s" for k in impls) + f"{speed:>10}")


if __name__ == "__main__":
    main()
