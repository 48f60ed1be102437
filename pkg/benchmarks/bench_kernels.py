"""Time the compiled and pure-Python kernel backends on the training hot paths.

Usage::

    python3 benchmarks/bench_kernels.py [--batch 64] [--repeat 5]

Reports the best-of-``repeat`` wall time per call and the speedup of the
compiled backend.  Exits with status 1 if the extension is not built.
"""
import argparse
import sys
import timeit

import numpy as np

from hqnn import _kernels, ansatz
from hqnn.ansatz import SingleTemplate

CASES = [
    ("sv_features", SingleTemplate(13, 2)),
    ("sv_jacobian", SingleTemplate(13, 2)),
    ("sv_jacobian", SingleTemplate(5, 5)),
    ("dm_features", SingleTemplate(13, 2)),
    ("dm_jacobian", SingleTemplate(13, 2)),
]


def _call(backend, name, circuit, angles):
    fn = getattr(backend, name)
    if name.startswith("dm_"):
        return lambda: fn(circuit.ops, 4, angles, 0.01, 0.005)
    return lambda: fn(circuit.ops, 4, angles)


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=64)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if "compiled" not in _kernels.available_backends():
        print("compiled backend not available; build with `pip install -e . --no-build-isolation`")
        return 1
    fast, ref = _kernels.get_backend("compiled"), _kernels.get_backend("python")
    rng = np.random.default_rng(0)

    print(f"{'function':<12} {'circuit':<8} {'batch':>5} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for name, spec in CASES:
        c = ansatz.compile(spec)
        batch = args.batch if name.startswith("sv_") else max(1, args.batch // 8)
        angles = rng.uniform(-np.pi, np.pi, (batch, c.num_angles))
        # same inputs, same answers
        a, b = _call(fast, name, c, angles)(), _call(ref, name, c, angles)()
        for x, y in zip(a if isinstance(a, tuple) else (a,), b if isinstance(b, tuple) else (b,)):
            assert np.allclose(x, y, atol=1e-12)
        times = []
        for backend in (ref, fast):
            call = _call(backend, name, c, angles)
            loops = 1 if backend is ref and name.startswith("dm_") else 3
            times.append(min(timeit.repeat(call, number=loops, repeat=args.repeat)) / loops * 1e3)
        print(f"{name:<12} {c.label:<8} {batch:>5} {times[0]:>10.2f} {times[1]:>12.2f} {times[0] / times[1]:>7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
