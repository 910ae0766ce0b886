"""Time the compiled Wachspress kernels against the numpy fallback.

Usage: ``python benchmarks/bench_kernels.py [--points N] [--repeat R]``
"""

import argparse
import timeit

import numpy as np

from polysmooth import _kernels_py, bench
from polysmooth.basis import _arrays
from polysmooth.mesh import Polytope

try:
    from polysmooth import _kernels
except ImportError:
    _kernels = None


def _shapes(rng):
    t = np.linspace(0, 2 * np.pi, 9)[:-1]
    octagon = Polytope(np.column_stack([np.cos(t), np.sin(t)]), list(range(8)))
    return {"octagon": octagon, "hexahedron": bench.hexahedron(rng, 0.2)}


def run(points=2000, repeat=5, seed=0):
    rng = np.random.default_rng(seed)
    rows = []
    for name, poly in _shapes(rng).items():
        X = rng.dirichlet(np.ones(poly.n_vertices), points) @ poly.coords
        args = _arrays(poly)
        for kernel in ("wachspress_values", "wachspress_derivatives"):
            extra = (X, poly.diameter) if kernel == "wachspress_values" else (X,)
            times = {}
            for label, mod in (("python", _kernels_py), ("cython", _kernels)):
                if mod is None:
                    continue
                fn = getattr(mod, kernel)
                times[label] = min(timeit.repeat(lambda: fn(*args, *extra), number=1, repeat=repeat))
            rows.append((name, kernel, times))
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=5)
    a = p.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; timing the numpy kernels only")
    print(f"{'shape':<11} {'kernel':<24} {'python [ms]':>12} {'cython [ms]':>12} {'speedup':>8}")
    for name, kernel, t in run(a.points, a.repeat):
        py = t["python"] * 1e3
        cy = t.get("cython")
        cy_s = f"{cy * 1e3:12.3f}" if cy else f"{'-':>12}"
        sp = f"{t['python'] / cy:8.1f}" if cy else f"{'-':>8}"
        print(f"{name:<11} {kernel:<24} {py:12.3f} {cy_s} {sp}")


if __name__ == "__main__":
    main()
