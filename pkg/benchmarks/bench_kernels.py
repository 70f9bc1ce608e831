"""Compare the compiled kernels with the numpy fallback.

Usage: python3 benchmarks/bench_kernels.py [--n 32] [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from hpde import _fallback
from hpde.grid import GridSpec, velocity_bc

try:
    from hpde import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(n: int):
    grid = GridSpec(1.0, 1.0, 0.5, n, n, n // 2)
    rng = np.random.default_rng(0)
    x = rng.standard_normal(grid.shape)
    g = velocity_bc(0.1).ghost_factors(grid)
    dt = nu = 0.01  # one implicit diffusion step
    coef = (1.0, dt * nu / grid.dx**2, dt * nu / grid.dy**2, dt * nu / grid.dz**2)
    q = rng.standard_normal(grid.shape2d)
    q -= q.mean()
    zeros3, zeros2 = np.zeros(grid.shape), np.zeros(grid.shape2d)
    return {
        "helmholtz_apply": lambda k: k.helmholtz_apply(x, *coef, g),
        "helmholtz_cg": lambda k: k.helmholtz_cg(x, zeros3, *coef, g, 1e-10, 2000, False),
        "colloc_apply": lambda k: k.colloc_apply(q, grid.dx, grid.dy, False),
        "colloc_cg": lambda k: k.colloc_cg(q, zeros2, grid.dx, grid.dy, False, 1e-10, 10 * n * n, True),
    }


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=32, help="horizontal cells (nz = n/2)")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = {"python": _fallback}
    if _kernels is not None:
        backends["cython"] = _kernels
    print(f"grid {args.n}x{args.n}x{args.n // 2}, best of {args.repeat}")
    print(f"{'kernel':<18}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases(args.n).items():
        times = {}
        for label, mod in backends.items():
            fn(mod)  # warm-up
            times[label] = min(timeit.repeat(lambda: fn(mod), number=1, repeat=args.repeat))
        speed = f"{times['python'] / times['cython']:.1f}x" if "cython" in times else "n/a"
        print(f"{name:<18}" + "".join(f"{t * 1e3:>12.3f}ms" for t in times.values()) + f"{speed:>10}")


if __name__ == "__main__":
    main()
