"""Time the compiled path kernel against the NumPy fallback.

    python benchmarks/bench_kernels.py [--paths 200000] [--steps 200] [--repeat 3]

"kernel" times the stepping loop on pre-drawn normals; "end-to-end" adds
the batched Philox draws that both backends share.
"""
import argparse
import time

import numpy as np

from qdsv import _kernels_py
from qdsv.model import REFERENCE_PARAMS as P
from qdsv.montecarlo import Measure, Scheme, SimulationConfig, simulate_terminal


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--paths", type=int, default=200_000)
    ap.add_argument("--steps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--T", type=float, default=1.0 / 12.0)
    args = ap.parse_args()

    kernels = {"python": _kernels_py.simulate_paths}
    try:
        from qdsv import _kernels
    except ImportError:
        print("compiled kernel not built; timing the NumPy fallback only")
    else:
        kernels = {"cython": _kernels.simulate_paths, **kernels}
    names = list(kernels)

    rng = np.random.default_rng(1)
    Z = rng.standard_normal((args.steps, args.paths))
    B = rng.standard_normal(args.paths)
    dt = args.T / args.steps

    print(f"{args.paths} paths x {args.steps} steps, best of {args.repeat}")
    print(f"{'':<12}{'scheme':<10}{'measure':<9}" + "".join(f"{b:>11}" for b in names) + "   speedup")
    for mode in ("kernel", "end-to-end"):
        for scheme in Scheme:
            for measure in Measure:
                times = {}
                for name, kern in kernels.items():
                    if mode == "kernel":
                        kargs = (P.R0, P.R1, P.R2, P.nu, P.rho, P.x0, P.sigma0, dt,
                                 int(measure is Measure.QZ), int(scheme is Scheme.LOG_EULER), Z, B)
                        times[name] = best_of(lambda: kern(*kargs), args.repeat)
                    else:
                        cfg = SimulationConfig(n_paths=args.paths, n_steps=args.steps, seed=1, measure=measure,
                                               scheme=scheme, backend=name)
                        times[name] = best_of(lambda: simulate_terminal(P, args.T, cfg), args.repeat)
                cells = "".join(f"{times[b]:>10.3f}s" for b in names)
                speedup = f"{times['python'] / times['cython']:8.1f}x" if "cython" in times else ""
                print(f"{mode:<12}{scheme.value:<10}{measure.value:<9}{cells}   {speedup}")


if __name__ == "__main__":
    main()
