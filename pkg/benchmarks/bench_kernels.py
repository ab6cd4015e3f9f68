"""Time the numba and numpy kernel paths side by side.

    python3 benchmarks/bench_kernels.py [--dims 3 4 7 12] [--repeat 2000]

Also times one full scenario run under each setting of GTORSION_DISABLE_NUMBA
(in subprocesses, since the flag is read at import).
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from gtorsion import _kernels


def random_inputs(n, rng):
    A = rng.standard_normal((n, n))
    g = A @ A.T + n * np.eye(n)
    dg = rng.standard_normal((n, n, n))
    dg = dg + dg.transpose(1, 0, 2)
    d2g = rng.standard_normal((n, n, n, n))
    d2g = d2g + d2g.transpose(1, 0, 2, 3)
    d2g = d2g + d2g.transpose(0, 1, 3, 2)
    return np.linalg.inv(g), dg, d2g


def bench_kernels(dims, repeat):
    rng = np.random.default_rng(0)
    print(f"{'kernel':24s} {'n':>3s} {'numpy us':>10s} {'numba us':>10s} {'speedup':>8s} {'max diff':>10s}")
    for n in dims:
        ginv, dg, d2g = random_inputs(n, rng)
        gamma = _kernels.christoffel_numpy(ginv, dg)
        dgamma = _kernels.christoffel_derivative_numpy(ginv, dg, d2g)
        cases = {
            "christoffel": (_kernels.christoffel_numpy, _kernels.christoffel_numba, (ginv, dg)),
            "christoffel_derivative": (
                _kernels.christoffel_derivative_numpy, _kernels.christoffel_derivative_numba, (ginv, dg, d2g)),
            "riemann": (_kernels.riemann_numpy, _kernels.riemann_numba, (gamma, dgamma)),
        }
        for name, (slow, fast, args) in cases.items():
            fast(*args)  # compile or load from cache
            diff = float(np.max(np.abs(slow(*args) - fast(*args))))
            t_np = min(timeit.repeat(lambda: slow(*args), number=repeat, repeat=3)) / repeat * 1e6
            t_nb = min(timeit.repeat(lambda: fast(*args), number=repeat, repeat=3)) / repeat * 1e6
            print(f"{name:24s} {n:3d} {t_np:10.2f} {t_nb:10.2f} {t_np / t_nb:8.2f} {diff:10.2e}")


def bench_scenario(sid, points):
    code = (
        "import time; from gtorsion import report; "
        f"report.run(report.RunConfig(scenarios=[{sid!r}], points=1)); t = time.perf_counter(); "
        f"report.run(report.RunConfig(scenarios=[{sid!r}], points={points})); "
        "print(time.perf_counter() - t)"
    )
    for flag in ("0", "1"):
        env = dict(os.environ, GTORSION_DISABLE_NUMBA=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        label = "numpy" if flag == "1" else "numba"
        print(f"scenario {sid} ({points} points, {label} kernels): {float(out.stdout):.2f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--dims", type=int, nargs="+", default=[3, 4, 7, 12])
    parser.add_argument("--repeat", type=int, default=2000)
    parser.add_argument("--scenario", default="s3-reeb")
    parser.add_argument("--points", type=int, default=20)
    parser.add_argument("--skip-scenario", action="store_true")
    args = parser.parse_args()
    if _kernels.numba is None:
        print("numba is not importable; only the numpy path exists")
        return
    bench_kernels(args.dims, args.repeat)
    if not args.skip_scenario:
        bench_scenario(args.scenario, args.points)


if __name__ == "__main__":
    main()
