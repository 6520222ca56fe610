"""Numba kernels against the pure-numpy fallback.

Each backend runs in its own interpreter because the choice is made at
import time from SBDG_NO_NUMBA. Usage:

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import json
import os
import subprocess
import sys
import time

CASES = {
    "explicit RK4, P3, 320 cells": "explicit",
    "implicit Euler, P3, 320 cells": "implicit",
    "eigensolver, 51x51 P3 stability map": "eigen",
}


def _time(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def worker(repeat):
    import numpy as np

    from sbdg import USE_NUMBA
    from sbdg.solver import RunConfig, SimState, build_system, step_explicit, step_implicit_euler
    from sbdg.solver import _explicit, _implicit
    from sbdg.spectral import stability_map

    system = build_system(RunConfig(3, 320, -0.5))
    u0 = SimState(np.zeros(system.n_dofs))
    dt = 1e-4
    nsteps = 2000

    results = {
        "explicit": _time(lambda: _explicit(u0, system, dt, 4, nsteps, 1e12), repeat) / nsteps,
        "implicit": _time(lambda: _implicit(u0, system, dt, nsteps, 1e12), repeat) / nsteps,
        "eigen": _time(lambda: stability_map(3, "explicit", resolution=51), repeat),
    }
    # both single-step entry points must agree with the batched kernels
    step_explicit(u0, system, dt)
    step_implicit_euler(u0, system, dt)
    json.dump({"numba": USE_NUMBA, "results": results}, sys.stdout)


def run_backend(no_numba, repeat):
    env = dict(os.environ, SBDG_NO_NUMBA="1" if no_numba else "0", SBDG_THREADS="1")
    out = subprocess.run([sys.executable, __file__, "--worker", "--repeat", str(repeat)],
                         env=env, check=True, capture_output=True, text=True)
    return json.loads(out.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--worker", action="store_true", help=argparse.SUPPRESS)
    args = parser.parse_args()
    if args.worker:
        worker(args.repeat)
        return
    fast = run_backend(False, args.repeat)
    slow = run_backend(True, args.repeat)
    if not fast["numba"]:
        print("numba is not importable; both columns use the fallback")
    print(f"{'case':40s} {'numba':>12s} {'numpy':>12s} {'speedup':>8s}")
    for label, key in CASES.items():
        a, b = fast["results"][key], slow["results"][key]
        print(f"{label:40s} {a:10.3e} s {b:10.3e} s {b / a:7.1f}x")
    print("explicit/implicit columns are per step; the eigensolver column is per map")


if __name__ == "__main__":
    main()
