"""Time each kernel on the numba and pure-numpy paths.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--json]

The backend is switched with ``BOSONCAP_DISABLE_NUMBA``; numba kernels are
warmed up once so compilation is not timed.
"""
import argparse
import json
import math
import os
import timeit

import numpy as np

from bosoncap import _accel, kernels


def _cases(rng):
    a = rng.normal(size=(20_000, 6, 6))
    spd = a @ a.transpose(0, 2, 1) + 0.1 * np.eye(6)

    k = 6
    x = rng.normal(size=(200_000, k))
    y = x + rng.normal(size=(200_000, k))
    eye = np.eye(k)

    w = rng.dirichlet(np.ones(64), size=32)

    n1 = np.linspace(0.0, 8.0, 801)
    r = np.linspace(-20.0, 20.0, 1601)
    return {
        "batched_logdet_spd (20000 x 6x6)": lambda: kernels.batched_logdet_spd(spd),
        "gaussian_llr (200000 x 6)": lambda: kernels.gaussian_llr(x, y, eye, eye / 2, 0.5 * k * math.log(2.0)),
        "blahut_arimoto (32 x 64, tol 1e-10)": lambda: kernels.blahut_arimoto(w, 1e-10),
        "single_mode_mi_grid (801 x 1601)": lambda: kernels.single_mode_mi_grid(n1, r, 4.0, 1.0),
    }


def _time(fn, repeat):
    fn()  # warm-up, includes JIT compilation on the numba path
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--json", action="store_true", help="emit JSON instead of a table")
    args = parser.parse_args(argv)

    cases = _cases(np.random.default_rng(0))
    results = []
    saved = os.environ.get("BOSONCAP_DISABLE_NUMBA")
    try:
        for name, fn in cases.items():
            os.environ["BOSONCAP_DISABLE_NUMBA"] = "1"
            t_numpy = _time(fn, args.repeat)
            t_numba = None
            if _accel.numba_available:
                os.environ["BOSONCAP_DISABLE_NUMBA"] = "0"
                t_numba = _time(fn, args.repeat)
            results.append({"kernel": name, "numpy_s": t_numpy, "numba_s": t_numba,
                            "speedup": None if t_numba is None else t_numpy / t_numba})
    finally:
        if saved is None:
            os.environ.pop("BOSONCAP_DISABLE_NUMBA", None)
        else:
            os.environ["BOSONCAP_DISABLE_NUMBA"] = saved

    if args.json:
        print(json.dumps(results, indent=1))
        return
    print(f"{'kernel':40s} {'numpy [ms]':>12s} {'numba [ms]':>12s} {'speedup':>8s}")
    for row in results:
        nb = "n/a" if row["numba_s"] is None else f"{1e3 * row['numba_s']:.2f}"
        sp = "n/a" if row["speedup"] is None else f"{row['speedup']:.1f}x"
        print(f"{row['kernel']:40s} {1e3 * row['numpy_s']:12.2f} {nb:>12s} {sp:>8s}")


if __name__ == "__main__":
    main()
