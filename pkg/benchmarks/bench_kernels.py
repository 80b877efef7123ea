"""Numba vs numpy kernels, plus one full exact gradient under each backend.

    python benchmarks/bench_kernels.py [--sizes 12 16 20] [--repeat 5]

The gradient rows run in a subprocess per backend because the backend is
fixed at import time by QEL_DISABLE_NUMBA.
"""

from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

from qel import _kernels


def best_of(fn, repeat):
    fn()  # warm-up (and JIT compile)
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def kernel_rows(n, repeat):
    rng = np.random.default_rng(n)
    dim = 1 << n
    amps = (rng.normal(size=dim) + 1j * rng.normal(size=dim)) / np.sqrt(2 * dim)
    other = amps[::-1].copy()
    real = rng.normal(size=dim)
    th = rng.uniform(size=n)
    cs, sn = np.cos(th), np.sin(th)
    rows = []
    for name in ("mixer", "phase", "fwht", "mixer_grad"):
        res = {}
        for be in (_kernels.NUMPY, _kernels.NUMBA):
            if be is None:
                continue
            f = getattr(be, name)
            if name == "mixer":
                call = lambda f=f: f(amps.copy(), cs, sn)
            elif name == "phase":
                call = lambda f=f: f(amps.copy(), real)
            elif name == "fwht":
                call = lambda f=f: f(real.copy())
            else:
                call = lambda f=f: f(other, amps, n)
            res[be.name] = best_of(call, repeat)
        rows.append((name, n, res))
    return rows


GRAD_SNIPPET = """
import json, sys, time
import numpy as np
from qel import _kernels
from qel.ansatz import CircuitLayout, init_params
from qel.datagen import gen_maxcut
from qel.gradient import grad_exact
n, repeat = int(sys.argv[1]), int(sys.argv[2])
ds = gen_maxcut(n, 1, 0)
inst = ds.instances[0]
L = CircuitLayout.for_spec(ds.spec, 3, "withbias", "log", 2)
P = init_params(L, np.random.default_rng(0))
grad_exact(P, [inst])
best = 1e9
for _ in range(repeat):
    t = time.perf_counter(); grad_exact(P, [inst]); best = min(best, time.perf_counter() - t)
print(json.dumps({"backend": _kernels.ACTIVE.name, "seconds": best}))
"""


def gradient_row(n, repeat, disable):
    env = dict(os.environ, QEL_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run(
        [sys.executable, "-c", GRAD_SNIPPET, str(n), str(repeat)], env=env, capture_output=True, text=True, check=True
    )
    return json.loads(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--sizes", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--grad-sizes", type=int, nargs="+", default=[12, 16])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    print(f"{'kernel':<12}{'n':>4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in args.sizes:
        for name, n_, res in kernel_rows(n, args.repeat):
            a, b = res.get("numpy", float("nan")), res.get("numba", float("nan"))
            print(f"{name:<12}{n_:>4}{a * 1e3:>12.3f}{b * 1e3:>12.3f}{a / b:>10.2f}")
    print()
    print(f"{'gradient':<12}{'n':>4}{'numpy ms':>12}{'numba ms':>12}{'speedup':>10}")
    for n in args.grad_sizes:
        a = gradient_row(n, args.repeat, True)["seconds"]
        b = gradient_row(n, args.repeat, False)["seconds"]
        print(f"{'grad_exact':<12}{n:>4}{a * 1e3:>12.3f}{b * 1e3:>12.3f}{a / b:>10.2f}")


if __name__ == "__main__":
    main()
