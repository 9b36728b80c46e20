"""Time the compiled and pure-Python annealing kernels on identical inputs.

Both backends are fed the same start design, uniforms and temperatures, so
besides the timing the script also reports whether their trajectories match.

    python benchmarks/bench_kernels.py --k 8 --n 20 --iters 20000
"""
import argparse
import time

import numpy as np

from maximin_lhd import kernels
from maximin_lhd.core import InstanceSpec, random_config
from maximin_lhd.evaluation import EvalParams

EVALS = {
    "phi": EvalParams("phi", p=10.0),
    "psi": EvalParams("psi", p=10.0, sigma="auto"),
    "psi-exact": EvalParams("psi", p=10.0, sigma="auto", cutoff_enabled=False),
    "psi-sub": EvalParams("psi", p=10.0, sigma="auto", subsample_size=32),
}


def time_backend(backend, coords, mutation, params, u, temps, repeat):
    best, kern = float("inf"), None
    for _ in range(repeat):
        kern = kernels.make_kernel(coords, mutation, params, backend)
        t = time.perf_counter()
        kern.run(u, temps)
        best = min(best, time.perf_counter() - t)
    return best, kern


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=8)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--iters", type=int, default=20000)
    ap.add_argument("--python-iters", type=int, default=2000,
                    help="the pure-Python kernel is slow; time it on fewer iterations")
    ap.add_argument("--mutation", default="1dmove", choices=sorted(kernels.MUTATION_CODES))
    ap.add_argument("--eval", nargs="+", default=list(EVALS), choices=list(EVALS))
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    inst = InstanceSpec(args.k, args.n)
    coords = random_config(inst, args.seed).coords
    rng = np.random.default_rng(args.seed)
    print(f"instance {inst}, mutation {args.mutation}, backends {sorted(kernels.BACKENDS)}")
    print(f"{'eval':<10} {'backend':<8} {'us/iter':>10} {'speedup':>8}  identical")
    for name in args.eval:
        params = EVALS[name].resolve(inst.k, inst.n)
        width = kernels.uniforms_per_iteration(params)
        u = rng.random((args.iters, width))
        temps = np.linspace(1e-3, 0.0, args.iters)
        m = min(args.python_iters, args.iters)
        t_py, k_py = time_backend("python", coords, args.mutation, params, u[:m], temps[:m], 1)
        per_py = t_py / m * 1e6
        print(f"{name:<10} {'python':<8} {per_py:>10.2f} {1.0:>8.1f}")
        if "cython" not in kernels.BACKENDS:
            continue
        t_cy, _ = time_backend("cython", coords, args.mutation, params, u, temps, args.repeat)
        _, k_cy = time_backend("cython", coords, args.mutation, params, u[:m], temps[:m], 1)
        same = np.array_equal(k_cy.get_coords(), k_py.get_coords()) and k_cy.e_cur == k_py.e_cur
        per_cy = t_cy / args.iters * 1e6
        print(f"{name:<10} {'cython':<8} {per_cy:>10.2f} {per_py / per_cy:>8.1f}  {same}")


if __name__ == "__main__":
    main()
