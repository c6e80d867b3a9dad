"""Time the numba kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 5] [--n 6]

Each kernel runs once per backend before timing so numba compilation is
excluded. Results of the two backends are compared as well.
"""
import argparse
import time

import numpy as np

from nsfinsler import kernels
from nsfinsler.matrix_finsler import family_min_eigs, gen_mfl_pair
from nsfinsler.oracle import alpha_linesearch, gen_random_instance, lambda_min_profile


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def cases(n, rng):
    insts = [gen_random_instance(n, s, "indefinite").inst for s in range(40)]
    alphas = np.linspace(-50.0, 50.0, 4000)
    M = insts[0].M
    X = rng.standard_normal((20000, n))
    pair = gen_mfl_pair(3, 3, 11, "feasible")
    thetas = rng.standard_normal((5000, 3 - np.linalg.matrix_rank(pair.N22), 3))

    return {
        "lambda_min profile (4000 alphas)": lambda: lambda_min_profile(insts[0], alphas),
        "line search (40 instances)": lambda: np.array([alpha_linesearch(i).value for i in insts]),
        "quadratic ratios (20000 vectors)": lambda: kernels.backend.quadratic_ratios(M, X),
        "null-family eigenvalues (5000)": lambda: family_min_eigs(pair, thetas),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--n", type=int, default=6)
    args = ap.parse_args()

    backends = ["numpy"] + (["numba"] if kernels.NUMBA is not None else [])
    results = {}
    for name in backends:
        kernels.use(name)
        rng = np.random.default_rng(0)
        results[name] = {label: best_of(fn, args.repeat) for label, fn in cases(args.n, rng).items()}

    width = max(len(k) for k in results["numpy"])
    print(f"{'kernel':<{width}}  {'numpy [ms]':>11}  {'numba [ms]':>11}  {'speedup':>8}  {'max |diff|':>10}")
    for label, (t_np, out_np) in results["numpy"].items():
        if "numba" in results:
            t_nb, out_nb = results["numba"][label]
            diff = float(np.max(np.abs(np.asarray(out_np) - np.asarray(out_nb))))
            print(f"{label:<{width}}  {1e3 * t_np:11.2f}  {1e3 * t_nb:11.2f}  {t_np / t_nb:7.1f}x  {diff:10.2e}")
        else:
            print(f"{label:<{width}}  {1e3 * t_np:11.2f}  {'n/a':>11}")


if __name__ == "__main__":
    main()
