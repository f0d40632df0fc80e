"""Compare the compiled and pure-Python kernels.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Reports the best wall time per call for Jacobi eigendecomposition of
random graph Laplacians and for diagonal-GMM frame scoring, plus the
maximum disagreement between the two backends.
"""

import argparse
import timeit

import numpy as np

from graphceps import _backend


def _laplacian(n, rng):
    a = rng.uniform(0.0, 1.0, (n, n))
    a = np.triu(a, 1)
    a = a + a.T
    return np.diag(a.sum(axis=1)) - a


def bench(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    try:
        backends = {"python": _backend.kernels("python"), "compiled": _backend.kernels("compiled")}
    except ImportError:
        print("compiled extension not built; only the python backend is available")
        backends = {"python": _backend.kernels("python")}

    print(f"{'kernel':<28}{'backend':<10}{'time [ms]':>12}")
    for n in (13, 32, 64):
        lap = _laplacian(n, rng)
        results = {}
        for name, mod in backends.items():
            t = bench(lambda: mod.jacobi_eigh(lap, 1e-12), args.repeat)
            results[name] = mod.jacobi_eigh(lap, 1e-12)
            print(f"{'jacobi N=' + str(n):<28}{name:<10}{1e3 * t:>12.3f}")
        if len(results) == 2:
            w1 = np.sort(results["python"][0])
            w2 = np.sort(results["compiled"][0])
            print(f"{'':<28}{'max |dw|':<10}{np.max(np.abs(w1 - w2)):>12.2e}")

    for t_frames, m, k in ((400, 8, 13), (4000, 8, 13)):
        x = rng.standard_normal((t_frames, k))
        means = rng.standard_normal((m, k))
        inv_var = rng.uniform(0.5, 2.0, (m, k))
        lc = rng.standard_normal(m)
        totals = {}
        for name, mod in backends.items():
            t = bench(lambda: mod.diag_gmm_logpdf(x, means, inv_var, lc), args.repeat)
            totals[name] = mod.diag_gmm_logpdf(x, means, inv_var, lc)[1]
            print(f"{f'gmm logpdf T={t_frames} M={m}':<28}{name:<10}{1e3 * t:>12.3f}")
        if len(totals) == 2:
            print(f"{'':<28}{'max |dll|':<10}{np.max(np.abs(totals['python'] - totals['compiled'])):>12.2e}")


if __name__ == "__main__":
    main()
