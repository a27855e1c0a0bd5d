"""Time the numba kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py [--n 1500] [--q 4] [--repeat 5]
"""
import argparse
import time

import numpy as np

from nbldpc import kernels
from nbldpc.channel import awgn_llrv, qsc_transmit
from nbldpc.decoders import fft_qspa_decode, gallager_b_decode
from nbldpc.ensemble import DegreeDistribution, realize_node_counts
from nbldpc.graph import assign_labels, girth, peg_construct


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1500)
    ap.add_argument("--q", type=int, default=4)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    vs, cs = realize_node_counts(DegreeDistribution.regular(3, 6), args.n)
    H = assign_labels(peg_construct(vs, cs, seed=0, q=args.q), args.q, seed=0)
    rng = np.random.default_rng(0)
    zero = np.zeros(H.n, dtype=np.int64)
    llr = awgn_llrv(zero, 1.5, 0.5, args.q, rng)
    hard = qsc_transmit(zero, 0.05, args.q, rng)

    jobs = {
        "peg_build": lambda: peg_construct(vs, cs, seed=0, q=args.q),
        "girth": lambda: girth(H),
        "gallager_b (20 it)": lambda: gallager_b_decode(H, hard, 20, p0=0.05),
        "fft_qspa (20 it)": lambda: fft_qspa_decode(H, llr, 20),
    }
    old = kernels.backend()
    results = {}
    for name in kernels.available():
        kernels.set_backend(name)
        for job, fn in jobs.items():
            fn()  # warm-up, includes compilation for numba
            results[job, name] = best_of(fn, args.repeat)
    kernels.set_backend(old)

    print(f"n={H.n} q={args.q} edges={H.E}, best of {args.repeat}")
    print(f"{'kernel':<20s}" + "".join(f"{b:>12s}" for b in kernels.available()) + "     speedup")
    for job in jobs:
        row = [results[job, b] for b in kernels.available()]
        speed = results[job, "numpy"] / results[job, "numba"] if "numba" in kernels.available() else 1.0
        print(f"{job:<20s}" + "".join(f"{t * 1e3:>10.2f}ms" for t in row) + f"{speed:>11.1f}x")


if __name__ == "__main__":
    main()
