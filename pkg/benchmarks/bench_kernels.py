"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--size N] [--trials T] [--repeat R]

Both backends are called directly, so one process measures both regardless
of QREPEATER_DISABLE_NUMBA.  Times are best-of-R wall clock after a warm-up
call (the warm-up absorbs JIT compilation).
"""

import argparse
import timeit

import numpy as np

from qrepeater import _accel, kernels
from qrepeater.bell import symmetric_chain_oracle


def best_of(fn, repeat):
    fn()
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=1_000_000, help="state pairs per batch call")
    ap.add_argument("--trials", type=int, default=200_000, help="Monte-Carlo trees")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(0)
    s1 = np.ascontiguousarray(rng.dirichlet(np.ones(4), args.size))
    s2 = np.ascontiguousarray(rng.dirichlet(np.ones(4), args.size))
    p_rounds = np.array([s.p_success for s in symmetric_chain_oracle(0.638, 0.98).steps])

    cases = {
        "purify_batch": (
            lambda: kernels.purify_batch_numpy(s1, s2),
            lambda: kernels.purify_batch_numba(s1, s2),
        ),
        "swap_batch": (
            lambda: kernels.swap_batch_numpy(s1, s2),
            lambda: kernels.swap_batch_numba(s1, s2),
        ),
        "symmetric_cost": (
            lambda: kernels.symmetric_cost_samples_numpy(p_rounds, args.trials, 1),
            lambda: kernels.symmetric_cost_samples_numba(p_rounds, args.trials, 1),
        ),
    }
    jit = _accel.numba_available()
    print(f"numba available: {jit}; active backend: {kernels.BACKEND}")
    print(f"{'kernel':<16}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for name, (np_fn, nb_fn) in cases.items():
        t_np = best_of(np_fn, args.repeat)
        if jit:
            t_nb = best_of(nb_fn, args.repeat)
            print(f"{name:<16}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.2f}x")
        else:
            print(f"{name:<16}{t_np:>12.4f}{'n/a':>12}{'':>10}")


if __name__ == "__main__":
    main()
