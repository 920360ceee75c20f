"""Time the compiled dual-segment kernel against the pure-Python one.

    python benchmarks/bench_kernels.py [--T 20000] [--repeat 5]
"""

import argparse
import time

import numpy as np

from onlinealloc._kernels import BACKEND, EUCLIDEAN, compiled_segment, reference_segment
from onlinealloc.instances import gen_stochastic, two_type_spec
from onlinealloc.model import compute_params


def _time(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=20000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    seq = gen_stochastic(two_type_spec(seed=0), args.T)
    params = compute_params(seq, [0.5])
    arr = seq.arrays
    call = (arr.rewards, arr.consumption, arr.n_actions, params.rho, np.zeros(1), params.budget,
            1.0 / np.sqrt(args.T), EUCLIDEAN, 1.0, params.mu_max, 0, args.T)

    ref_t, ref_out = _time(reference_segment, call, max(1, args.repeat // 2))
    print(f"backend selected at import: {BACKEND}")
    print(f"pure python  T={args.T}: {ref_t * 1e3:9.2f} ms")
    if compiled_segment is None:
        print("compiled kernel not built; skipping comparison")
        return
    cy_t, cy_out = _time(compiled_segment, call, args.repeat)
    same = all(np.array_equal(a, b) for a, b in zip(ref_out, cy_out))
    print(f"compiled     T={args.T}: {cy_t * 1e3:9.2f} ms  ({ref_t / cy_t:.0f}x, identical={same})")


if __name__ == "__main__":
    main()
