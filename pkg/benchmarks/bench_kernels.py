"""Time the compiled kernels against the numpy fallback on falsifier-sized batches.

Usage: python3 benchmarks/bench_kernels.py [--trials N] [--states N] [--repeat N]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from robustimp import kernels


def make_batch(rng: np.random.Generator, trials: int, n: int, actions: int, knots: int):
    xs = np.sort(rng.uniform(-10, 10, (trials, knots)), axis=1)
    slopes = np.sort(rng.exponential(1.0, (trials, knots + 1)), axis=1)[:, ::-1]
    ys = np.zeros_like(xs)
    ys[:, 1:] = np.cumsum(slopes[:, 1:-1] * np.diff(xs, axis=1), axis=1)
    left, right = slopes[:, 0].copy(), slopes[:, -1].copy()
    payoffs = rng.uniform(-10, 10, (actions, n))
    beliefs = rng.dirichlet(np.ones(n), trials)
    return xs, ys, left, right, payoffs, beliefs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=2048)
    ap.add_argument("--states", type=int, default=5)
    ap.add_argument("--actions", type=int, default=4)
    ap.add_argument("--knots", type=int, default=3)
    ap.add_argument("--repeat", type=int, default=20)
    args = ap.parse_args()

    batch = make_batch(np.random.default_rng(0), args.trials, args.states, args.actions,
                       args.knots)
    impls = {"numpy": (kernels.py_batch_expected_utilities, kernels.py_first_chain_violation)}
    if kernels.HAVE_EXTENSION:
        impls["cython"] = (kernels.c_batch_expected_utilities, kernels.c_first_chain_violation)
    else:
        print("compiled extension not available; timing the numpy fallback only")

    print(f"batch: {args.trials} trials, {args.states} states, {args.actions} actions, "
          f"{args.knots} knots")
    ref = None
    timings = {}
    for name, (eu, chain) in impls.items():
        out = eu(*batch)
        if ref is None:
            ref = out
        else:
            np.testing.assert_allclose(out, ref, rtol=1e-12, atol=1e-12)
        t_eu = min(timeit.repeat(lambda: eu(*batch), number=1, repeat=args.repeat))
        # eps large enough that no trial qualifies, so the whole batch is scanned
        t_ch = min(timeit.repeat(lambda: chain(*batch, 1e9), number=1, repeat=args.repeat))
        timings[name] = (t_eu, t_ch)
        print(f"{name:>7}: expected utilities {t_eu * 1e3:8.3f} ms   "
              f"chain scan {t_ch * 1e3:8.3f} ms")
    if len(timings) == 2:
        (ne, nc), (ce, cc) = timings["numpy"], timings["cython"]
        print(f"speedup: expected utilities {ne / ce:.1f}x, chain scan {nc / cc:.1f}x")


if __name__ == "__main__":
    main()
