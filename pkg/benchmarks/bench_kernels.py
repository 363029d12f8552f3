#!/usr/bin/env python3
"""Time the compiled triple-sum kernels against the numpy fallback.

Two parts: raw per-block timings on synthetic index blocks, and an
end-to-end identity-residual batch on a real loss-network model with the
backend swapped in place.  Run from the repo root:

    python3 benchmarks/bench_kernels.py --trials 5
"""

import argparse
import time

import numpy as np

from glauberlab import _core_py, kernels
from glauberlab import bochner as bo
from glauberlab import generator as gen
from glauberlab import models as md


def _synthetic_block(rng, n_states, block_len, batch):
    i = rng.integers(0, n_states, size=block_len)
    jb = rng.integers(0, n_states, size=block_len)
    jc = rng.integers(0, n_states, size=block_len)
    jd = rng.integers(0, n_states, size=block_len)
    w = rng.uniform(0.1, 2.0, size=block_len)
    F = np.exp(rng.uniform(-2.0, 2.0, size=(batch, n_states)))
    G = np.exp(rng.uniform(-2.0, 2.0, size=(batch, n_states)))
    return i, jb, jc, jd, w, F, G


def _time(fn, trials):
    best = np.inf
    for _ in range(trials):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_raw(trials):
    rng = np.random.default_rng(0)
    impls = [("numpy", _core_py)]
    if kernels.HAVE_COMPILED:
        from glauberlab import _core

        impls.append(("compiled", _core))
    print(f"backend in use: {kernels.backend_name()}")
    print()
    print(f"{'block':<8} {'n_states':>9} {'len':>8} {'batch':>6} "
          + "".join(f"{name:>12}" for name, _ in impls)
          + ("{:>9}".format("speedup") if len(impls) == 2 else ""))
    for n_states, block_len, batch in [(256, 2_000, 16), (4_096, 20_000, 16),
                                       (16_384, 100_000, 8)]:
        i, jb, jc, jd, w, F, G = _synthetic_block(rng, n_states, block_len, batch)
        logf = np.log(F)
        reps = max(1, 2_000_000 // (block_len * batch))
        for label, args in [
            ("boch1", (i, jb, jc, jd, w, F, G)),
            ("boch2", (i, jb, jc, jd, w, F)),
            ("gamma", (i, jb, jc, w, F, logf)),
        ]:
            times = []
            for _, impl in impls:
                fn = getattr(impl, f"{label}_block")
                acc = np.zeros((batch, 4 if label != "gamma" else 2))

                def run():
                    for _ in range(reps):
                        fn(*args, acc)

                times.append(_time(run, trials) / reps * 1e6)
            row = (f"{label:<8} {n_states:>9} {block_len:>8} {batch:>6} "
                   + "".join(f"{t:>10.1f}us" for t in times))
            if len(times) == 2:
                row += f"{times[0] / times[1]:>8.1f}x"
            print(row)


def bench_end_to_end(trials):
    asm = gen.assemble(md.loss_network_model(routes=[[0], [1], [0, 1]],
                                             capacities=[6, 6], intensity=1.0))
    gm = bo.GammaMeasure.build(asm.kernel, asm.pi)
    rng = np.random.default_rng(1)
    n = asm.space.n_states
    F = np.exp(rng.uniform(-2.0, 2.0, size=(64, n)))
    G = np.exp(rng.uniform(-2.0, 2.0, size=(64, n)))
    print()
    print(f"identity batch, loss network with {n} states, 64 functions:")
    saved = kernels._impl
    try:
        for label, impl in [("numpy", _core_py)] + (
            [("compiled", saved)] if kernels.HAVE_COMPILED else []
        ):
            kernels._impl = impl
            t = _time(lambda: bo.bochner_identities_batch(gm, F, G), trials)
            print(f"  {label:<9} {t * 1e3:8.1f} ms")
    finally:
        kernels._impl = saved


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=3,
                    help="timing repetitions, best-of (default 3)")
    args = ap.parse_args()
    bench_raw(args.trials)
    bench_end_to_end(args.trials)


if __name__ == "__main__":
    main()
