"""Benchmark the numba kernels against the pure-numpy fallback.

Run:  python3 benchmarks/bench_kernels.py [--trials 2000000] [--repeat 5]

The same element-wise math backs both paths (FLEXCON_NO_NUMBA=1 selects the
numpy one at import time); this script times them side by side and checks the
outputs agree.
"""

import argparse
import time

import numpy as np

from flexcon import _kernels as K


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--trials", type=int, default=2_000_000)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    if not hasattr(K, "customer_cost_numba"):
        print("numba backend unavailable (FLEXCON_NO_NUMBA set or numba missing); nothing to compare")
        return

    rng = np.random.default_rng(7)
    x = rng.uniform(0.0, 4.0, args.trials)
    deltas = np.linspace(0.0, 1.0, args.trials)
    cost_args = (9.0, 0.3, 40.0, 1.1, 20.0)
    curve_args = (1.0, 9.0, 0.5, 40.0, 1.2, 20.0)

    # trigger JIT compilation outside the timed region
    K.customer_cost_numba(x[:16], *cost_args)
    K.payment_energy_numba(x[:16], *cost_args)
    K.cross_cost_curve_numba(deltas[:16], *curve_args)
    K.own_cost_curve_numba(deltas[:16], 1.1, 9.0, 0.3, 40.0, 20.0)

    rows = [
        ("customer_cost", lambda f: f(x, *cost_args),
         K.customer_cost_numpy, K.customer_cost_numba),
        ("payment_energy", lambda f: f(x, *cost_args),
         K.payment_energy_numpy, K.payment_energy_numba),
        ("own_cost_curve", lambda f: f(deltas, 1.1, 9.0, 0.3, 40.0, 20.0),
         K.own_cost_curve_numpy, K.own_cost_curve_numba),
        ("cross_cost_curve", lambda f: f(deltas, *curve_args),
         K.cross_cost_curve_numpy, K.cross_cost_curve_numba),
    ]
    print(f"{args.trials:,} elements, best of {args.repeat}")
    print(f"{'kernel':<18} {'numpy':>10} {'numba':>10} {'speedup':>9}  agree")
    for name, call, f_np, f_nb in rows:
        t_np = best_of(lambda: call(f_np), args.repeat)
        t_nb = best_of(lambda: call(f_nb), args.repeat)
        out_np, out_nb = call(f_np), call(f_nb)
        if isinstance(out_np, tuple):
            agree = all(np.allclose(a, b, rtol=1e-14, atol=0) for a, b in zip(out_np, out_nb))
        else:
            agree = np.allclose(out_np, out_nb, rtol=1e-14, atol=0)
        print(f"{name:<18} {t_np*1e3:>8.1f}ms {t_nb*1e3:>8.1f}ms {t_np/t_nb:>8.1f}x  {agree}")


if __name__ == "__main__":
    main()
