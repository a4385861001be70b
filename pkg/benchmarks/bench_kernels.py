"""Compare the compiled closed-loop kernel with the numpy fallback.

    python benchmarks/bench_kernels.py [--sizes 10 100 1000 10000] [--repeat 5]

Both backends get identical inputs; the script also checks that their
outputs are bit-identical before timing them.
"""

import argparse
import time

import numpy as np

from recloop import kernels
from recloop.distributions import Gaussian, Uniform
from recloop.dynamics import ModelParams, RecommenderConfig, SuccessRule, _user_inputs

CASES = [
    ("T=1", RecommenderConfig(1, cycles=100)),
    ("T=5", RecommenderConfig(5, cycles=20)),
    ("T=5 history", RecommenderConfig(5, cycles=20, success_rule=SuccessRule.HISTORY)),
    ("initial-only", RecommenderConfig(None, horizon_override=100)),
]


def _best_of(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[10, 100, 1000, 10000, 100000])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if kernels.compiled_run_users is None:
        raise SystemExit("compiled extension not available; build with `pip install -e . --no-build-isolation`")
    params = ModelParams(0.1, 0.7, Uniform(0.0, 2.0), Gaussian(0.0, 0.5))
    print(f"{'case':<14}{'M':>8}{'compiled s':>13}{'fallback s':>13}{'speedup':>9}")
    for name, cfg in CASES:
        period = 0 if cfg.period is None else cfg.period
        for m in args.sizes:
            x0, draws = _user_inputs(params, cfg, np.arange(m))
            call = (x0, draws, params.alpha, params.beta, params.gamma, period, cfg.horizon,
                    cfg.success_rule is SuccessRule.HISTORY, False)
            a, b = kernels.compiled_run_users(*call), kernels.fallback_run_users(*call)
            assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1]), "backends disagree"
            tc = _best_of(kernels.compiled_run_users, call, args.repeat)
            tf = _best_of(kernels.fallback_run_users, call, args.repeat)
            print(f"{name:<14}{m:>8}{tc:>13.6f}{tf:>13.6f}{tf / tc:>8.1f}x")


if __name__ == "__main__":
    main()
