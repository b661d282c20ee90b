"""Timing comparison of the compiled and interpreted engine kernels.

Runs the same workloads through both kernels, checks they agree on every
welfare figure, and prints per-workload timings. Usage:

    python3 benchmarks/bench_kernels.py [--repeat N] [--seed S]
"""

import argparse
import statistics
import time

from cloudauction import engine
from cloudauction.adversarial import (
    gen_dp_lower,
    gen_exp_lower,
    gen_nmax_eq_C,
    gen_single_machine,
)
from cloudauction.engine import compile_instance, kernel_backend, run_compiled
from cloudauction.harness import fuzz_instances
from cloudauction.mechanisms import DPMechanism, GreedyMechanism
from cloudauction.priority import exponential


def build_workloads(seed: int):
    greedy = GreedyMechanism(exponential(2.0))
    dp = DPMechanism(2.0)
    workloads = {
        "fuzz small (200 x <=10 jobs, greedy)": (
            [compile_instance(i) for i in fuzz_instances(200, seed)], greedy
        ),
        "fuzz small (200 x <=10 jobs, dp)": (
            [compile_instance(i) for i in fuzz_instances(200, seed)], dp
        ),
        "fuzz large (40 x 40-80 jobs, greedy)": (
            [
                compile_instance(i)
                for i in fuzz_instances(
                    40, seed + 1, jobs_range=(40, 80), capacity_range=(4, 16)
                )
            ],
            greedy,
        ),
        "single-machine ladder p=12": (
            [compile_instance(gen_single_machine(kappa=1, chi=2.0, p=12).instance)],
            greedy,
        ),
        "exponential ladder h=2 n_max=3 p=10": (
            [
                compile_instance(
                    gen_exp_lower(h=2, n_max=3, kappa=1, chi=2.0, p=10).instance
                )
            ],
            greedy,
        ),
        "knapsack-rule ladder p=12": (
            [compile_instance(gen_dp_lower(n_max=1, kappa=1, chi=2.0, p=12).instance)],
            dp,
        ),
        "full-demand ladder C=4 p=10": (
            [compile_instance(gen_nmax_eq_C(C=4, p=10).instance)], greedy
        ),
    }
    return workloads


def time_workload(compiled_list, mechanism, repeat: int) -> tuple[float, list[float]]:
    best = float("inf")
    welfares: list[float] = []
    for _ in range(repeat):
        started = time.perf_counter()
        welfares = []
        for compiled in compiled_list:
            _, welfare, _ = run_compiled(compiled, mechanism)
            welfares.append(welfare)
        best = min(best, time.perf_counter() - started)
    return best, welfares


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5, help="best-of-N timing")
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if kernel_backend() != "cython":
        print("compiled kernel unavailable (pure-python install); nothing to compare")
        return 0

    workloads = build_workloads(args.seed)
    rows = []
    for label, (compiled_list, mechanism) in workloads.items():
        fast, fast_welfare = time_workload(compiled_list, mechanism, args.repeat)
        saved = engine._engine_cy
        engine._engine_cy = None  # force the interpreted kernel
        try:
            slow, slow_welfare = time_workload(compiled_list, mechanism, args.repeat)
        finally:
            engine._engine_cy = saved
        assert fast_welfare == slow_welfare, f"kernels disagree on {label!r}"
        rows.append((label, fast * 1e3, slow * 1e3, slow / fast))

    width = max(len(r[0]) for r in rows)
    print(f"{'workload':<{width}}  cython ms  pure ms   speedup")
    for label, fast_ms, slow_ms, speedup in rows:
        print(f"{label:<{width}}  {fast_ms:9.2f}  {slow_ms:7.2f}  {speedup:6.1f}x")
    print(f"\nmedian speedup: {statistics.median(r[3] for r in rows):.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
