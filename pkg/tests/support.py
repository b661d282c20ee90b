"""Independent reference computations used by several test modules.

These deliberately do not reuse the package's search code: the offline
enumerator walks every subset and every grid-aligned start assignment,
and the knapsack reference walks every subset. Slow and simple on
purpose.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction


def exhaustive_opt(instance, grid) -> float:
    """Best non-preemptive welfare over all subset x grid-start schedules.

    Valid when every release, deadline, and length is a multiple of
    ``grid`` (the fuzzer's instances): any feasible schedule left-shifts
    onto the grid, so enumerating grid starts is exhaustive.
    """
    g = Fraction(grid)
    jobs = list(instance.jobs)
    candidates = []
    slot_counts = []
    for j in jobs:
        release = Fraction(j.release)
        latest = Fraction(j.deadline) - Fraction(j.length)
        lo = math.ceil(release / g)
        hi = math.floor(latest / g)
        candidates.append([k * g for k in range(lo, hi + 1)])
        slots = Fraction(j.length) / g
        assert slots.denominator == 1, "length not grid aligned"
        slot_counts.append(int(slots))

    best = 0.0
    usage: dict[Fraction, int] = {}
    capacity = instance.capacity

    def dfs(i: int, value: float) -> None:
        nonlocal best
        if i == len(jobs):
            if value > best:
                best = value
            return
        dfs(i + 1, value)
        j = jobs[i]
        for s in candidates[i]:
            slots = [s + k * g for k in range(slot_counts[i])]
            if all(usage.get(t, 0) + j.demand <= capacity for t in slots):
                for t in slots:
                    usage[t] = usage.get(t, 0) + j.demand
                dfs(i + 1, value + j.value)
                for t in slots:
                    usage[t] -= j.demand

    dfs(0, 0.0)
    return best


def brute_knapsack_best(items: list[tuple[int, float]], capacity: int) -> float:
    """Max profit over every subset; items are (size, profit)."""
    best = 0.0
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            if sum(s for s, _ in combo) <= capacity:
                best = max(best, sum(p for _, p in combo))
    return best


def schedule_is_feasible(instance, schedule) -> bool:
    """Check a (job_id, start) witness against windows and capacity."""
    placed = {job_id: Fraction(start) for job_id, start in schedule}
    for job_id, start in placed.items():
        j = instance.job_by_id(job_id)
        if start < Fraction(j.release) - Fraction(1, 10**9):
            return False
        if start + Fraction(j.length) > Fraction(j.deadline) + Fraction(1, 10**9):
            return False
    probes = set(placed.values())
    for t in probes:
        used = 0
        for job_id, start in placed.items():
            j = instance.job_by_id(job_id)
            if start <= t < start + Fraction(j.length):
                used += j.demand
        if used > instance.capacity:
            return False
    return True
