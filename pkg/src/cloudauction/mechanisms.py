"""Selection rules: density-greedy and exact-knapsack.

Both rules look only at the feasible jobs' current boosted scores and the
capacity; they never peek at future arrivals. The engine calls ``select``
at every decision point.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import GuardError
from .priority import PriorityFunction, exponential

# Desk-scale cap on the knapsack table, (items+1) * (capacity+1) entries.
DP_TABLE_GUARD = 2_000_000


@dataclass(frozen=True)
class ScoredJob:
    """A feasible job's selection inputs at one decision point.

    density is (value/demand) * f(delta); virtual_value is value * f(delta).
    """

    job_id: int
    demand: int
    density: float
    virtual_value: float


def score_jobs(jobs, priority: PriorityFunction, deltas) -> list[ScoredJob]:
    """Score jobs for selection. ``jobs`` yields (id, demand, value); ``deltas``
    maps id to the current continuously-processed fraction."""
    out = []
    for job_id, demand, value in jobs:
        boost = priority.eval(deltas.get(job_id, 0.0))
        out.append(
            ScoredJob(
                job_id=job_id,
                demand=demand,
                density=(value / demand) * boost,
                virtual_value=value * boost,
            )
        )
    return out


def greedy_select(scored: list[ScoredJob], capacity: int) -> set[int]:
    """Density-greedy selection.

    Sort by density descending (ties: higher virtual value, then lower id).
    If everything fits, run everything. Otherwise cut at the first job k
    whose inclusion would exceed capacity: run the prefix before k if its
    total virtual value is at least k's, else run job k alone. No
    backfilling after the cut.
    """
    if not scored:
        return set()
    order = sorted(scored, key=lambda s: (-s.density, -s.virtual_value, s.job_id))
    total = 0
    prefix_value = 0.0
    for idx, s in enumerate(order):
        total += s.demand
        if total > capacity:
            if prefix_value >= s.virtual_value:
                return {t.job_id for t in order[:idx]}
            return {s.job_id}
        prefix_value += s.virtual_value
    return {s.job_id for s in order}


@dataclass(frozen=True)
class KnapsackProblem:
    """Integer-weight knapsack: items are (id, weight, profit)."""

    items: tuple[tuple[int, int, float], ...]
    capacity: int


def knapsack_dp(problem: KnapsackProblem) -> tuple[set[int], float]:
    """Exact profit-maximal subset with total weight at most capacity.

    Suffix dynamic program over items in ascending id order; reconstruction
    includes an item whenever doing so loses nothing, which yields the
    lexicographically smallest id set among profit maximizers (profits are
    positive, so included ids are always preferred on ties).
    """
    cap = problem.capacity
    items = sorted(problem.items, key=lambda it: it[0])
    n = len(items)
    if cap < 0:
        raise ValueError("capacity must be non-negative")
    if any(w < 1 for _, w, _ in items):
        raise ValueError("knapsack weights must be positive integers")
    if (n + 1) * (cap + 1) > DP_TABLE_GUARD:
        raise GuardError(
            f"knapsack table {(n + 1)}x{cap + 1} exceeds the desk-scale guard"
        )
    if n == 0 or cap == 0:
        return set(), 0.0

    width = cap + 1
    # best[j*width + c] = max profit using items j.. with capacity c
    best = [0.0] * ((n + 1) * width)
    for j in range(n - 1, -1, -1):
        _, w, p = items[j]
        row = j * width
        nxt = (j + 1) * width
        for c in range(width):
            skip = best[nxt + c]
            if w <= c:
                take = p + best[nxt + c - w]
                best[row + c] = take if take >= skip else skip
            else:
                best[row + c] = skip

    chosen: set[int] = set()
    c = cap
    for j in range(n):
        ident, w, p = items[j]
        if w <= c and p + best[(j + 1) * width + c - w] >= best[(j + 1) * width + c]:
            chosen.add(ident)
            c -= w
    return chosen, best[cap]


def dp_select(scored: list[ScoredJob], capacity: int) -> set[int]:
    """Exact selection: the most valuable feasible set by virtual value."""
    problem = KnapsackProblem(
        items=tuple((s.job_id, s.demand, s.virtual_value) for s in scored),
        capacity=capacity,
    )
    chosen, _ = knapsack_dp(problem)
    return chosen


class GreedyMechanism:
    """Density-greedy allocation with a configurable priority function."""

    name = "greedy"

    def __init__(self, priority: PriorityFunction):
        self.priority = priority

    def select(self, jobs, capacity: int, deltas) -> set[int]:
        return greedy_select(score_jobs(jobs, self.priority, deltas), capacity)


class DPMechanism:
    """Exact-knapsack allocation. Specified only with the exponential boost;
    the competitive analysis is tied to that shape."""

    name = "dp"

    def __init__(self, chi: float = 2.0):
        self.priority = exponential(chi)
        self.chi = float(chi)

    def select(self, jobs, capacity: int, deltas) -> set[int]:
        return dp_select(score_jobs(jobs, self.priority, deltas), capacity)
