"""Offline optimum and the knapsack reduction.

The offline optimum is the denominator of every competitive ratio here:
the best total value achievable by a clairvoyant, non-preemptive
scheduler. Preemption never helps it (an interrupted job contributes
nothing), so the search space is subsets plus one start time per job.

Exactness is desk-scale only: the search is exponential by necessity
(the knapsack reduction below is precisely why), so hard guards keep it
honest instead of letting it crawl.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd

from .model import GuardError, Instance, JobType, ValidationError

JOB_GUARD = 18
CANDIDATE_GUARD = 200_000
DENOMINATOR_GUARD = 1 << 40


def _exact(x) -> Fraction:
    f = Fraction(x)
    if f.denominator > DENOMINATOR_GUARD:
        raise GuardError(
            f"time value {x!r} is not grid-rational (denominator {f.denominator})"
        )
    return f


def _fraction_gcd(a: Fraction, b: Fraction) -> Fraction:
    if a == 0:
        return b
    if b == 0:
        return a
    num = gcd(a.numerator, b.numerator)
    den = (a.denominator * b.denominator) // gcd(a.denominator, b.denominator)
    return Fraction(num, den)


def _infer_grid(times: list[Fraction]) -> Fraction:
    g = Fraction(0)
    for t in times:
        g = _fraction_gcd(g, t)
    return g if g > 0 else Fraction(1)


def _start_candidates(instance: Instance, grid) -> list[list[Fraction]]:
    """Per-job start times worth trying, in engine job order.

    Any optimal schedule can be left-shifted until every job starts at its
    release or at another job's completion, so the closure of the release
    times under repeatedly adding job lengths covers some optimal
    schedule. All inputs are multiples of the grid, hence so is every
    closure point.
    """
    jobs = instance.jobs
    releases = [_exact(j.release) for j in jobs]
    deadlines = [_exact(j.deadline) for j in jobs]
    lengths = [_exact(j.length) for j in jobs]

    times = releases + deadlines + lengths
    if grid is None:
        g = _infer_grid(times)
    else:
        g = _exact(grid)
        if g <= 0:
            raise ValidationError("grid step must be positive")
        for t in times:
            if t % g != 0:
                raise GuardError(f"time {t} is not a multiple of grid {g}")

    latest = max(
        (d - length for d, length in zip(deadlines, lengths)), default=Fraction(0)
    )
    points = set(releases)
    frontier = list(points)
    length_set = sorted(set(lengths))
    while frontier:
        fresh = []
        for t in frontier:
            for step in length_set:
                u = t + step
                if u <= latest and u not in points:
                    points.add(u)
                    fresh.append(u)
                    if len(points) > CANDIDATE_GUARD:
                        raise GuardError(
                            "candidate start closure exceeds the search guard"
                        )
        frontier = fresh

    ordered = sorted(points)
    out = []
    total = 0
    for r, d, length in zip(releases, deadlines, lengths):
        cands = [t for t in ordered if r <= t <= d - length]
        total += len(cands)
        if total > CANDIDATE_GUARD:
            raise GuardError("candidate start count exceeds the search guard")
        out.append(cands)
    return out


def offline_opt(
    instance: Instance, grid=None
) -> tuple[float, tuple[tuple[int, float], ...]]:
    """Exact clairvoyant optimum and a witness schedule.

    Returns (welfare, ((job id, start), ...)) with the witness sorted by
    start time. Search is depth-first over jobs in release order,
    branch-and-bound with the remaining-value bound; time arithmetic is
    exact rational, so epsilon-shifted adversarial instances resolve
    correctly as long as their shifts are dyadic.
    """
    jobs = instance.jobs
    if len(jobs) > JOB_GUARD:
        raise GuardError(f"offline optimum limited to {JOB_GUARD} jobs, got {len(jobs)}")
    if not jobs:
        return 0.0, ()

    candidates = _start_candidates(instance, grid)
    lengths = [_exact(j.length) for j in jobs]
    capacity = instance.capacity

    suffix = [0.0] * (len(jobs) + 1)
    for i in range(len(jobs) - 1, -1, -1):
        suffix[i] = suffix[i + 1] + jobs[i].value

    best_value = 0.0
    best_sched: tuple[tuple[int, Fraction], ...] = ()
    placed: list[tuple[Fraction, Fraction, int]] = []
    chosen: list[tuple[int, Fraction]] = []

    def fits(start: Fraction, end: Fraction, demand: int) -> bool:
        probes = [start]
        for s, _, _ in placed:
            if start < s < end:
                probes.append(s)
        for u in probes:
            usage = demand
            for s, e, n in placed:
                if s <= u < e:
                    usage += n
                    if usage > capacity:
                        return False
        return True

    def dfs(idx: int, value: float) -> None:
        nonlocal best_value, best_sched
        if idx == len(jobs):
            if value > best_value:
                best_value = value
                best_sched = tuple(chosen)
            return
        if value + suffix[idx] <= best_value:
            return
        job = jobs[idx]
        length = lengths[idx]
        for start in candidates[idx]:
            end = start + length
            if fits(start, end, job.demand):
                placed.append((start, end, job.demand))
                chosen.append((job.id, start))
                dfs(idx + 1, value + job.value)
                placed.pop()
                chosen.pop()
        dfs(idx + 1, value)

    dfs(0, 0.0)
    witness = tuple(
        (job_id, float(start))
        for job_id, start in sorted(best_sched, key=lambda it: (it[1], it[0]))
    )
    return best_value, witness


def knapsack_to_instance(
    items: list[tuple[int, float]], capacity: int, threshold: float
) -> tuple[Instance, bool]:
    """Encode a 0/1 knapsack as a one-shot scheduling instance.

    Item (size, profit) becomes a job (release 0, deadline 1, demand size,
    length 1, value profit): everything competes for the machine during a
    single unit window, so the clairvoyant optimum is exactly the best
    knapsack packing. Returns the instance and the decision answer
    "does some packing reach the threshold". Oversized items (size > C)
    can never be packed and are left out of the emitted instance.
    """
    if capacity < 1:
        raise ValidationError("capacity must be a positive integer")
    kept = []
    for i, (size, profit) in enumerate(items):
        if not isinstance(size, int) or size < 1:
            raise ValidationError(f"item {i}: size must be a positive integer")
        if profit <= 0:
            raise ValidationError(f"item {i}: profit must be positive")
        if size <= capacity:
            kept.append(
                JobType(
                    id=i, release=0.0, deadline=1.0, demand=size, length=1.0,
                    value=float(profit),
                )
            )
    instance = Instance(capacity=capacity, kappa=1.0, jobs=tuple(kept))
    welfare, _ = offline_opt(instance, grid=1)
    return instance, welfare >= threshold
