"""Interpreted event-loop kernel.

This is the reference implementation and the fallback when the compiled
kernel is unavailable. The compiled twin mirrors this loop operation for
operation (same comparison order, same float expressions), so results are
bit-identical across kernels for the built-in selection rules.
"""

from __future__ import annotations

import math

from .model import EPS_CMP


def run_loop(
    ids,
    release,
    deadline,
    demand,
    length,
    value,
    capacity,
    arrivals,
    select,
    reallocate,
    collect,
):
    """Drive one auction to the end.

    ``select(jobs, capacity, deltas)`` receives the feasible jobs as
    (id, demand, value) triples plus each one's continuously-processed
    fraction and returns the ids to run until the next decision point.

    Returns (completed flags per position, welfare, intervals) where
    intervals is a list of (job id, start, end, finished) runs, or None
    when collect is false.
    """
    count = len(ids)
    run_start = [math.nan] * count
    completed = [False] * count
    welfare = 0.0
    intervals = [] if collect else None

    def settle(limit):
        nonlocal welfare
        finishing = []
        for i in range(count):
            if completed[i] or run_start[i] != run_start[i]:
                continue
            finish = run_start[i] + length[i]
            if finish <= limit + EPS_CMP:
                finishing.append((finish, ids[i], i))
        finishing.sort()
        for finish, _, i in finishing:
            completed[i] = True
            welfare += value[i]
            if collect:
                intervals.append((ids[i], run_start[i], finish, True))
            run_start[i] = math.nan

    def reselect(t):
        feasible = []
        deltas = {}
        for i in range(count):
            if completed[i]:
                continue
            if release[i] > t + EPS_CMP:
                continue
            if run_start[i] == run_start[i]:
                delta = (t - run_start[i]) / length[i]
            else:
                delta = 0.0
            if (deadline[i] - t) - (1.0 - delta) * length[i] < -EPS_CMP:
                continue
            feasible.append(i)
            deltas[ids[i]] = delta
        if feasible:
            chosen = select(
                [(ids[i], demand[i], value[i]) for i in feasible], capacity, deltas
            )
            used = sum(demand[i] for i in feasible if ids[i] in chosen)
            if used > capacity:
                raise RuntimeError(
                    f"selection rule exceeded capacity at t={t}: {used} > {capacity}"
                )
        else:
            chosen = set()
        for i in range(count):
            if completed[i] or run_start[i] != run_start[i]:
                continue
            if ids[i] not in chosen:
                if collect and t > run_start[i]:
                    intervals.append((ids[i], run_start[i], t, False))
                run_start[i] = math.nan
        for i in feasible:
            if ids[i] in chosen and run_start[i] != run_start[i]:
                run_start[i] = t

    if not reallocate:
        for t in arrivals:
            settle(t)
            reselect(t)
    else:
        next_arrival = 0
        while True:
            arr = arrivals[next_arrival] if next_arrival < len(arrivals) else None
            fin = None
            for i in range(count):
                if not completed[i] and run_start[i] == run_start[i]:
                    f = run_start[i] + length[i]
                    if fin is None or f < fin:
                        fin = f
            if arr is None and fin is None:
                break
            if arr is not None and (fin is None or arr <= fin + EPS_CMP):
                t = arr
                next_arrival += 1
                while (
                    next_arrival < len(arrivals)
                    and arrivals[next_arrival] <= t + EPS_CMP
                ):
                    next_arrival += 1
            else:
                t = fin
            settle(t)
            reselect(t)

    settle(math.inf)
    return completed, welfare, intervals
