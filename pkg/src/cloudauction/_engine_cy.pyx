# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled event-loop kernel.

Mirrors _engine_py.run_loop operation for operation for the built-in
selection rules (greedy and exact-knapsack with exponential, linear, or
tabulated boosts), in the same order, so the two kernels return
bit-identical results. Only the arrival-driven decision schedule is
implemented here; the reallocate-on-completion variant always runs on the
interpreted kernel.
"""

from libc.math cimport INFINITY, NAN, pow

import numpy as np

from .mechanisms import DP_TABLE_GUARD
from .model import GuardError

cdef double EPS = 1e-9  # keep in sync with model.EPS_CMP


cdef inline double _boost(int kind, double param, double[::1] table, double delta):
    cdef double x, frac
    cdef int lo
    if kind == 0:
        return pow(param, delta)
    if kind == 1:
        return 1.0 + param * delta
    x = delta * 1024.0
    lo = <int> x
    if lo >= 1024:
        return table[1024]
    frac = x - lo
    return table[lo] * (1.0 - frac) + table[lo + 1] * frac


cdef inline bint _sel_less(long a, long b, double[::1] dens, double[::1] vv,
                           long[::1] ids):
    if dens[a] > dens[b]:
        return 1
    if dens[a] == dens[b]:
        if vv[a] > vv[b]:
            return 1
        if vv[a] == vv[b] and ids[a] < ids[b]:
            return 1
    return 0


cdef void _settle(double limit, long[::1] ids, double[::1] length,
                  double[::1] value, double[::1] run_start,
                  unsigned char[::1] completed, long[::1] fin_buf,
                  double[::1] wel, list intervals) except *:
    cdef Py_ssize_t J = ids.shape[0]
    cdef Py_ssize_t i, j, m = 0
    cdef long key, p
    cdef double fa, fb, fin
    for i in range(J):
        if completed[i] or run_start[i] != run_start[i]:
            continue
        if run_start[i] + length[i] <= limit + EPS:
            fin_buf[m] = i
            m += 1
    # order completions by (finish time, id)
    for i in range(1, m):
        key = fin_buf[i]
        j = i - 1
        while j >= 0:
            fa = run_start[key] + length[key]
            fb = run_start[fin_buf[j]] + length[fin_buf[j]]
            if fa < fb or (fa == fb and ids[key] < ids[fin_buf[j]]):
                fin_buf[j + 1] = fin_buf[j]
                j -= 1
            else:
                break
        fin_buf[j + 1] = key
    for i in range(m):
        p = fin_buf[i]
        fin = run_start[p] + length[p]
        completed[p] = 1
        wel[0] += value[p]
        if intervals is not None:
            intervals.append((ids[p], run_start[p], fin, True))
        run_start[p] = NAN


cdef void _reselect(double t, long[::1] ids, double[::1] release,
                    double[::1] deadline, long[::1] demand, double[::1] length,
                    double[::1] value, long capacity, int mech_kind,
                    int boost_kind, double boost_param, double[::1] table,
                    double[::1] run_start, unsigned char[::1] completed,
                    long[::1] feas, double[::1] dens, double[::1] vv,
                    long[::1] order, unsigned char[::1] chosen,
                    list intervals) except *:
    cdef Py_ssize_t J = ids.shape[0]
    cdef Py_ssize_t i, j, idx, m = 0
    cdef long p, key, total, w, c
    cdef Py_ssize_t width, row, nxt
    cdef double delta, boost, prefix_value, skip, take, prof
    cdef bint cut
    cdef double[::1] best

    for i in range(J):
        chosen[i] = 0
        if completed[i]:
            continue
        if release[i] > t + EPS:
            continue
        if run_start[i] == run_start[i]:
            delta = (t - run_start[i]) / length[i]
        else:
            delta = 0.0
        if (deadline[i] - t) - (1.0 - delta) * length[i] < -EPS:
            continue
        boost = _boost(boost_kind, boost_param, table, delta)
        dens[i] = (value[i] / (<double> demand[i])) * boost
        vv[i] = value[i] * boost
        feas[m] = i
        m += 1

    if m > 0 and mech_kind == 0:
        for i in range(m):
            order[i] = feas[i]
        for i in range(1, m):
            key = order[i]
            j = i - 1
            while j >= 0 and _sel_less(key, order[j], dens, vv, ids):
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = key
        total = 0
        prefix_value = 0.0
        cut = 0
        for idx in range(m):
            p = order[idx]
            total += demand[p]
            if total > capacity:
                if prefix_value >= vv[p]:
                    for j in range(idx):
                        chosen[order[j]] = 1
                else:
                    chosen[p] = 1
                cut = 1
                break
            prefix_value += vv[p]
        if not cut:
            for idx in range(m):
                chosen[order[idx]] = 1
    elif m > 0:
        for i in range(m):
            order[i] = feas[i]
        for i in range(1, m):
            key = order[i]
            j = i - 1
            while j >= 0 and ids[key] < ids[order[j]]:
                order[j + 1] = order[j]
                j -= 1
            order[j + 1] = key
        if (m + 1) * (capacity + 1) > DP_TABLE_GUARD:
            raise GuardError(
                f"knapsack table {m + 1}x{capacity + 1} exceeds the desk-scale guard"
            )
        width = capacity + 1
        best = np.zeros((m + 1) * width, dtype=np.float64)
        for j in range(m - 1, -1, -1):
            p = order[j]
            w = demand[p]
            prof = vv[p]
            row = j * width
            nxt = (j + 1) * width
            for c in range(width):
                skip = best[nxt + c]
                if w <= c:
                    take = prof + best[nxt + c - w]
                    best[row + c] = take if take >= skip else skip
                else:
                    best[row + c] = skip
        c = capacity
        for j in range(m):
            p = order[j]
            w = demand[p]
            if w <= c and vv[p] + best[(j + 1) * width + c - w] >= best[(j + 1) * width + c]:
                chosen[p] = 1
                c -= w

    for i in range(J):
        if completed[i] or run_start[i] != run_start[i]:
            continue
        if not chosen[i]:
            if intervals is not None and t > run_start[i]:
                intervals.append((ids[i], run_start[i], t, False))
            run_start[i] = NAN
    for j in range(m):
        i = feas[j]
        if chosen[i] and run_start[i] != run_start[i]:
            run_start[i] = t


def run_fast(long[::1] ids, double[::1] release, double[::1] deadline,
             long[::1] demand, double[::1] length, double[::1] value,
             long capacity, double[::1] arrivals, int mech_kind,
             int boost_kind, double boost_param, double[::1] table,
             int collect):
    """Arrival-driven auction loop; see _engine_py.run_loop for semantics."""
    cdef Py_ssize_t J = ids.shape[0]
    cdef Py_ssize_t k, i
    cdef double t
    run_start_arr = np.full(J, np.nan)
    completed_arr = np.zeros(J, dtype=np.uint8)
    cdef double[::1] run_start = run_start_arr
    cdef unsigned char[::1] completed = completed_arr
    cdef long[::1] feas = np.empty(J, dtype=np.int64)
    cdef long[::1] order = np.empty(J, dtype=np.int64)
    cdef long[::1] fin_buf = np.empty(J, dtype=np.int64)
    cdef double[::1] dens = np.empty(J, dtype=np.float64)
    cdef double[::1] vv = np.empty(J, dtype=np.float64)
    cdef unsigned char[::1] chosen = np.zeros(J, dtype=np.uint8)
    cdef double[::1] wel = np.zeros(1, dtype=np.float64)
    intervals = [] if collect else None

    for k in range(arrivals.shape[0]):
        t = arrivals[k]
        _settle(t, ids, length, value, run_start, completed, fin_buf, wel,
                intervals)
        _reselect(t, ids, release, deadline, demand, length, value, capacity,
                  mech_kind, boost_kind, boost_param, table, run_start,
                  completed, feas, dens, vv, order, chosen, intervals)
    _settle(INFINITY, ids, length, value, run_start, completed, fin_buf, wel,
            intervals)

    return [completed[i] != 0 for i in range(J)], wel[0], intervals
