"""Preemption-aware allocation engine.

Runs a selection rule over an instance and produces the allocation trace
and the resulting outcome (welfare and completions; payments are settled
separately).

Decision points and the completion policy
-----------------------------------------
By default the engine re-runs selection only at job arrivals. Completions
between arrivals free capacity and book welfare, but the freed capacity is
not handed to waiting jobs until the next arrival. Pass
``reallocate_on_completion=True`` to also re-run selection the moment a job
finishes. The competitive-ratio guarantees target the default mode; the
flag exists because the alternative reading is natural and cheap to
support, and comparing the two is occasionally informative.

Kernels
-------
Two interchangeable kernels drive the loop: a compiled one (Cython) used
automatically for the built-in greedy/dp rules with exponential, linear,
or tabulated boost functions, and an interpreted fallback that also
handles arbitrary selection callables. Set ``CLOUDAUCTION_PURE=1`` to
force the interpreted kernel. Both produce bit-identical results.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Protocol

import numpy as np

from . import _engine_py
from .mechanisms import DPMechanism, GreedyMechanism
from .model import (
    EPS_CMP,
    Instance,
    Outcome,
    ProgressState,
    ValidationError,
    validate_instance,
)

try:  # pragma: no cover - exercised indirectly via kernel_backend()
    if os.environ.get("CLOUDAUCTION_PURE") == "1":
        _engine_cy = None
    else:
        from . import _engine_cy  # type: ignore[attr-defined]
except ImportError:  # pragma: no cover
    _engine_cy = None


def kernel_backend() -> str:
    """Name of the kernel the engine will prefer: 'cython' or 'pure'."""
    return "pure" if _engine_cy is None else "cython"


class Mechanism(Protocol):
    """Anything with a name and a select() is a mechanism."""

    name: str

    def select(
        self,
        jobs: Iterable[tuple[int, int, float]],
        capacity: int,
        deltas: Mapping[int, float],
    ) -> set[int]: ...


@dataclass(frozen=True)
class Segment:
    """One stretch of time with a fixed allocation.

    ``alloc`` maps job id to the number of instances it occupies. Interior
    gaps where nothing runs appear as segments with an empty alloc so the
    trace covers a contiguous span.
    """

    start: float
    end: float
    alloc: dict[int, int]

    def used(self) -> int:
        return sum(self.alloc.values())


@dataclass(frozen=True)
class AllocationTrace:
    segments: tuple[Segment, ...]

    def span(self) -> tuple[float, float]:
        if not self.segments:
            return (0.0, 0.0)
        return (self.segments[0].start, self.segments[-1].end)

    def job_intervals(self, job_id: int) -> list[tuple[float, float]]:
        """Maximal contiguous stretches during which the job holds instances."""
        out: list[tuple[float, float]] = []
        for seg in self.segments:
            if job_id not in seg.alloc:
                continue
            if out and abs(out[-1][1] - seg.start) <= EPS_CMP:
                out[-1] = (out[-1][0], seg.end)
            else:
                out.append((seg.start, seg.end))
        return out

    def to_csv(self) -> str:
        """Render as segment rows: segment_start,segment_end,job_id,instances.

        Idle segments emit a single row with an empty job_id and 0 instances.
        """
        lines = ["segment_start,segment_end,job_id,instances"]
        for seg in self.segments:
            if not seg.alloc:
                lines.append(f"{seg.start!r},{seg.end!r},,0")
                continue
            for job_id in sorted(seg.alloc):
                lines.append(f"{seg.start!r},{seg.end!r},{job_id},{seg.alloc[job_id]}")
        return "\n".join(lines) + "\n"


@dataclass
class CompiledInstance:
    """Array form of an instance, ready for repeated kernel runs.

    Jobs are ordered by (release, id); ``pos`` maps id back to the row.
    The value/demand/length columns may be temporarily overwritten (and
    restored) by callers probing counterfactual reports; release times are
    fixed, so the arrival schedule stays valid.
    """

    instance: Instance
    ids: np.ndarray
    release: np.ndarray
    deadline: np.ndarray
    demand: np.ndarray
    length: np.ndarray
    value: np.ndarray
    capacity: int
    arrivals: np.ndarray
    pos: dict[int, int]


def compile_instance(instance: Instance) -> CompiledInstance:
    jobs = instance.jobs
    ids = np.array([j.id for j in jobs], dtype=np.int64)
    release = np.array([j.release for j in jobs], dtype=np.float64)
    arrivals: list[float] = []
    for t in release:
        if not arrivals or t > arrivals[-1] + EPS_CMP:
            arrivals.append(float(t))
    return CompiledInstance(
        instance=instance,
        ids=ids,
        release=release,
        deadline=np.array([j.deadline for j in jobs], dtype=np.float64),
        demand=np.array([j.demand for j in jobs], dtype=np.int64),
        length=np.array([j.length for j in jobs], dtype=np.float64),
        value=np.array([j.value for j in jobs], dtype=np.float64),
        capacity=instance.capacity,
        arrivals=np.array(arrivals, dtype=np.float64),
        pos={int(j): p for p, j in enumerate(ids)},
    )


def _fast_path(mechanism) -> tuple[int, int, float, np.ndarray] | None:
    """(mech kind, boost kind, param, table) when the compiled kernel applies."""
    empty = np.empty(0, dtype=np.float64)
    if isinstance(mechanism, GreedyMechanism):
        mech_kind = 0
        f = mechanism.priority
    elif isinstance(mechanism, DPMechanism):
        return (1, 0, mechanism.chi, empty)
    else:
        return None
    if f.kind == "exp":
        return (mech_kind, 0, f.chi, empty)
    if f.kind == "lin":
        return (mech_kind, 1, f.a, empty)
    if f.table is not None:
        return (mech_kind, 2, 0.0, np.asarray(f.table, dtype=np.float64))
    return None


def run_compiled(
    compiled: CompiledInstance,
    mechanism: Mechanism,
    *,
    reallocate_on_completion: bool = False,
    collect: bool = False,
):
    """Run the kernel. Returns (completed flags by row, welfare, intervals)."""
    params = None
    if _engine_cy is not None and not reallocate_on_completion:
        params = _fast_path(mechanism)
    if params is not None:
        mech_kind, boost_kind, boost_param, table = params
        return _engine_cy.run_fast(
            compiled.ids,
            compiled.release,
            compiled.deadline,
            compiled.demand,
            compiled.length,
            compiled.value,
            compiled.capacity,
            compiled.arrivals,
            mech_kind,
            boost_kind,
            boost_param,
            table,
            1 if collect else 0,
        )
    return _engine_py.run_loop(
        [int(x) for x in compiled.ids],
        [float(x) for x in compiled.release],
        [float(x) for x in compiled.deadline],
        [int(x) for x in compiled.demand],
        [float(x) for x in compiled.length],
        [float(x) for x in compiled.value],
        compiled.capacity,
        [float(x) for x in compiled.arrivals],
        mechanism.select,
        reallocate_on_completion,
        collect,
    )


def _build_trace(intervals, compiled: CompiledInstance) -> AllocationTrace:
    if not intervals:
        return AllocationTrace(segments=())
    bounds = sorted({t for _, s, e, _ in intervals for t in (s, e)})
    segments = []
    for a, b in zip(bounds, bounds[1:]):
        if b <= a:
            continue
        alloc = {}
        for job_id, s, e, _ in intervals:
            if s <= a and e >= b:
                alloc[job_id] = int(compiled.demand[compiled.pos[job_id]])
        segments.append(Segment(start=a, end=b, alloc=alloc))
    return AllocationTrace(segments=tuple(segments))


def run(
    instance: Instance,
    mechanism: Mechanism,
    *,
    reallocate_on_completion: bool = False,
    record_trace: bool = True,
    validate: bool = True,
) -> tuple[AllocationTrace | None, Outcome]:
    """Execute a mechanism's allocation rule on an instance.

    Payments in the returned outcome are zero; use payments.settle() for
    the priced outcome. Raises ValidationError when the instance is
    malformed and ``validate`` is on.
    """
    if validate:
        violations = validate_instance(instance)
        if violations:
            first = violations[0]
            raise ValidationError(
                f"invalid instance ({len(violations)} problem(s)); "
                f"first: job {first.job_id}: {first.message}"
            )
    compiled = compile_instance(instance)
    completed_flags, welfare, intervals = run_compiled(
        compiled,
        mechanism,
        reallocate_on_completion=reallocate_on_completion,
        collect=record_trace,
    )
    completed = {int(compiled.ids[i]) for i, c in enumerate(completed_flags) if c}
    all_ids = sorted(int(i) for i in compiled.ids)
    outcome = Outcome(
        completed=frozenset(completed),
        welfare=welfare,
        payments={i: 0.0 for i in all_ids},
        utilities={
            i: float(compiled.value[compiled.pos[i]]) if i in completed else 0.0
            for i in all_ids
        },
    )
    trace = _build_trace(intervals, compiled) if record_trace else None
    return trace, outcome


def feasible_set(
    instance: Instance,
    progress: Mapping[int, ProgressState],
    t: float,
) -> set[int]:
    """Ids of jobs that could still finish by their deadline starting at t.

    ``progress`` carries the running jobs' states; anything absent is
    treated as released-but-idle. Completed jobs should not be passed in.
    """
    out = set()
    for job in instance.jobs:
        state = progress.get(job.id)
        if state is not None and state.running:
            delta = state.completeness(t, job.length)
        else:
            delta = 0.0
        if delta >= 1.0:
            continue
        if job.release > t + EPS_CMP:
            continue
        if (job.deadline - t) - (1.0 - delta) * job.length < -EPS_CMP:
            continue
        out.add(job.id)
    return out


def run_callable(
    instance: Instance,
    select: Callable[[list, int, dict], set[int]],
    name: str = "custom",
    **kwargs,
) -> tuple[AllocationTrace | None, Outcome]:
    """Convenience wrapper: run a bare selection function as a mechanism."""

    class _Wrapper:
        def __init__(self):
            self.name = name

        def select(self, jobs, capacity, deltas):
            return select(list(jobs), capacity, dict(deltas))

    return run(instance, _Wrapper(), **kwargs)


def total_demand_ok(trace: AllocationTrace, capacity: int) -> bool:
    """True when no segment over-subscribes the machine."""
    return all(seg.used() <= capacity for seg in trace.segments)
