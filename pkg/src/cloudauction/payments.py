"""Critical-value pricing.

A completed job pays the smallest value it could have reported and still
completed, found by replaying the mechanism against counterfactual
reports. Losers pay nothing. Under a monotone allocation this pricing is
exactly what makes truthful reporting a dominant strategy.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .engine import CompiledInstance, compile_instance, run, run_compiled
from .model import Instance, Outcome

REL_TOL = 1e-6
SWEEP_STEP = 1e-4


def _completes(
    compiled: CompiledInstance, mechanism, pos: int, trial_value: float, reallocate: bool
) -> bool:
    """Does the job at row ``pos`` complete when it reports ``trial_value``?"""
    original = compiled.value[pos]
    compiled.value[pos] = trial_value
    try:
        flags, _, _ = run_compiled(
            compiled,
            mechanism,
            reallocate_on_completion=reallocate,
            collect=False,
        )
    finally:
        compiled.value[pos] = original
    return bool(flags[pos])


def _value_monotone(mechanism) -> bool:
    """Can we certify that completion is monotone in the reported value?

    The built-in rules with exponential or linear boosts are monotone by
    construction. A custom boost is accepted if it (still) probes as
    non-decreasing with f(0) = 1; anything else falls back to the sweep.
    """
    f = getattr(mechanism, "priority", None)
    if f is None:
        return False
    kind = getattr(f, "kind", None)
    if kind in ("exp", "lin"):
        return True
    if kind != "custom":
        return False
    try:
        probe = [f.eval(k / 100.0) for k in range(101)]
    except Exception:
        return False
    if abs(probe[0] - 1.0) > 1e-9:
        return False
    return all(hi >= lo - 1e-12 for lo, hi in zip(probe, probe[1:]))


def _bisect_threshold(
    compiled: CompiledInstance,
    mechanism,
    pos: int,
    rel_tol: float,
    reallocate: bool,
) -> float:
    """Bisection on [0, v]: minimum winning report, to rel_tol * v.

    Returns the high endpoint of the final bracket, so the reported
    threshold errs on the winning side (never above the true value, never
    charging more than a winning report). Collapses to 0 when the job wins
    at every probe down to the tolerance floor.
    """
    v = float(compiled.value[pos])
    lo, hi = 0.0, v
    tol = rel_tol * v
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _completes(compiled, mechanism, pos, mid, reallocate):
            hi = mid
        else:
            lo = mid
    return 0.0 if lo == 0.0 else hi


def _sweep_threshold(
    compiled: CompiledInstance, mechanism, pos: int, reallocate: bool
) -> float:
    """Descending grid sweep for allocations we cannot certify monotone.

    Steps down from the reported value in v * 1e-4 increments and returns
    the lowest grid point of the contiguous winning run at the top.
    """
    v = float(compiled.value[pos])
    step = v * SWEEP_STEP
    lowest = v
    k = 1
    while True:
        trial = v - k * step
        if trial <= 0.0:
            return 0.0
        if not _completes(compiled, mechanism, pos, trial, reallocate):
            return lowest
        lowest = trial
        k += 1


def critical_value(
    instance: Instance,
    mechanism,
    job_id: int,
    *,
    rel_tol: float = REL_TOL,
    reallocate_on_completion: bool = False,
    compiled: CompiledInstance | None = None,
) -> float:
    """Minimum reported value at which ``job_id`` still completes.

    The job must complete under its truthful report; pricing a loser is a
    caller bug and raises ValueError. Only this job's value column is
    perturbed during replays, so the instance object is never modified.
    """
    if compiled is None:
        compiled = compile_instance(instance)
    if job_id not in compiled.pos:
        raise ValueError(f"unknown job id {job_id}")
    pos = compiled.pos[job_id]
    if not _completes(
        compiled, mechanism, pos, float(compiled.value[pos]), reallocate_on_completion
    ):
        raise ValueError(
            f"job {job_id} does not complete truthfully; losers pay 0 and have "
            "no critical value"
        )
    if _value_monotone(mechanism):
        return _bisect_threshold(
            compiled, mechanism, pos, rel_tol, reallocate_on_completion
        )
    return _sweep_threshold(compiled, mechanism, pos, reallocate_on_completion)


def settle(
    instance: Instance,
    mechanism,
    *,
    payment_rule: str = "critical",
    rel_tol: float = REL_TOL,
    reallocate_on_completion: bool = False,
    jobs: int = 1,
) -> Outcome:
    """Run truthfully and attach payments.

    payment_rule "critical" is the real pricing rule; "bid" charges
    winners their reported value and exists as a deliberately
    non-truthful baseline for the property harness.
    """
    if payment_rule not in ("critical", "bid"):
        raise ValueError(f"unknown payment rule {payment_rule!r}")
    _, outcome = run(
        instance,
        mechanism,
        reallocate_on_completion=reallocate_on_completion,
        record_trace=False,
    )
    winners = sorted(outcome.completed)
    values = {j.id: j.value for j in instance.jobs}
    if payment_rule == "bid":
        prices = {i: values[i] for i in winners}
    elif jobs > 1 and len(winners) > 1:
        # Workers get private compiled copies: replays mutate the value
        # column in place, so sharing one across threads would race.
        def one(i: int) -> float:
            return critical_value(
                instance,
                mechanism,
                i,
                rel_tol=rel_tol,
                reallocate_on_completion=reallocate_on_completion,
            )

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            prices = dict(zip(winners, pool.map(one, winners)))
    else:
        compiled = compile_instance(instance)
        prices = {
            i: critical_value(
                instance,
                mechanism,
                i,
                rel_tol=rel_tol,
                reallocate_on_completion=reallocate_on_completion,
                compiled=compiled,
            )
            for i in winners
        }
    payments = {j.id: prices.get(j.id, 0.0) for j in instance.jobs}
    utilities = {
        j.id: (values[j.id] - payments[j.id]) if j.id in outcome.completed else 0.0
        for j in instance.jobs
    }
    return Outcome(
        completed=outcome.completed,
        welfare=outcome.welfare,
        payments=dict(sorted(payments.items())),
        utilities=dict(sorted(utilities.items())),
    )
