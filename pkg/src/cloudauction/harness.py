"""Property and experiment runner.

What lives here: ratio measurement against a known or computed optimum,
deviation sampling for truthfulness, dominance sampling for allocation
monotonicity, structural invariant checks on single runs, and the seeded
instance fuzzer that feeds all of the above.

Everything is replay-based: a check re-runs the mechanism on a perturbed
instance and compares outcomes, so a failure here points at a concrete
counterexample with full repro data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from random import Random
from typing import Iterator

from .engine import CompiledInstance, compile_instance, run, run_compiled
from .model import EPS_CMP, GuardError, Instance, JobType, validate_instance
from .oracle import offline_opt
from .payments import REL_TOL, critical_value, settle

# Extra slack on utility comparisons: payment thresholds carry the
# bisection's one-sided 1e-6 relative error, so a bare EPS_CMP would
# misreport tolerance noise as strategic profit.
UTILITY_SLACK = 2e-6


@dataclass(frozen=True)
class CheckViolation:
    job_id: int
    kind: str
    detail: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CheckReport:
    kind: str
    samples: int
    violations: tuple[CheckViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def competitive_ratio(
    instance: Instance,
    mechanism,
    opt="compute",
    *,
    reallocate_on_completion: bool = False,
) -> tuple[float, float, float]:
    """(OPT / W, mechanism welfare, OPT welfare).

    ``opt`` is either a known optimum (adversarial predictions) or
    "compute" to invoke the offline oracle, guards and all. Ratio is 1
    when both welfares are 0 and infinite when only the mechanism's is.
    """
    _, outcome = run(
        instance,
        mechanism,
        reallocate_on_completion=reallocate_on_completion,
        record_trace=False,
    )
    w = outcome.welfare
    opt_value = offline_opt(instance)[0] if opt == "compute" else float(opt)
    if w == 0.0:
        ratio = 1.0 if opt_value == 0.0 else math.inf
    else:
        ratio = opt_value / w
    return ratio, w, opt_value


def measure(adv, *, reallocate_on_completion: bool = False):
    """Ratio of an adversarial instance against its intended mechanism,
    using the construction's predicted optimum as the numerator."""
    return competitive_ratio(
        adv.instance,
        adv.intended_mechanism(),
        opt=adv.predicted_opt,
        reallocate_on_completion=reallocate_on_completion,
    )


def _completes_at(
    compiled: CompiledInstance,
    mechanism,
    pos: int,
    *,
    demand: int | None = None,
    length: float | None = None,
    value: float | None = None,
) -> bool:
    """One replay with the job at ``pos`` patched; arrays restored after."""
    saved = (
        compiled.demand[pos],
        compiled.length[pos],
        compiled.value[pos],
    )
    if demand is not None:
        compiled.demand[pos] = demand
    if length is not None:
        compiled.length[pos] = length
    if value is not None:
        compiled.value[pos] = value
    try:
        flags, _, _ = run_compiled(compiled, mechanism, collect=False)
    finally:
        compiled.demand[pos], compiled.length[pos], compiled.value[pos] = saved
    return bool(flags[pos])


def _patched_threshold(
    instance: Instance,
    compiled: CompiledInstance,
    mechanism,
    job_id: int,
    pos: int,
    demand: int,
    length: float,
    winning_value: float,
) -> float:
    """Critical value of the job when it reports (demand, length), probed
    from a value known to win; arrays restored after."""
    saved = (compiled.demand[pos], compiled.length[pos], compiled.value[pos])
    compiled.demand[pos] = demand
    compiled.length[pos] = length
    compiled.value[pos] = winning_value
    try:
        return critical_value(instance, mechanism, job_id, compiled=compiled)
    finally:
        compiled.demand[pos], compiled.length[pos], compiled.value[pos] = saved


def check_dsic(
    instance: Instance,
    mechanism,
    samples: int,
    seed: int,
    *,
    payment_rule: str = "critical",
) -> CheckReport:
    """Sample misreports and verify none beats telling the truth.

    Deviations follow the model's standing assumptions: release and
    deadline are fixed, reported length never shrinks, demand moves
    anywhere in [1, C], value is free. A deviator who under-reports
    demand may still "complete" in the mechanism's books, but receives
    too few instances for the real job, so only the payment side of its
    utility survives.

    payment_rule "critical" checks the real pricing; "bid" is the
    pay-your-bid negative control, which this check must catch.
    """
    compiled = compile_instance(instance)
    jobs = instance.jobs
    if not jobs:
        return CheckReport(kind="dsic", samples=samples, violations=())
    rng = Random(seed)
    kappa = instance.kappa
    capacity = instance.capacity

    flags, _, _ = run_compiled(compiled, mechanism, collect=False)
    truthful_win = {j.id: bool(flags[compiled.pos[j.id]]) for j in jobs}
    thresholds: dict[tuple[int, int, float], float] = {}

    def threshold(job: JobType, demand: int, length: float, winning: float) -> float:
        key = (job.id, demand, length)
        if key not in thresholds:
            thresholds[key] = _patched_threshold(
                instance, compiled, mechanism, job.id, compiled.pos[job.id],
                demand, length, winning,
            )
        return thresholds[key]

    violations = []
    for index in range(samples):
        job = jobs[rng.randrange(len(jobs))]
        pos = compiled.pos[job.id]
        n_hat, l_hat = job.demand, job.length
        move = rng.random()
        if move >= 0.55:
            if move < 0.8:
                n_hat = min(capacity, max(1, job.demand + rng.choice((-2, -1, 1, 2))))
            else:
                l_hat = min(kappa, job.length * (1.0 + rng.random()))
                l_hat = max(l_hat, job.length)
        if rng.random() < 0.7:
            v_hat = rng.uniform(0.0, 2.0 * job.value)
        else:
            v_hat = job.value * (1.0 + rng.uniform(-0.2, 0.2))
        v_hat = max(v_hat, 1e-6 * job.value)

        slack = EPS_CMP + UTILITY_SLACK * job.value
        if payment_rule == "bid":
            truth_utility = 0.0  # winners pay their own bid
        elif truthful_win[job.id]:
            truth_utility = job.value - threshold(
                job, job.demand, job.length, job.value
            )
        else:
            truth_utility = 0.0

        wins = _completes_at(
            compiled, mechanism, pos, demand=n_hat, length=l_hat, value=v_hat
        )
        if not wins:
            deviation_utility = 0.0
        else:
            gross = job.value if n_hat >= job.demand else 0.0
            if payment_rule == "bid":
                deviation_utility = gross - v_hat
            else:
                deviation_utility = gross - threshold(job, n_hat, l_hat, v_hat)

        if deviation_utility > truth_utility + slack:
            violations.append(
                CheckViolation(
                    job_id=job.id,
                    kind="dsic",
                    detail={
                        "index": index,
                        "demand": n_hat,
                        "length": l_hat,
                        "value": v_hat,
                        "truth_utility": truth_utility,
                        "deviation_utility": deviation_utility,
                    },
                )
            )
    violations.sort(key=lambda v: (v.job_id, v.detail["index"]))
    return CheckReport(kind="dsic", samples=samples, violations=tuple(violations))


def check_monotone(
    instance: Instance, mechanism, samples: int, seed: int
) -> CheckReport:
    """Sample dominance pairs around the truthful type.

    Moving to a dominated type (more demand, longer, cheaper) must never
    turn a loser into a winner; moving to a dominating type (less demand,
    shorter, dearer) must never turn a winner into a loser.
    """
    compiled = compile_instance(instance)
    jobs = instance.jobs
    if not jobs:
        return CheckReport(kind="monotone", samples=samples, violations=())
    rng = Random(seed)
    capacity = instance.capacity
    kappa = instance.kappa

    flags, _, _ = run_compiled(compiled, mechanism, collect=False)
    truthful_win = {j.id: bool(flags[compiled.pos[j.id]]) for j in jobs}

    violations = []
    for index in range(samples):
        job = jobs[rng.randrange(len(jobs))]
        pos = compiled.pos[job.id]
        downward = rng.random() < 0.5
        if downward:
            n_hat = rng.randint(job.demand, capacity)
            l_hat = min(kappa, job.length * (1.0 + rng.random()))
            l_hat = max(l_hat, job.length)
            v_hat = job.value * rng.uniform(0.05, 1.0)
        else:
            n_hat = rng.randint(1, job.demand)
            l_hat = max(1.0, job.length * rng.uniform(0.5, 1.0))
            l_hat = min(l_hat, job.length)
            v_hat = job.value * rng.uniform(1.0, 3.0)
        wins = _completes_at(
            compiled, mechanism, pos, demand=n_hat, length=l_hat, value=v_hat
        )
        bad = (downward and wins and not truthful_win[job.id]) or (
            not downward and not wins and truthful_win[job.id]
        )
        if bad:
            violations.append(
                CheckViolation(
                    job_id=job.id,
                    kind="monotone",
                    detail={
                        "index": index,
                        "direction": "down" if downward else "up",
                        "demand": n_hat,
                        "length": l_hat,
                        "value": v_hat,
                        "truthful_win": truthful_win[job.id],
                        "deviation_win": wins,
                    },
                )
            )
    violations.sort(key=lambda v: (v.job_id, v.detail["index"]))
    return CheckReport(kind="monotone", samples=samples, violations=tuple(violations))


def check_invariants(
    instance: Instance, mechanism, *, payment_rule: str = "critical"
) -> CheckReport:
    """Structural sanity of one full run: capacity, all-or-nothing,
    individual rationality, OPT dominance, and the payment threshold
    property. Oracle-guarded checks are skipped when the instance is too
    big for the oracle rather than failing."""
    trace, outcome = run(instance, mechanism, record_trace=True)
    compiled = compile_instance(instance)
    violations = []

    for seg in trace.segments:
        if seg.used() > instance.capacity:
            violations.append(
                CheckViolation(
                    job_id=-1,
                    kind="capacity",
                    detail={"start": seg.start, "used": seg.used()},
                )
            )
            break

    expected_welfare = sum(
        j.value for j in instance.jobs if j.id in outcome.completed
    )
    if abs(outcome.welfare - expected_welfare) > 1e-9 * max(1.0, expected_welfare):
        violations.append(
            CheckViolation(
                job_id=-1,
                kind="welfare-mismatch",
                detail={"welfare": outcome.welfare, "expected": expected_welfare},
            )
        )

    for job in instance.jobs:
        runs = trace.job_intervals(job.id)
        full = [
            (s, e)
            for s, e in runs
            if e - s >= job.length - EPS_CMP
            and s >= job.release - EPS_CMP
            and e <= job.deadline + EPS_CMP
        ]
        if job.id in outcome.completed and not full:
            violations.append(
                CheckViolation(job_id=job.id, kind="completed-without-full-run",
                               detail={"runs": runs})
            )
        if job.id not in outcome.completed and full:
            violations.append(
                CheckViolation(job_id=job.id, kind="full-run-without-credit",
                               detail={"runs": runs})
            )

    priced = settle(instance, mechanism, payment_rule=payment_rule)
    for job in instance.jobs:
        pay = priced.payments[job.id]
        util = priced.utilities[job.id]
        if job.id in priced.completed:
            if pay < -EPS_CMP or pay > job.value * (1.0 + 1e-9) + EPS_CMP:
                violations.append(
                    CheckViolation(job_id=job.id, kind="ir-payment",
                                   detail={"payment": pay, "value": job.value})
                )
            if util < -(EPS_CMP + UTILITY_SLACK * job.value):
                violations.append(
                    CheckViolation(job_id=job.id, kind="ir-utility",
                                   detail={"utility": util})
                )
        elif pay != 0.0:
            violations.append(
                CheckViolation(job_id=job.id, kind="loser-charged",
                               detail={"payment": pay})
            )

    try:
        opt_value, _ = offline_opt(instance)
    except GuardError:
        opt_value = None
    if opt_value is not None and outcome.welfare > opt_value + 1e-9 * max(
        1.0, opt_value
    ):
        violations.append(
            CheckViolation(job_id=-1, kind="beats-opt",
                           detail={"welfare": outcome.welfare, "opt": opt_value})
        )

    if payment_rule == "critical":
        for job_id in sorted(priced.completed):
            job = instance.job_by_id(job_id)
            pos = compiled.pos[job_id]
            threshold = priced.payments[job_id]
            tol = REL_TOL * job.value
            if not _completes_at(
                compiled, mechanism, pos, value=threshold + 10.0 * tol
            ):
                violations.append(
                    CheckViolation(job_id=job_id, kind="threshold-above-loses",
                                   detail={"threshold": threshold})
                )
            below = threshold - 10.0 * tol
            if below > 0.0 and _completes_at(
                compiled, mechanism, pos, value=below
            ):
                violations.append(
                    CheckViolation(job_id=job_id, kind="threshold-below-wins",
                                   detail={"threshold": threshold})
                )

    return CheckReport(kind="invariants", samples=1, violations=tuple(violations))


def fuzz_instances(
    count: int,
    seed: int,
    *,
    jobs_range: tuple[int, int] = (1, 10),
    capacity_range: tuple[int, int] = (1, 6),
    kappa: float = 2.0,
    grid: float = 0.25,
    horizon: float = 3.0,
    slack_steps: int = 2,
    value_range: tuple[float, float] = (0.5, 16.0),
) -> Iterator[Instance]:
    """Deterministic stream of small valid instances on a fixed time grid.

    All times are multiples of ``grid`` so the offline oracle and the
    exhaustive cross-check stay exact; values are free floats. The same
    (count, seed, params) always yields the identical stream.
    """
    rng = Random(seed)
    length_steps = int(round(kappa / grid)) - int(round(1.0 / grid))
    for _ in range(count):
        capacity = rng.randint(*capacity_range)
        job_count = rng.randint(*jobs_range)
        jobs = []
        for job_id in range(job_count):
            length = 1.0 + grid * rng.randint(0, length_steps)
            release = grid * rng.randint(0, int(round(horizon / grid)))
            slack = grid * rng.randint(0, slack_steps)
            jobs.append(
                JobType(
                    id=job_id,
                    release=release,
                    deadline=release + length + slack,
                    demand=rng.randint(1, capacity),
                    length=length,
                    value=rng.uniform(*value_range),
                )
            )
        instance = Instance(capacity=capacity, kappa=kappa, jobs=tuple(jobs))
        assert not validate_instance(instance)
        yield instance
