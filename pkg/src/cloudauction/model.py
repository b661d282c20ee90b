"""Domain types for the cloud capacity auction.

A job is one customer's request: it arrives at ``release``, must finish by
``deadline``, needs ``demand`` machine instances simultaneously for
``length`` continuous time units, and is worth ``value`` to its owner only
if fully completed. Partial service is worth nothing, and interrupting a
job throws away all progress made so far.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

# Two time points closer than this are treated as the same instant; the
# adversarial generators keep every intended strict gap at least 1e-6 wide.
EPS_CMP = 1e-9


class ValidationError(ValueError):
    """Raised when an instance fails validation at a strict call site."""


class GuardError(RuntimeError):
    """Raised when an input exceeds a desk-scale resource guard."""


@dataclass(frozen=True)
class JobType:
    id: int
    release: float
    deadline: float
    demand: int
    length: float
    value: float

    def window(self) -> float:
        return self.deadline - self.release


@dataclass(frozen=True)
class Instance:
    """The full auction input: capacity, maximum job length, and all jobs.

    ``jobs`` is stored sorted by (release, id). ``kappa`` bounds job
    lengths; the platform rejects anything outside [1, kappa].
    """

    capacity: int
    kappa: int
    jobs: tuple[JobType, ...]

    def __init__(self, capacity: int, kappa: int, jobs) -> None:
        object.__setattr__(self, "capacity", int(capacity))
        object.__setattr__(self, "kappa", int(kappa))
        ordered = tuple(sorted(jobs, key=lambda j: (j.release, j.id)))
        object.__setattr__(self, "jobs", ordered)

    def job_by_id(self, job_id: int) -> JobType:
        for j in self.jobs:
            if j.id == job_id:
                return j
        raise KeyError(job_id)

    def with_job(self, job_id: int, **changes) -> "Instance":
        """Copy of this instance with one job's fields replaced."""
        new_jobs = []
        found = False
        for j in self.jobs:
            if j.id == job_id:
                found = True
                fields = {
                    "id": j.id,
                    "release": j.release,
                    "deadline": j.deadline,
                    "demand": j.demand,
                    "length": j.length,
                    "value": j.value,
                }
                fields.update(changes)
                new_jobs.append(JobType(**fields))
            else:
                new_jobs.append(j)
        if not found:
            raise KeyError(job_id)
        return Instance(self.capacity, self.kappa, new_jobs)


@dataclass
class ProgressState:
    """Mutable per-job run state owned by a single engine run."""

    job_id: int
    running: bool = False
    run_start: float | None = None

    def completeness(self, now: float, length: float) -> float:
        if not self.running or self.run_start is None:
            return 0.0
        return (now - self.run_start) / length


@dataclass
class Outcome:
    completed: set[int]
    welfare: float
    payments: dict[int, float] = field(default_factory=dict)
    utilities: dict[int, float] = field(default_factory=dict)


@dataclass(frozen=True)
class Violation:
    job_id: int | None
    message: str

    def __str__(self) -> str:
        prefix = f"job {self.job_id}: " if self.job_id is not None else ""
        return prefix + self.message


def validate_instance(instance: Instance) -> list[Violation]:
    """Check every structural invariant; an empty list means the instance is ok.

    Violations are data, not exceptions: each one carries the offending
    job id so callers can reject selectively.
    """
    out: list[Violation] = []
    if instance.capacity < 1:
        out.append(Violation(None, "capacity must be a positive integer"))
    if instance.kappa < 1:
        out.append(Violation(None, "kappa must be a positive integer"))
    seen: set[int] = set()
    for j in instance.jobs:
        if j.id < 0:
            out.append(Violation(j.id, "id must be non-negative"))
        if j.id in seen:
            out.append(Violation(j.id, "duplicate id"))
        seen.add(j.id)
        if not j.release >= 0:
            out.append(Violation(j.id, "release must be non-negative"))
        if not j.release < j.deadline:
            out.append(Violation(j.id, "release must precede deadline"))
        if j.deadline - j.release < j.length - EPS_CMP:
            out.append(Violation(j.id, "window shorter than length"))
        if j.length < 1 - EPS_CMP or j.length > instance.kappa + EPS_CMP:
            out.append(Violation(j.id, "length outside [1, kappa]"))
        if j.demand < 1:
            out.append(Violation(j.id, "demand must be at least 1"))
        elif j.demand > instance.capacity:
            out.append(Violation(j.id, "demand exceeds capacity"))
        if not j.value > 0:
            out.append(Violation(j.id, "value must be positive"))
    return out


def dominates(a: JobType, b: JobType) -> bool:
    """True when type ``a`` is at least as easy to serve as ``b`` in every
    coordinate and strictly more valuable.

    Earlier release, later deadline, smaller demand, shorter length, and a
    strictly higher value. Ids are ignored; this compares reported types.
    """
    return (
        a.release <= b.release
        and a.deadline >= b.deadline
        and a.demand <= b.demand
        and a.length <= b.length
        and a.value > b.value
    )


def recompute_welfare(instance: Instance, completed: set[int]) -> float:
    return sum(j.value for j in instance.jobs if j.id in completed)


# -- JSON wire format ---------------------------------------------------------
#
# {"capacity": int, "kappa": int, "jobs": [{"id", "release", "deadline",
#  "demand", "length", "value"}, ...]}
#
# The serializer is canonical: fixed field order, jobs in (release, id)
# order, floats in shortest round-trip form. parse(serialize(x)) is
# byte-stable.


def instance_to_dict(instance: Instance) -> dict:
    return {
        "capacity": instance.capacity,
        "kappa": instance.kappa,
        "jobs": [
            {
                "id": j.id,
                "release": float(j.release),
                "deadline": float(j.deadline),
                "demand": j.demand,
                "length": float(j.length),
                "value": float(j.value),
            }
            for j in instance.jobs
        ],
    }


def instance_to_json(instance: Instance) -> str:
    return json.dumps(instance_to_dict(instance), indent=2) + "\n"


def instance_from_dict(obj: dict) -> Instance:
    try:
        jobs = [
            JobType(
                id=int(j["id"]),
                release=float(j["release"]),
                deadline=float(j["deadline"]),
                demand=int(j["demand"]),
                length=float(j["length"]),
                value=float(j["value"]),
            )
            for j in obj["jobs"]
        ]
        return Instance(int(obj["capacity"]), int(obj["kappa"]), jobs)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed instance object: {exc}") from exc


def instance_from_json(text: str) -> Instance:
    return instance_from_dict(json.loads(text))


def outcome_to_dict(outcome: Outcome) -> dict:
    return {
        "welfare": outcome.welfare,
        "completed": sorted(outcome.completed),
        "payments": {str(k): outcome.payments[k] for k in sorted(outcome.payments)},
        "utilities": {str(k): outcome.utilities[k] for k in sorted(outcome.utilities)},
    }
