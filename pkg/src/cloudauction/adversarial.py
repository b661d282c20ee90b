"""Adversarial instance families.

Each generator emits the worst-case construction for one lower-bound
claim, together with its predictions: the offline optimum the
construction is engineered to reach, the welfare and exact winner set the
targeted mechanism is driven to, and the closed-form ratio limit. The
harness replays the mechanism on the emitted instance and checks the
predictions, which exercises the engine, the selection rules, and the
generators against each other.

All constructions share one trick: a ladder of jobs whose boosted
densities are separated by tiny margins (eps, delta, mu below), so the
mechanism keeps preempting nearly-finished work while the clairvoyant
scheduler runs everything. The margins default to negative powers of two,
which keeps every timestamp exactly representable and grid-rational for
the offline oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .mechanisms import DPMechanism, GreedyMechanism
from .model import Instance, JobType, ValidationError
from .priority import PriorityFunction, exponential, linear


def default_eps(p: int) -> float:
    """2^-(ceil(log2(4p)) + 2): guarantees p * eps <= 1/16."""
    return 2.0 ** -((4 * p - 1).bit_length() + 2)


@dataclass(frozen=True)
class AdversarialInstance:
    """A generated instance plus everything the construction promises."""

    instance: Instance
    predicted_opt: float
    predicted_mech_welfare: float
    predicted_mech_winners: frozenset[int]
    asymptotic_ratio: float
    family: str
    parameters: dict = field(default_factory=dict)
    priority: PriorityFunction | None = None

    def intended_mechanism(self):
        """The mechanism this construction is built to defeat."""
        if self.family == "dp":
            return DPMechanism(chi=self.parameters["chi"])
        if self.priority is not None:
            return GreedyMechanism(self.priority)
        return GreedyMechanism(exponential(self.parameters["chi"]))


def _check_ints(**named) -> None:
    for name, (val, lo) in named.items():
        if not isinstance(val, int) or val < lo:
            raise ValidationError(f"{name} must be an integer >= {lo}, got {val!r}")


def _check_separation(p: int, eps: float, delta: float, stack: int = 1) -> None:
    """The constructions only work when the margins nest: stack copies of
    delta must stay well inside eps, and p copies of eps well inside 1."""
    if not 0.0 < eps or not 0.0 < delta:
        raise ValidationError("eps and delta must be positive")
    if p * eps > 0.125:
        raise ValidationError(f"p*eps = {p * eps} too large; need p*eps <= 1/8")
    if stack * delta > eps / 8.0:
        raise ValidationError(
            f"{stack}*delta = {stack * delta} too large; need it <= eps/8"
        )


def gen_exp_lower(
    h: int = 2,
    n_max: int = 3,
    kappa: int = 1,
    chi: float = 2.0,
    p: int = 10,
    eps: float | None = None,
    delta: float | None = None,
) -> AdversarialInstance:
    """Worst case for greedy with the exponential boost, C = h * n_max.

    p+1 groups of long jobs arrive eps early relative to the previous
    group's finish, each group just valuable enough to preempt the last;
    p*kappa groups of short jobs arrive in between, each just too cheap to
    win. The mechanism completes only group p-1 (which includes one
    demand-1 straggler); the clairvoyant runs all shorts, then the last
    two long groups.
    """
    _check_ints(h=(h, 2), n_max=(n_max, 1), kappa=(kappa, 1), p=(p, 1))
    if not chi > 1.0:
        raise ValidationError("chi must exceed 1")
    if eps is None:
        eps = default_eps(p)
    if delta is None:
        delta = eps / 16.0
    _check_separation(p, eps, delta)

    capacity = h * n_max
    jobs: list[JobType] = []
    winners = []
    for i in range(p + 1):
        release = i * (kappa - eps)
        if i == p - 1:
            deadline = (p + 2) * kappa
            for t in range(h - 1):
                jobs.append(
                    JobType(
                        id=len(jobs), release=release, deadline=deadline,
                        demand=n_max, length=float(kappa),
                        value=n_max * chi ** (p - 1),
                    )
                )
                winners.append(jobs[-1].id)
            jobs.append(
                JobType(
                    id=len(jobs), release=release, deadline=deadline,
                    demand=1, length=float(kappa), value=chi ** (p - 1),
                )
            )
            winners.append(jobs[-1].id)
        elif i == p:
            for _ in range(h):
                jobs.append(
                    JobType(
                        id=len(jobs), release=release, deadline=(p + 1) * kappa,
                        demand=n_max, length=float(kappa),
                        value=n_max * chi ** (p - eps) - delta,
                    )
                )
        else:
            for _ in range(h):
                jobs.append(
                    JobType(
                        id=len(jobs), release=release, deadline=(i + 1) * kappa,
                        demand=n_max, length=float(kappa),
                        value=n_max * chi ** i,
                    )
                )
    for j in range(p * kappa):
        for _ in range(h):
            jobs.append(
                JobType(
                    id=len(jobs), release=float(j), deadline=float(j + 1),
                    demand=n_max, length=1.0,
                    value=n_max * (chi ** (j / kappa) - delta / kappa),
                )
            )

    predicted_w = sum(jobs[i].value for i in winners)
    predicted_opt = (
        h * n_max * (1.0 - chi ** (p + 1.0 / kappa)) / (1.0 - chi ** (1.0 / kappa))
        + ((h - 1) * n_max + 1) * chi ** (p - 1)
    )
    return AdversarialInstance(
        instance=Instance(capacity=capacity, kappa=float(kappa), jobs=tuple(jobs)),
        predicted_opt=predicted_opt,
        predicted_mech_welfare=predicted_w,
        predicted_mech_winners=frozenset(winners),
        asymptotic_ratio=(h / (h - 1.0)) * chi / (1.0 - chi ** (-1.0 / kappa)) + 1.0,
        family="exp",
        parameters={
            "h": h, "n_max": n_max, "kappa": kappa, "chi": chi, "p": p,
            "eps": eps, "delta": delta,
        },
    )


def exp_lower_finite_ratio(
    h: int, n_max: int, kappa: int, chi: float, p: int
) -> float:
    """The exp-family ratio at finite p (the limit is approached from below)."""
    return (
        (h * n_max / ((h - 1.0) * n_max + 1.0))
        * (chi - chi ** (-1.0 / kappa - p + 1.0))
        / (1.0 - chi ** (-1.0 / kappa))
        + 1.0
    )


def _single_machine_ladder(
    f: PriorityFunction,
    kappa: int,
    p: int,
    eps: float,
    delta: float,
    family: str,
    asymptotic_ratio: float,
    parameters: dict,
) -> AdversarialInstance:
    """Shared C=1 construction: the boost-power ladder of long jobs with
    short zero-laxity fillers. Job values are built from powers of f(1),
    so the same skeleton serves the exponential, linear, and custom-boost
    families."""
    f1 = f.eval(1.0)
    if not f1 > 1.0:
        raise ValidationError("the construction needs f(1) > 1")
    powers = [1.0]
    for _ in range(p):
        powers.append(powers[-1] * f1)

    jobs: list[JobType] = []
    for i in range(p + 1):
        release = i * (kappa - eps)
        if i == p - 1:
            jobs.append(
                JobType(
                    id=i, release=release, deadline=(p + 2) * kappa,
                    demand=1, length=float(kappa), value=powers[p - 1] + delta,
                )
            )
        elif i == p:
            jobs.append(
                JobType(
                    id=i, release=release, deadline=(p + 1) * kappa,
                    demand=1, length=float(kappa),
                    value=powers[p - 1] * f.eval(1.0 - eps) - delta,
                )
            )
        else:
            jobs.append(
                JobType(
                    id=i, release=release, deadline=(i + 1) * kappa,
                    demand=1, length=float(kappa), value=powers[i],
                )
            )
    for j in range(p * kappa):
        jobs.append(
            JobType(
                id=p + 1 + j, release=float(j), deadline=float(j + 1),
                demand=1, length=1.0,
                value=powers[j // kappa] * f.eval((j % kappa) / kappa)
                - delta / kappa,
            )
        )

    # The clairvoyant runs every short job back to back, then the last two
    # long jobs in their slack windows.
    opt_ids = [p, p - 1] + list(range(p + 1, p + 1 + p * kappa))
    predicted_opt = sum(jobs[i].value for i in sorted(opt_ids))
    return AdversarialInstance(
        instance=Instance(capacity=1, kappa=float(kappa), jobs=tuple(jobs)),
        predicted_opt=predicted_opt,
        predicted_mech_welfare=jobs[p - 1].value,
        predicted_mech_winners=frozenset({p - 1}),
        asymptotic_ratio=asymptotic_ratio,
        family=family,
        parameters=parameters,
        priority=f,
    )


def gen_single_machine(
    kappa: int = 1,
    chi: float = 2.0,
    p: int = 12,
    eps: float | None = None,
    delta: float | None = None,
) -> AdversarialInstance:
    """Worst case for greedy with the exponential boost on one machine."""
    _check_ints(kappa=(kappa, 1), p=(p, 1))
    if not chi > 1.0:
        raise ValidationError("chi must exceed 1")
    if eps is None:
        eps = default_eps(p)
    if delta is None:
        delta = eps / 16.0
    _check_separation(p, eps, delta)
    return _single_machine_ladder(
        exponential(chi), kappa, p, eps, delta,
        family="single",
        asymptotic_ratio=chi / (1.0 - chi ** (-1.0 / kappa)) + 1.0,
        parameters={"kappa": kappa, "chi": chi, "p": p, "eps": eps, "delta": delta},
    )


def gen_general_f(
    f: PriorityFunction,
    kappa: int = 1,
    p: int = 10,
    eps: float | None = None,
    delta: float | None = None,
) -> AdversarialInstance:
    """Worst case for greedy with an arbitrary non-decreasing boost, C=1.

    The limiting ratio kappa/(1 - 1/f(1)) + f(1) + 1 is minimized at
    f(1) = sqrt(kappa) + 1, which is where the (sqrt(kappa)+1)^2 + 1
    barrier for this mechanism family comes from.
    """
    _check_ints(kappa=(kappa, 1), p=(p, 1))
    if eps is None:
        eps = default_eps(p)
    if delta is None:
        delta = eps / 16.0
    _check_separation(p, eps, delta)
    f1 = f.eval(1.0)
    if not f1 > 1.0:
        raise ValidationError("gen_general_f needs f(1) > 1")
    return _single_machine_ladder(
        f, kappa, p, eps, delta,
        family="general",
        asymptotic_ratio=kappa / (1.0 - 1.0 / f1) + f1 + 1.0,
        parameters={"kappa": kappa, "f1": f1, "p": p, "eps": eps, "delta": delta},
    )


def gen_linear(
    a: float,
    kappa: int = 1,
    p: int = 10,
    eps: float | None = None,
    delta: float | None = None,
) -> AdversarialInstance:
    """The same ladder against the linear boost f(delta) = 1 + a*delta.

    asymptotic_ratio here is the linear-specific bound
    kappa/a + ((kappa+1)/2)a + (3/2)(kappa+1), minimized at optimal_a.
    """
    _check_ints(kappa=(kappa, 1), p=(p, 1))
    if not a > 0.0:
        raise ValidationError("the linear construction needs a > 0")
    if eps is None:
        eps = default_eps(p)
    if delta is None:
        delta = eps / 16.0
    _check_separation(p, eps, delta)
    beta = kappa / a + ((kappa + 1.0) / 2.0) * a + 1.5 * (kappa + 1.0)
    adv = _single_machine_ladder(
        linear(a), kappa, p, eps, delta,
        family="linear",
        asymptotic_ratio=beta,
        parameters={"kappa": kappa, "a": a, "p": p, "eps": eps, "delta": delta},
    )
    return adv


def gen_dp_lower(
    n_max: int = 1,
    kappa: int = 1,
    chi: float = 2.0,
    p: int = 12,
    h: int = 2,
    eps: float | None = None,
    delta: float | None = None,
) -> AdversarialInstance:
    """Worst case for the exact-knapsack rule, C = h * n_max.

    Long groups ladder up as before; the shorts arrive in h * n_max
    staggered queues of demand-1 jobs, so the knapsack happily tops up
    every spare instance with shorts while the longs keep preempting each
    other. Queue k is shifted k*delta earlier; the stagger keeps every
    selection unambiguous.
    """
    _check_ints(h=(h, 2), n_max=(n_max, 1), kappa=(kappa, 1), p=(p, 1))
    if not chi > 1.0:
        raise ValidationError("chi must exceed 1")
    if eps is None:
        eps = default_eps(p)
    if delta is None:
        delta = eps * 2.0 ** -((16 * h * n_max - 1).bit_length())
    _check_separation(p, eps, delta, stack=h * n_max)

    capacity = h * n_max
    jobs: list[JobType] = []
    winners = []
    for i in range(p):
        release = i * (kappa - eps)
        deadline = (p + 2) * kappa if i == p - 1 else (i + 1) * kappa
        for _ in range(h):
            jobs.append(
                JobType(
                    id=len(jobs), release=release, deadline=deadline,
                    demand=n_max, length=float(kappa), value=chi ** i,
                )
            )
            if i == p - 1:
                winners.append(jobs[-1].id)
    short_ids = []
    for k in range(1, h * n_max + 1):
        for j in range(p * kappa):
            release = 1.0 - p * eps - k * delta + j
            jobs.append(
                JobType(
                    id=len(jobs), release=release, deadline=release + 1.0,
                    demand=1, length=1.0,
                    value=chi ** (release / kappa) - delta / (p * kappa),
                )
            )
            short_ids.append(jobs[-1].id)

    predicted_w = sum(jobs[i].value for i in winners)
    predicted_opt = predicted_w + sum(jobs[i].value for i in short_ids)
    return AdversarialInstance(
        instance=Instance(capacity=capacity, kappa=float(kappa), jobs=tuple(jobs)),
        predicted_opt=predicted_opt,
        predicted_mech_welfare=predicted_w,
        predicted_mech_winners=frozenset(winners),
        asymptotic_ratio=n_max * chi / (1.0 - chi ** (-1.0 / kappa)) + 1.0,
        family="dp",
        parameters={
            "h": h, "n_max": n_max, "kappa": kappa, "chi": chi, "p": p,
            "eps": eps, "delta": delta,
        },
    )


def gen_nmax_eq_C(
    C: int = 4,
    p: int = 10,
    eps: float | None = None,
    mu: float | None = None,
) -> AdversarialInstance:
    """The degenerate regime where one job can fill the whole machine.

    4p zero-laxity unit jobs escalate in value just fast enough that
    greedy abandons each almost-finished pair for the next arrival,
    finishing only the very last job. The clairvoyant takes the first two
    jobs for 2^(p+1), so the ratio grows like (1/2 + 1/C)^-p: with
    n_max = C no multiplicative guarantee survives.

    The value ladder is base 2 and the boost barely matters (every
    preemption happens at progress ~mu), so the intended mechanism is
    greedy with chi = 2; the winner prediction is insensitive to chi in
    [1.5, 4] but is only asserted there.
    """
    _check_ints(C=(C, 3), p=(p, 1))
    if C % 2 != 0:
        raise ValidationError("C must be even (the construction uses demand C/2)")
    if eps is None:
        eps = default_eps(p)
    if mu is None:
        mu = eps * 2.0 ** -(p + 9)
    if not 0.0 < mu <= eps * 2.0 ** -p / 2.0:
        raise ValidationError(
            "mu must sit far below eps * 2^-p or the preemption chain breaks"
        )
    if p * eps > 0.125:
        raise ValidationError(f"p*eps = {p * eps} too large; need p*eps <= 1/8")

    half = C // 2
    scale = 2.0 ** p
    jobs: list[JobType] = []

    def add(job_id: int, release: float, demand: int, value: float) -> None:
        jobs.append(
            JobType(
                id=job_id, release=release, deadline=release + 1.0,
                demand=demand, length=1.0, value=value,
            )
        )

    add(1, 0.0, half, scale)
    add(2, 0.0, half, scale)
    add(3, mu, half + 1, scale + 2.0 * scale / C + eps)
    add(4, 2.0 * mu, C, scale + 2.0 * scale / C + 2.0 * eps)
    for j in range(1, p):
        prev = jobs[-1].value
        base = 3.0 * j * mu
        add(4 * j + 1, base, half, prev / 2.0 + eps)
        add(4 * j + 2, base, half, prev / 2.0 + eps)
        add(4 * j + 3, base + mu, half + 1, prev / 2.0 + prev / C + 2.0 * eps)
        add(4 * j + 4, base + 2.0 * mu, C, prev / 2.0 + prev / C + 3.0 * eps)

    return AdversarialInstance(
        instance=Instance(capacity=C, kappa=1.0, jobs=tuple(jobs)),
        predicted_opt=2.0 * scale,
        predicted_mech_welfare=jobs[-1].value,
        predicted_mech_winners=frozenset({4 * p}),
        asymptotic_ratio=(0.5 + 1.0 / C) ** -p,
        family="nmaxC",
        parameters={"C": C, "p": p, "eps": eps, "mu": mu, "chi": 2.0},
    )


FAMILIES = {
    "exp": gen_exp_lower,
    "single": gen_single_machine,
    "nmaxC": gen_nmax_eq_C,
    "general": gen_general_f,
    "linear": gen_linear,
    "dp": gen_dp_lower,
}
