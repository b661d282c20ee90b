"""Priority functions that boost partially processed jobs.

A priority function f maps the continuously-processed fraction delta in
[0, 1] to a multiplier at least 1, with f(0) = 1 and f non-decreasing.
Selection rules score a job by value * f(delta), so a job that has been
running longer is harder to preempt.

Three kinds are supported:

* exponential: f(delta) = chi ** delta with chi > 1
* linear:      f(delta) = 1 + a * delta with a >= 0
* custom:      a non-decreasing closed form, or 1025 tabulated samples
               on a uniform grid with linear interpolation
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

TABLE_SIZE = 1025


@dataclass(frozen=True)
class PriorityFunction:
    kind: str  # "exp" | "lin" | "custom"
    chi: float = 0.0
    a: float = 0.0
    table: tuple[float, ...] | None = None
    func: Callable[[float], float] | None = None
    label: str = ""

    def eval(self, delta: float) -> float:
        if not (-1e-12 <= delta <= 1.0 + 1e-12):
            raise ValueError(f"delta outside [0, 1]: {delta}")
        if delta < 0.0:
            delta = 0.0
        elif delta > 1.0:
            delta = 1.0
        if self.kind == "exp":
            return math.pow(self.chi, delta)
        if self.kind == "lin":
            return 1.0 + self.a * delta
        if self.table is not None:
            x = delta * (TABLE_SIZE - 1)
            lo = int(x)
            if lo >= TABLE_SIZE - 1:
                return self.table[-1]
            frac = x - lo
            return self.table[lo] * (1.0 - frac) + self.table[lo + 1] * frac
        assert self.func is not None
        return self.func(delta)

    def __call__(self, delta: float) -> float:
        return self.eval(delta)


def exponential(chi: float) -> PriorityFunction:
    if not chi > 1.0:
        raise ValueError("exponential priority needs chi > 1")
    return PriorityFunction(kind="exp", chi=float(chi), label=f"exp:{chi}")


def linear(a: float) -> PriorityFunction:
    if a < 0.0:
        raise ValueError("linear priority needs a >= 0")
    return PriorityFunction(kind="lin", a=float(a), label=f"lin:{a}")


def custom(
    source: Callable[[float], float] | Sequence[float], label: str = "custom"
) -> PriorityFunction:
    """Wrap a user-supplied priority.

    ``source`` is either a callable closed form or exactly 1025 samples at
    delta = k/1024. f(0) = 1 and monotonicity are checked up front: the
    closed form is spot-checked on a 1e-3 grid, the table exactly.
    """
    if callable(source):
        probe = [source(k / 1000.0) for k in range(1001)]
        if abs(probe[0] - 1.0) > 1e-9:
            raise ValueError("custom priority must satisfy f(0) = 1")
        for lo, hi in zip(probe, probe[1:]):
            if hi < lo - 1e-12:
                raise ValueError("custom priority must be non-decreasing")
        return PriorityFunction(kind="custom", func=source, label=label)
    table = tuple(float(x) for x in source)
    if len(table) != TABLE_SIZE:
        raise ValueError(f"custom priority table needs {TABLE_SIZE} samples")
    if abs(table[0] - 1.0) > 1e-9:
        raise ValueError("custom priority must satisfy f(0) = 1")
    for lo, hi in zip(table, table[1:]):
        if hi < lo - 1e-12:
            raise ValueError("custom priority must be non-decreasing")
    return PriorityFunction(kind="custom", table=table, label=label)


def tabulate(f: Callable[[float], float], label: str = "custom") -> PriorityFunction:
    """Sample a closed form onto the 1025-point table (kernel-friendly form)."""
    return custom([f(k / (TABLE_SIZE - 1)) for k in range(TABLE_SIZE)], label=label)


def optimal_chi(kappa: int) -> float:
    """The exponential base minimizing the worst-case ratio bound for a
    known maximum job length."""
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    return ((kappa + 1) / kappa) ** kappa


def optimal_a(kappa: int) -> float:
    """The linear slope minimizing the linear-priority ratio bound."""
    if kappa < 1:
        raise ValueError("kappa must be at least 1")
    return math.sqrt(2 * kappa / (kappa + 1))


def parse_priority_spec(spec: str, kappa: int) -> PriorityFunction:
    """Parse a CLI priority spec: exp:CHI, lin:A, exp-opt, or lin-opt."""
    if spec == "exp-opt":
        return exponential(optimal_chi(kappa))
    if spec == "lin-opt":
        return linear(optimal_a(kappa))
    if spec.startswith("exp:"):
        return exponential(float(spec[4:]))
    if spec.startswith("lin:"):
        return linear(float(spec[4:]))
    raise ValueError(
        f"bad priority spec {spec!r}: expected exp:CHI, lin:A, exp-opt, or lin-opt"
    )
