"""Online auctions for deadline-constrained cloud jobs.

Two allocation rules (a preemption-aware greedy and an exact-knapsack
dynamic program), critical-value pricing, an exact offline optimum for
benchmarking, adversarial instance families with predicted ratios, and a
replay-based property harness. See the README for the CLI.
"""

from .adversarial import (
    FAMILIES,
    AdversarialInstance,
    gen_dp_lower,
    gen_exp_lower,
    gen_general_f,
    gen_linear,
    gen_nmax_eq_C,
    gen_single_machine,
)
from .engine import (
    AllocationTrace,
    Segment,
    compile_instance,
    feasible_set,
    kernel_backend,
    run,
    run_callable,
)
from .harness import (
    check_dsic,
    check_invariants,
    check_monotone,
    competitive_ratio,
    fuzz_instances,
    measure,
)
from .mechanisms import DPMechanism, GreedyMechanism, greedy_select, knapsack_dp
from .model import (
    EPS_CMP,
    GuardError,
    Instance,
    JobType,
    Outcome,
    ValidationError,
    instance_from_json,
    instance_to_json,
    validate_instance,
)
from .oracle import knapsack_to_instance, offline_opt
from .payments import critical_value, settle
from .priority import (
    PriorityFunction,
    custom,
    exponential,
    linear,
    optimal_a,
    optimal_chi,
    parse_priority_spec,
    tabulate,
)

__version__ = "0.1.0"

__all__ = [
    "AdversarialInstance",
    "AllocationTrace",
    "DPMechanism",
    "EPS_CMP",
    "FAMILIES",
    "GreedyMechanism",
    "GuardError",
    "Instance",
    "JobType",
    "Outcome",
    "PriorityFunction",
    "Segment",
    "ValidationError",
    "check_dsic",
    "check_invariants",
    "check_monotone",
    "compile_instance",
    "competitive_ratio",
    "critical_value",
    "custom",
    "exponential",
    "feasible_set",
    "fuzz_instances",
    "gen_dp_lower",
    "gen_exp_lower",
    "gen_general_f",
    "gen_linear",
    "gen_nmax_eq_C",
    "gen_single_machine",
    "greedy_select",
    "instance_from_json",
    "instance_to_json",
    "kernel_backend",
    "knapsack_dp",
    "knapsack_to_instance",
    "linear",
    "measure",
    "offline_opt",
    "optimal_a",
    "optimal_chi",
    "parse_priority_spec",
    "run",
    "run_callable",
    "settle",
    "tabulate",
    "validate_instance",
]
