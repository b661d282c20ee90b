import pytest

from cloudauction.harness import (
    CheckReport,
    CheckViolation,
    check_dsic,
    check_invariants,
    check_monotone,
    competitive_ratio,
    fuzz_instances,
)
from cloudauction.mechanisms import DPMechanism, GreedyMechanism
from cloudauction.model import Instance, JobType, instance_to_json, validate_instance
from cloudauction.priority import exponential


EXP2 = GreedyMechanism(exponential(2.0))
DP2 = DPMechanism(2.0)


class NeverSelects:
    name = "never"

    def select(self, jobs, capacity, deltas):
        return set()


class TestFuzzInstances:
    def test_deterministic_for_a_seed(self):
        a = list(fuzz_instances(20, seed=7))
        b = list(fuzz_instances(20, seed=7))
        assert [instance_to_json(x) for x in a] == [instance_to_json(y) for y in b]

    def test_different_seeds_differ(self):
        a = [instance_to_json(x) for x in fuzz_instances(20, seed=1)]
        b = [instance_to_json(x) for x in fuzz_instances(20, seed=2)]
        assert a != b

    def test_all_instances_valid_and_within_bounds(self):
        for instance in fuzz_instances(50, seed=3, jobs_range=(2, 6), capacity_range=(1, 4)):
            assert validate_instance(instance) == []
            assert 2 <= len(instance.jobs) <= 6
            assert 1 <= instance.capacity <= 4
            assert instance.kappa == 2.0

    def test_times_land_on_the_grid(self):
        grid = 0.25
        for instance in fuzz_instances(30, seed=11, grid=grid):
            for job in instance.jobs:
                for t in (job.release, job.deadline, job.length):
                    assert (t / grid) == int(t / grid)


class TestCheckDsic:
    @pytest.mark.parametrize("mechanism", [EXP2, DP2], ids=["greedy", "dp"])
    def test_critical_value_rule_is_clean(self, mechanism):
        for instance in fuzz_instances(5, seed=21, jobs_range=(2, 6)):
            report = check_dsic(instance, mechanism, samples=150, seed=5)
            assert report.ok, report.violations[:3]
            assert report.kind == "dsic"
            assert report.samples == 150

    def test_pay_your_bid_is_manipulable(self):
        hits = 0
        for instance in fuzz_instances(8, seed=22, jobs_range=(3, 7)):
            report = check_dsic(
                instance, EXP2, samples=200, seed=9, payment_rule="bid"
            )
            hits += len(report.violations)
        assert hits >= 1

    def test_violations_sorted_and_detailed(self):
        collected = []
        for instance in fuzz_instances(8, seed=23, jobs_range=(3, 7)):
            report = check_dsic(
                instance, EXP2, samples=200, seed=13, payment_rule="bid"
            )
            if report.violations:
                collected = report.violations
                break
        assert collected, "expected the bid rule to produce at least one violation"
        keys = [(v.job_id, v.detail["index"]) for v in collected]
        assert keys == sorted(keys)
        first = collected[0]
        assert first.kind == "dsic"
        assert first.detail["deviation_utility"] > first.detail["truth_utility"]


class TestCheckMonotone:
    @pytest.mark.parametrize("mechanism", [EXP2, DP2], ids=["greedy", "dp"])
    def test_winning_is_monotone_in_the_bid(self, mechanism):
        for instance in fuzz_instances(5, seed=31, jobs_range=(2, 6)):
            report = check_monotone(instance, mechanism, samples=150, seed=17)
            assert report.ok, report.violations[:3]
            assert report.kind == "monotone"


class TestCheckInvariants:
    @pytest.mark.parametrize("mechanism", [EXP2, DP2], ids=["greedy", "dp"])
    def test_clean_on_fuzzed_instances(self, mechanism):
        for instance in fuzz_instances(25, seed=41, jobs_range=(1, 7)):
            report = check_invariants(instance, mechanism)
            assert report.ok, report.violations[:3]

    def test_report_shape(self):
        instance = next(iter(fuzz_instances(1, seed=42)))
        report = check_invariants(instance, EXP2)
        assert isinstance(report, CheckReport)
        assert report.kind == "invariants"
        assert report.violations == ()


class TestCompetitiveRatio:
    def test_empty_instance_scores_one(self):
        instance = Instance(jobs=(), capacity=2, kappa=1.0)
        ratio, welfare, opt_value = competitive_ratio(instance, EXP2)
        assert (ratio, welfare, opt_value) == (1.0, 0.0, 0.0)

    def test_zero_welfare_against_positive_opt_is_inf(self):
        instance = Instance(
            jobs=(JobType(id=0, release=0.0, deadline=1.0, demand=1, length=1.0, value=4.0),),
            capacity=1,
            kappa=1.0,
        )
        ratio, welfare, opt_value = competitive_ratio(instance, NeverSelects())
        assert welfare == 0.0
        assert opt_value == 4.0
        assert ratio == float("inf")

    def test_explicit_opt_skips_the_oracle(self):
        instance = Instance(
            jobs=(JobType(id=0, release=0.0, deadline=1.0, demand=1, length=1.0, value=4.0),),
            capacity=1,
            kappa=1.0,
        )
        ratio, welfare, opt_value = competitive_ratio(instance, EXP2, opt=8.0)
        assert welfare == 4.0
        assert opt_value == 8.0
        assert ratio == 2.0


def test_check_violation_is_a_plain_record():
    v = CheckViolation(job_id=3, kind="beats-opt", detail={"welfare": 2.0})
    assert v.job_id == 3
    assert v.kind == "beats-opt"
    assert v.detail["welfare"] == 2.0
