import pytest

import cloudauction.engine as engine
from cloudauction.engine import (
    compile_instance,
    feasible_set,
    kernel_backend,
    run,
    run_callable,
    run_compiled,
    total_demand_ok,
)
from cloudauction.harness import fuzz_instances
from cloudauction.mechanisms import DPMechanism, GreedyMechanism
from cloudauction.model import (
    Instance,
    JobType,
    ProgressState,
    ValidationError,
)
from cloudauction.priority import custom, exponential, linear, tabulate

EXP2 = GreedyMechanism(exponential(2.0))


def job(job_id, release, deadline, demand, length, value):
    return JobType(job_id, release, deadline, demand, length, value)


class TestBasicRuns:
    def test_empty_instance(self):
        trace, outcome = run(Instance(2, 1, []), EXP2)
        assert outcome.welfare == 0.0
        assert outcome.completed == set()
        assert trace.segments == ()

    def test_single_job_completes(self):
        inst = Instance(1, 1, [job(0, 0.0, 1.5, 1, 1.0, 4.0)])
        trace, outcome = run(inst, EXP2)
        assert outcome.completed == {0}
        assert outcome.welfare == 4.0
        assert trace.job_intervals(0) == [(0.0, 1.0)]

    def test_late_rich_job_preempts_and_wins(self):
        # A starts at 0; B arrives mid-run with virtual value 3 against
        # A's boosted 1 * sqrt(2), takes the machine, and finishes alone.
        inst = Instance(
            1,
            1,
            [job(0, 0.0, 1.0, 1, 1.0, 1.0), job(1, 0.5, 1.5, 1, 1.0, 3.0)],
        )
        trace, outcome = run(inst, EXP2)
        assert outcome.completed == {1}
        assert outcome.welfare == 3.0
        assert trace.to_csv() == (
            "segment_start,segment_end,job_id,instances\n"
            "0.0,0.5,0,1\n"
            "0.5,1.5,1,1\n"
        )

    def test_boost_protects_the_running_job(self):
        # same shape but the newcomer is too poor to beat 1 * sqrt(2)
        inst = Instance(
            1,
            1,
            [job(0, 0.0, 1.0, 1, 1.0, 1.0), job(1, 0.5, 1.5, 1, 1.0, 1.3)],
        )
        _, outcome = run(inst, EXP2)
        assert outcome.completed == {0}

    def test_outcome_lists_every_job_with_zero_payments(self):
        inst = Instance(
            1,
            1,
            [job(0, 0.0, 1.0, 1, 1.0, 1.0), job(1, 0.5, 1.5, 1, 1.0, 3.0)],
        )
        _, outcome = run(inst, EXP2)
        assert set(outcome.payments) == {0, 1}
        assert set(outcome.utilities) == {0, 1}
        assert all(p == 0.0 for p in outcome.payments.values())
        assert outcome.utilities == {0: 0.0, 1: 3.0}

    def test_validation_raises_by_default(self):
        bad = Instance(1, 1, [job(0, 0.0, 0.5, 1, 1.0, 1.0)])
        with pytest.raises(ValidationError):
            run(bad, EXP2)
        _, outcome = run(bad, EXP2, validate=False)
        assert outcome.completed == set()


class TestInterruption:
    def make(self, a_deadline):
        return Instance(
            1,
            1,
            [
                job(0, 0.0, a_deadline, 1, 1.0, 2.0),
                job(1, 0.5, 1.5, 1, 1.0, 10.0),
            ],
        )

    def test_interrupted_progress_is_lost(self):
        # arrivals-only: B wins at 0.5; nothing reselects after B finishes,
        # so A's half-done run never resumes
        _, outcome = run(self.make(2.6), EXP2)
        assert outcome.completed == {1}
        assert outcome.welfare == 10.0

    def test_completion_reselection_restarts_from_scratch(self):
        # reallocation at B's completion lets A restart at 1.5 and it must
        # run a full length again (finishing at 2.5, not at 2.0)
        trace, outcome = run(self.make(2.6), EXP2, reallocate_on_completion=True)
        assert outcome.completed == {0, 1}
        assert outcome.welfare == 12.0
        assert trace.job_intervals(0) == [(0.0, 0.5), (1.5, 2.5)]

    def test_completion_reselection_respects_deadlines(self):
        # with a tighter deadline the restarted run cannot fit anymore
        _, outcome = run(self.make(2.2), EXP2, reallocate_on_completion=True)
        assert outcome.completed == {1}


class TestTrace:
    def test_interior_idle_segment_is_recorded(self):
        inst = Instance(
            1,
            1,
            [job(0, 0.0, 1.0, 1, 1.0, 5.0), job(1, 2.0, 3.0, 1, 1.0, 5.0)],
        )
        trace, _ = run(inst, EXP2)
        assert [(s.start, s.end, dict(s.alloc)) for s in trace.segments] == [
            (0.0, 1.0, {0: 1}),
            (1.0, 2.0, {}),
            (2.0, 3.0, {1: 1}),
        ]
        assert "1.0,2.0,,0" in trace.to_csv()
        assert trace.span() == (0.0, 3.0)

    def test_parallel_jobs_share_a_segment(self):
        inst = Instance(
            3,
            1,
            [job(0, 0.0, 1.0, 2, 1.0, 4.0), job(1, 0.0, 1.0, 1, 1.0, 1.0)],
        )
        trace, outcome = run(inst, EXP2)
        assert outcome.completed == {0, 1}
        assert trace.segments[0].alloc == {0: 2, 1: 1}
        assert trace.segments[0].used() == 3
        assert total_demand_ok(trace, 3)

    def test_capacity_bound_on_fuzzed_instances(self):
        for inst in fuzz_instances(40, 77):
            trace, _ = run(inst, EXP2)
            assert total_demand_ok(trace, inst.capacity)
            trace, _ = run(inst, DPMechanism(chi=2.0))
            assert total_demand_ok(trace, inst.capacity)


class TestFeasibleSet:
    def test_respects_release_deadline_and_progress(self):
        inst = Instance(
            2,
            2,
            [
                job(0, 0.0, 4.0, 1, 2.0, 1.0),
                job(1, 3.0, 6.0, 1, 1.0, 1.0),
                job(2, 0.0, 2.0, 1, 2.0, 1.0),
            ],
        )
        assert feasible_set(inst, {}, 0.0) == {0, 2}
        # at t=1 job 2's remaining window is too short from a cold start
        assert feasible_set(inst, {}, 1.0) == {0}
        running = {2: ProgressState(job_id=2, running=True, run_start=0.0)}
        assert feasible_set(inst, running, 1.0) == {0, 2}
        assert feasible_set(inst, {}, 3.0) == {1}


class TestKernels:
    def test_compiled_backend_is_active(self):
        assert kernel_backend() in ("cython", "pure")

    @pytest.mark.skipif(
        kernel_backend() != "cython", reason="compiled kernel not built"
    )
    def test_pure_and_compiled_kernels_agree_bitwise(self, monkeypatch):
        mechs = {
            "greedy-exp": GreedyMechanism(exponential(2.0)),
            "greedy-lin": GreedyMechanism(linear(1.0)),
            "greedy-table": GreedyMechanism(tabulate(lambda x: 1.0 + x * x)),
            "dp": DPMechanism(chi=2.0),
        }
        instances = list(fuzz_instances(25, 123))
        fast = {}
        for name, mech in mechs.items():
            for k, inst in enumerate(instances):
                fast[(name, k)] = run_compiled(
                    compile_instance(inst), mech, collect=True
                )
        monkeypatch.setattr(engine, "_engine_cy", None)
        for name, mech in mechs.items():
            for k, inst in enumerate(instances):
                flags, welfare, intervals = run_compiled(
                    compile_instance(inst), mech, collect=True
                )
                f2, w2, iv2 = fast[(name, k)]
                assert list(flags) == list(f2), (name, k)
                assert welfare == w2, (name, k)  # exact float equality
                assert list(intervals) == list(iv2), (name, k)

    def test_custom_callable_priority_runs_on_the_pure_path(self):
        mech = GreedyMechanism(custom(lambda x: 1.0 + x, label="ramp"))
        inst = Instance(
            1,
            1,
            [job(0, 0.0, 1.0, 1, 1.0, 1.0), job(1, 0.5, 1.5, 1, 1.0, 1.4)],
        )
        _, outcome = run(inst, mech)
        # boost at delta 0.5 is 1.5, so the runner scores 1.5 > 1.4
        assert outcome.completed == {0}

    def test_tabulated_and_callable_custom_agree(self):
        shape = lambda x: 1.0 + 0.5 * x  # noqa: E731 - tiny fixture
        as_table = GreedyMechanism(tabulate(shape))
        as_callable = GreedyMechanism(custom(shape))
        for inst in fuzz_instances(15, 321):
            _, a = run(inst, as_table, record_trace=False)
            _, b = run(inst, as_callable, record_trace=False)
            assert a.completed == b.completed
            assert a.welfare == pytest.approx(b.welfare, abs=1e-12)


class TestCompile:
    def test_arrival_merge(self):
        inst = Instance(
            2,
            1,
            [
                job(0, 0.0, 1.0, 1, 1.0, 1.0),
                job(1, 0.0, 1.5, 1, 1.0, 1.0),
                job(2, 0.7, 1.7, 1, 1.0, 1.0),
            ],
        )
        compiled = compile_instance(inst)
        assert list(compiled.arrivals) == [0.0, 0.7]
        assert compiled.pos == {0: 0, 1: 1, 2: 2}


def test_run_callable_wraps_a_bare_function():
    inst = Instance(
        1,
        1,
        [job(0, 0.0, 1.0, 1, 1.0, 2.0), job(1, 0.0, 1.0, 1, 1.0, 5.0)],
    )
    _, greedy_high = run_callable(
        inst, lambda jobs, cap, deltas: {max(jobs, key=lambda j: j[2])[0]}
    )
    assert greedy_high.completed == {1}
    _, lazy = run_callable(inst, lambda jobs, cap, deltas: set())
    assert lazy.completed == set()


def test_overcommitting_mechanism_is_rejected():
    inst = Instance(
        1,
        1,
        [job(0, 0.0, 1.0, 1, 1.0, 2.0), job(1, 0.0, 1.0, 1, 1.0, 5.0)],
    )
    with pytest.raises(RuntimeError):
        run_callable(inst, lambda jobs, cap, deltas: {j[0] for j in jobs})
