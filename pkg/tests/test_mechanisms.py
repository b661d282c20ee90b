import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cloudauction.mechanisms import (
    DP_TABLE_GUARD,
    DPMechanism,
    GreedyMechanism,
    KnapsackProblem,
    ScoredJob,
    dp_select,
    greedy_select,
    knapsack_dp,
    score_jobs,
)
from cloudauction.model import GuardError
from cloudauction.priority import exponential


def scored(job_id, demand, virtual_value):
    return ScoredJob(
        job_id=job_id,
        demand=demand,
        density=virtual_value / demand,
        virtual_value=virtual_value,
    )


def brute_knapsack(items, capacity):
    best = 0.0
    for r in range(len(items) + 1):
        for combo in itertools.combinations(items, r):
            if sum(w for _, w, _ in combo) <= capacity:
                best = max(best, sum(p for _, _, p in combo))
    return best


class TestGreedySelect:
    def test_empty(self):
        assert greedy_select([], 10) == set()

    def test_prefix_branch(self):
        jobs = [scored(0, 4, 8.0), scored(1, 4, 6.0), scored(2, 4, 4.0)]
        assert greedy_select(jobs, 10) == {0, 1}

    def test_single_job_branch(self):
        jobs = [scored(0, 9, 9.0), scored(1, 10, 9.5)]
        assert greedy_select(jobs, 10) == {1}

    def test_everything_fits(self):
        jobs = [scored(i, 2, float(i + 1)) for i in range(4)]
        assert greedy_select(jobs, 8) == {0, 1, 2, 3}

    def test_no_backfilling_after_the_cut(self):
        # the demand-3 job is cut; the demand-1 job behind it would fit
        # in the leftover capacity but must not be picked up
        jobs = [scored(0, 2, 10.0), scored(1, 3, 9.0), scored(2, 1, 0.5)]
        assert greedy_select(jobs, 4) == {0}

    def test_density_tie_prefers_higher_virtual_value(self):
        a = ScoredJob(job_id=0, demand=1, density=2.0, virtual_value=2.0)
        b = ScoredJob(job_id=1, demand=2, density=2.0, virtual_value=4.0)
        assert greedy_select([a, b], 2) == {1}

    def test_full_tie_prefers_lower_id(self):
        a = ScoredJob(job_id=3, demand=1, density=2.0, virtual_value=2.0)
        b = ScoredJob(job_id=1, demand=1, density=2.0, virtual_value=2.0)
        assert greedy_select([a, b], 1) == {1}

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=5),
                st.floats(min_value=0.01, max_value=100.0),
            ),
            max_size=10,
        ),
        st.integers(min_value=5, max_value=12),
    )
    def test_never_exceeds_capacity(self, raw, capacity):
        jobs = [scored(i, n, v) for i, (n, v) in enumerate(raw)]
        chosen = greedy_select(jobs, capacity)
        assert sum(j.demand for j in jobs if j.job_id in chosen) <= capacity


class TestKnapsack:
    def test_no_items(self):
        assert knapsack_dp(KnapsackProblem(items=(), capacity=10)) == (set(), 0.0)

    def test_three_item_example(self):
        problem = KnapsackProblem(
            items=((0, 6, 5.0), (1, 5, 4.0), (2, 5, 4.0)), capacity=10
        )
        assert knapsack_dp(problem) == ({1, 2}, 8.0)

    def test_nothing_fits(self):
        problem = KnapsackProblem(items=((0, 4, 100.0),), capacity=3)
        assert knapsack_dp(problem) == (set(), 0.0)

    def test_tie_prefers_lexicographically_smallest_id_set(self):
        problem = KnapsackProblem(
            items=((0, 2, 5.0), (1, 2, 5.0), (2, 2, 5.0)), capacity=4
        )
        assert knapsack_dp(problem)[0] == {0, 1}

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(ValueError):
            knapsack_dp(KnapsackProblem(items=((0, 0, 1.0),), capacity=5))

    def test_table_guard(self):
        big = KnapsackProblem(items=((0, 1, 1.0),), capacity=DP_TABLE_GUARD)
        with pytest.raises(GuardError):
            knapsack_dp(big)

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=8),
                st.floats(min_value=0.01, max_value=50.0),
            ),
            max_size=12,
        ),
        st.integers(min_value=0, max_value=20),
    )
    @settings(max_examples=150)
    def test_matches_brute_force(self, raw, capacity):
        items = tuple((i, w, p) for i, (w, p) in enumerate(raw))
        chosen, profit = knapsack_dp(KnapsackProblem(items=items, capacity=capacity))
        assert profit == pytest.approx(brute_knapsack(items, capacity), abs=1e-9)
        assert sum(w for i, w, _ in items if i in chosen) <= capacity
        assert sum(p for i, _, p in items if i in chosen) == pytest.approx(
            profit, abs=1e-9
        )

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=6),
                st.floats(min_value=0.1, max_value=20.0),
            ),
            max_size=8,
        ),
        st.integers(min_value=0, max_value=10),
        st.integers(min_value=1, max_value=5),
    )
    def test_profit_monotone_in_capacity(self, raw, capacity, extra):
        items = tuple((i, w, p) for i, (w, p) in enumerate(raw))
        _, small = knapsack_dp(KnapsackProblem(items=items, capacity=capacity))
        _, large = knapsack_dp(KnapsackProblem(items=items, capacity=capacity + extra))
        assert large >= small - 1e-12


class TestDPSelect:
    def test_agrees_with_greedy_single_branch(self):
        jobs = [scored(0, 9, 9.0), scored(1, 10, 9.5)]
        assert dp_select(jobs, 10) == {1}

    def test_beats_greedy_when_pairing_wins(self):
        jobs = [scored(0, 6, 7.0), scored(1, 5, 5.0), scored(2, 5, 5.0)]
        assert dp_select(jobs, 10) == {1, 2}
        assert greedy_select(jobs, 10) == {0}

    def test_all_fit(self):
        jobs = [scored(i, 1, 1.0 + i) for i in range(5)]
        assert dp_select(jobs, 5) == {0, 1, 2, 3, 4}

    @given(
        st.lists(
            st.tuples(
                st.integers(min_value=1, max_value=5),
                st.floats(min_value=0.01, max_value=30.0),
            ),
            max_size=10,
        ),
        st.integers(min_value=1, max_value=12),
    )
    @settings(max_examples=150)
    def test_dp_dominates_greedy_and_greedy_is_half(self, raw, capacity):
        jobs = [scored(i, n, v) for i, (n, v) in enumerate(raw) if n <= capacity]
        g = greedy_select(jobs, capacity)
        d = dp_select(jobs, capacity)
        g_val = sum(j.virtual_value for j in jobs if j.job_id in g)
        d_val = sum(j.virtual_value for j in jobs if j.job_id in d)
        assert d_val >= g_val - 1e-9
        assert 2.0 * g_val >= d_val - 1e-9


def test_mechanism_objects_score_with_their_priority():
    greedy = GreedyMechanism(exponential(2.0))
    dp = DPMechanism(chi=2.0)
    jobs = [(0, 1, 4.0), (1, 1, 3.0)]
    deltas = {1: 0.5}  # boosts 3.0 to ~4.24, overtaking the idle 4.0
    assert greedy.select(jobs, 1, deltas) == {1}
    assert dp.select(jobs, 1, deltas) == {1}
    halves = score_jobs(jobs, exponential(4.0), {0: 0.5, 1: 0.5})
    assert halves[0].virtual_value == pytest.approx(8.0)
    assert halves[0].density == pytest.approx(8.0)
