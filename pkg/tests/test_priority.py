import math

import pytest
from hypothesis import given, strategies as st

from cloudauction.priority import (
    custom,
    exponential,
    linear,
    optimal_a,
    optimal_chi,
    parse_priority_spec,
    tabulate,
)


def test_exponential_values():
    f = exponential(2.0)
    assert f.eval(0.0) == 1.0
    assert f.eval(1.0) == 2.0
    assert f.eval(0.5) == pytest.approx(math.sqrt(2.0), abs=1e-12)


def test_exponential_requires_base_above_one():
    with pytest.raises(ValueError):
        exponential(1.0)
    with pytest.raises(ValueError):
        exponential(0.5)


def test_linear_values():
    f = linear(0.5)
    assert f.eval(0.0) == 1.0
    assert f.eval(1.0) == 1.5
    with pytest.raises(ValueError):
        linear(-0.1)


def test_eval_clamps_slightly_out_of_range_arguments():
    f = exponential(2.0)
    assert f.eval(-1e-13) == 1.0
    assert f.eval(1.0 + 1e-13) == 2.0


def test_custom_table_interpolates_linearly():
    # table encodes f(x) = 1 + x on 1025 points; interpolation is exact
    f = tabulate(lambda x: 1.0 + x)
    assert f.eval(0.0) == 1.0
    assert f.eval(1.0) == pytest.approx(2.0, abs=1e-12)
    assert f.eval(0.3141) == pytest.approx(1.3141, abs=1e-9)


def test_custom_rejects_bad_shapes():
    with pytest.raises(ValueError):
        custom([2.0] * 1025)  # f(0) != 1
    decreasing = [1.0 + k / 1024 for k in range(1025)]
    decreasing[512] = 2.0
    with pytest.raises(ValueError):
        custom(decreasing)


def test_optimal_parameters():
    assert optimal_chi(1) == 2.0
    assert optimal_chi(2) == 2.25
    assert optimal_chi(4) == pytest.approx((5 / 4) ** 4)
    assert optimal_a(1) == 1.0
    assert optimal_a(2) == pytest.approx(math.sqrt(4 / 3))
    with pytest.raises(ValueError):
        optimal_chi(0)


@given(st.floats(min_value=0.0, max_value=1.0))
def test_boosts_are_non_decreasing_and_start_at_one(delta):
    for f in (exponential(2.25), linear(1.3), tabulate(lambda x: 1 + x * x)):
        assert f.eval(delta) >= 1.0 - 1e-12
        assert f.eval(delta) <= f.eval(1.0) + 1e-12


def test_parse_priority_spec():
    assert parse_priority_spec("exp:2.5", 1).chi == 2.5
    assert parse_priority_spec("lin:0.75", 1).a == 0.75
    assert parse_priority_spec("exp-opt", 2).chi == 2.25
    assert parse_priority_spec("lin-opt", 2).a == pytest.approx(math.sqrt(4 / 3))
    with pytest.raises(ValueError):
        parse_priority_spec("quadratic:2", 1)
