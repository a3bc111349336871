"""
Average start time and task gains
"""
import math
from types import SimpleNamespace

import numpy as np
import pytest

from engine import run
from errors import PreconditionError
from metrics import (
    GainParams,
    average_start_time,
    combined_gain_fraction,
    compare,
    per_task_mean_start_time,
    report,
    task_gain,
)
from scenario import case2_scenario
from tests.conftest import make_scenario, robot, task


def test_full_cover_at_time_zero_earns_static_gain():
    assert task_gain(30, 0, 0.0, GainParams(static_gain=100)) == pytest.approx(100)


def test_no_cover_earns_nothing():
    assert task_gain(30, 30, 5.0, GainParams(static_gain=100, lam=0.01)) == 0


def test_half_cover_decays_with_start_time():
    value = task_gain(30, 15, 10.0, GainParams(static_gain=100, lam=0.01))
    assert value == pytest.approx(45.2419, abs=1e-4)


def test_unstarted_task_earns_nothing():
    assert task_gain(30, 0, math.inf, GainParams(lam=0.01)) == 0


def test_gain_decreases_with_residual_and_time():
    params = GainParams(lam=0.02)
    by_residual = [task_gain(30, m, 10.0, params) for m in range(31)]
    by_time = [task_gain(30, 5, t, params) for t in range(0, 200, 10)]
    assert all(a >= b for a, b in zip(by_residual, by_residual[1:]))
    assert all(a > b for a, b in zip(by_time, by_time[1:]))


@pytest.mark.parametrize("demand", [0, -3])
def test_gain_needs_positive_demand(demand):
    with pytest.raises(PreconditionError):
        task_gain(demand, 0, 1.0, GainParams())


def test_gain_params_validated():
    with pytest.raises(PreconditionError):
        GainParams(static_gain=0)
    with pytest.raises(PreconditionError):
        GainParams(lam=-1)


def test_average_start_time_divides_by_robot_count():
    result = SimpleNamespace(start_times=np.array([10.0, 20.0]))
    assert average_start_time(result, 5) == 6.0
    assert per_task_mean_start_time(result) == 15.0


def test_average_start_time_without_tasks():
    assert average_start_time(SimpleNamespace(start_times=np.array([])), 3) == 0.0


def test_unstarted_tasks_are_listed_not_averaged():
    result = SimpleNamespace(start_times=np.array([10.0, math.inf]))
    assert average_start_time(result, 2) == 5.0


def test_report_totals_per_task_gains():
    scenario = case2_scenario(10, seed=1)
    metrics = report(run(scenario), scenario)
    assert metrics.total_gain == pytest.approx(metrics.per_task_gain.sum())
    assert all(0 <= g <= 100 for g in metrics.per_task_gain)
    assert metrics.allocator == "cbpa"
    assert metrics.total_gain == pytest.approx(sum(sorted(metrics.per_task_gain, reverse=True)))


def test_compare_keeps_one_row_per_result():
    scenario = case2_scenario(10, seed=1)
    result = run(scenario)
    frame = compare([("cbpa", result)], scenario)
    assert list(frame["allocator"]) == ["cbpa"]
    assert frame.loc[0, "iterations"] == result.rounds_to_converge
    assert "per_task_mean_start_time_extra" in frame.columns
    assert "combined_coverage_extension" in frame.columns


def test_combined_fraction_weights_both_kinds():
    scenario = make_scenario([robot(0, a=10, b=3)], [task(0, 3, 4, a=6, b=2), task(1, 6, 8, a=20)])
    result = run(scenario)
    fractions = combined_gain_fraction(result, scenario, alpha=1.0, beta=1.0)
    assert fractions[0] == pytest.approx(1.0)
    assert fractions[1] == 0.0


def test_report_lists_unstarted_tasks():
    scenario = make_scenario([robot(0, a=5)], [task(0, 3, 4, a=5), task(1, 6, 8, a=4)])
    metrics = report(run(scenario), scenario)
    assert metrics.unassigned_tasks == [1]
    assert metrics.avg_start_time == pytest.approx(5.0)
