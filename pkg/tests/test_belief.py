"""
Belief matrices and derived quantities
"""
import math

import numpy as np

from belief import (
    check_constraints,
    compare_quality,
    fresh_belief,
    refresh_winners,
    remaining_a,
    remaining_b,
    residual_demand,
    task_start_time,
)
from tests.conftest import make_scenario, robot, task


def assign(belief, j, k, time, a=0.0, b=0.0):
    belief.times[j][k] = time
    belief.alloc_a[j][k] = a
    belief.alloc_b[j][k] = b
    belief.winners[j][k] = True


def test_fresh_belief_is_empty(case1):
    belief = fresh_belief(case1, 2)
    assert (belief.times == -1).all()
    assert not belief.winners.any()
    assert belief.alloc_a.sum() == 0 and belief.alloc_b.sum() == 0
    assert belief.bundle == [] and belief.path == []


def test_remaining_a_without_assignments(case1):
    assert remaining_a(fresh_belief(case1, 2), 2) == 30


def test_remaining_a_after_two_tasks(case1):
    belief = fresh_belief(case1, 2)
    assign(belief, 0, 2, 100.0, a=8)
    assign(belief, 1, 2, 200.0, a=6)
    assert remaining_a(belief, 2) == 16


def test_remaining_a_saturated(case1):
    belief = fresh_belief(case1, 4)
    assign(belief, 0, 4, 10.0, a=25)
    assert remaining_a(belief, 4) == 0


def test_remaining_b_ignores_assignments(case1):
    belief = fresh_belief(case1, 0)
    before = remaining_b(belief, 0)
    assign(belief, 0, 0, 50.0, b=1)
    assign(belief, 2, 0, 90.0, b=3)
    assert before == remaining_b(belief, 0) == 3
    assert remaining_b(belief, 3) == 0


def test_residual_demand(case1):
    belief = fresh_belief(case1, 0)
    assert residual_demand(belief, 0, "a") == 8
    assign(belief, 0, 2, 10.0, a=5)
    assign(belief, 0, 3, 12.0, a=3)
    assert residual_demand(belief, 0, "a") == 0
    assign(belief, 1, 3, 10.0, a=4)
    assert residual_demand(belief, 1, "a") == 2


def test_start_time_is_slowest_member_once_met():
    scenario = make_scenario([robot(0, a=10), robot(1, a=10)], [task(0, a=6)])
    belief = fresh_belief(scenario, 0)
    assign(belief, 0, 0, 12.0, a=3)
    assign(belief, 0, 1, 30.5, a=3)
    assert task_start_time(belief, 0) == 30.5


def test_start_time_unmet_is_infinite():
    scenario = make_scenario([robot(0, a=10)], [task(0, a=6)])
    belief = fresh_belief(scenario, 0)
    assign(belief, 0, 0, 7.0, a=5)
    assert math.isinf(task_start_time(belief, 0))
    belief.alloc_a[0][0] = 6
    assert task_start_time(belief, 0) == 7.0


def test_refresh_winners_follows_times():
    scenario = make_scenario([robot(0, a=10), robot(1, a=10)], [task(0, a=6)])
    belief = fresh_belief(scenario, 0)
    belief.times[0] = [5.0, -1.0]
    refresh_winners(belief, scenario.constants.big_n)
    assert belief.winners[0].tolist() == [True, False]


def test_compare_quality_orders_met_before_unmet():
    assert compare_quality((10.0, 0.0), (math.inf, 5.0)) == -1
    assert compare_quality((math.inf, 2.0), (math.inf, 5.0)) == -1
    assert compare_quality((math.inf, 5.0), (math.inf, 5.0)) == 0
    assert compare_quality((20.0, 0.0), (10.0, 0.0)) == 1


def test_constraints_clean_for_consistent_beliefs():
    scenario = make_scenario([robot(0, a=10), robot(1, a=10)], [task(0, a=6)])
    beliefs = [fresh_belief(scenario, k) for k in range(2)]
    for belief in beliefs:
        assign(belief, 0, 0, 5.0, a=3)
        assign(belief, 0, 1, 8.0, a=3)
    assert check_constraints(beliefs) == []


def test_constraints_flag_disagreement():
    scenario = make_scenario([robot(0, a=10), robot(1, a=10)], [task(0, a=6)])
    beliefs = [fresh_belief(scenario, k) for k in range(2)]
    for belief in beliefs:
        assign(belief, 0, 0, 5.0, a=6)
    beliefs[1].times[0][0] = 6.0
    codes = {v.code for v in check_constraints(beliefs)}
    assert "constraint.consistency" in codes


def test_constraints_flag_shortfall():
    scenario = make_scenario([robot(0, a=10)], [task(0, a=8)])
    belief = fresh_belief(scenario, 0)
    assign(belief, 0, 0, 5.0, a=7)
    codes = [v.code for v in check_constraints([belief])]
    assert codes == ["constraint.demand"]


def test_constraints_flag_overcommitted_payload():
    scenario = make_scenario([robot(0, a=10)], [task(0, a=8), task(1, a=8)])
    belief = fresh_belief(scenario, 0)
    assign(belief, 0, 0, 5.0, a=8)
    assign(belief, 1, 0, 9.0, a=8)
    assert "constraint.payload" in {v.code for v in check_constraints([belief])}


def test_copy_is_independent(case1):
    belief = fresh_belief(case1, 1)
    clone = belief.copy()
    clone.times[0][1] = 3.0
    clone.path.append(0)
    assert belief.times[0][1] == -1
    assert belief.path == []
    assert not belief.same_state(clone)
    assert np.array_equal(belief.capacity_a, clone.capacity_a)
