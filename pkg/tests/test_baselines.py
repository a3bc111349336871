"""
One-task-per-round auction and single-robot CBBA
"""
import numpy as np
import pytest

from baselines import run_auction, run_cbba_single
from belief import check_constraints
from engine import run
from metrics import report
from scenario import case2_scenario
from tests.conftest import make_scenario, robot, task


def test_auction_single_robot_matches_consensus(one_robot_one_task):
    auction, consensus = run_auction(one_robot_one_task), run(one_robot_one_task)
    assert auction.converged
    assert auction.rounds_to_converge == 1
    assert np.array_equal(auction.reference.times, consensus.reference.times)
    assert np.array_equal(auction.reference.alloc_a, consensus.reference.alloc_a)


def test_auction_without_tasks_takes_no_rounds():
    result = run_auction(make_scenario([robot(0, a=3)], []))
    assert result.converged
    assert result.iterations == 0


def test_auction_awards_one_pair_per_round():
    scenario = make_scenario([robot(0, a=5), robot(1, 10, 0, a=5)], [task(0, 5, 0, a=8)])
    result = run_auction(scenario)
    assert result.rounds_to_converge == 2
    assert result.coalition(0) == [0, 1]
    assert result.reference.alloc_a[0].tolist() == [4, 4]


def test_auction_plan_is_feasible_on_case1(case1):
    result = run_auction(case1)
    assert result.converged
    assert check_constraints(result.beliefs) == []


def test_consensus_needs_fewer_rounds_than_auction_on_case1(case1):
    consensus, auction = run(case1), run_auction(case1)
    assert consensus.converged and auction.converged
    assert consensus.iterations < auction.iterations
    assert report(consensus, case1).avg_start_time == pytest.approx(report(auction, case1).avg_start_time, rel=0.10)


def test_single_robot_cbba_coalitions_have_one_member():
    scenario = case2_scenario(12, seed=5)
    result = run_cbba_single(scenario)
    assert result.converged
    assert result.allocator == "cbba"
    assert all(len(result.coalition(j)) <= 1 for j in range(scenario.n_tasks))
    assert not [v for v in check_constraints(result.beliefs) if v.code != "constraint.demand"]


def test_single_robot_cbba_covers_demand_within_payload():
    scenario = make_scenario([robot(0, a=100)], [task(0, 30, 40, a=30)])
    result = run_cbba_single(scenario)
    assert result.reference.alloc_a[0][0] == 30
    assert result.start_times[0] == pytest.approx(50.0)


def test_single_robot_cbba_leaves_shortfall_when_overloaded():
    scenario = case2_scenario(20, seed=9)
    result = run_cbba_single(scenario)
    covered = result.reference.alloc_a.sum(axis=1)
    assert (covered >= 30 - 1e-9).sum() <= 15
    assert result.reference.alloc_a.sum() <= 500 + 1e-9


def test_no_tasks_gives_empty_single_robot_result():
    result = run_cbba_single(make_scenario([robot(0, a=3)], []))
    assert result.converged
    assert result.paths == [[]]
