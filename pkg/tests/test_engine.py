"""
Round loop, topologies, dynamic injection and the fleet-level properties
"""
import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from belief import check_constraints, compare_quality, remaining_a
from engine import Simulation, beliefs_agree, make_topology, run, run_dynamic
from scenario import Topology, random_scenario
from tests.conftest import make_scenario, robot, task


def graph_of(topology):
    return nx.from_numpy_array(topology.as_array().astype(int))


def test_one_robot_one_task_converges(one_robot_one_task):
    result = run(one_robot_one_task)
    assert result.converged
    assert result.start_times[0] == pytest.approx(5.0)
    assert result.paths == [[0]]
    assert result.unassigned_tasks == []


def test_no_tasks_converges_immediately():
    result = run(make_scenario([robot(0, a=1), robot(1, b=1)], []))
    assert result.converged
    assert result.rounds_to_converge == 1
    assert result.paths == [[], []]


def test_case1_satisfies_every_constraint(case1):
    result = run(case1)
    assert result.converged
    assert check_constraints(result.beliefs) == []
    assert result.unassigned_tasks == []
    for k in range(case1.n_robots):
        assert remaining_a(result.reference, k) >= 0


def test_case1_runs_are_identical_with_parallel_agents(case1):
    sequential = run(case1)
    parallel = run(case1, workers=4)
    assert sequential.rounds_to_converge == parallel.rounds_to_converge
    assert np.array_equal(sequential.reference.times, parallel.reference.times)
    assert np.array_equal(sequential.reference.alloc_a, parallel.reference.alloc_a)
    assert sequential.paths == parallel.paths


def test_trace_records_every_round(case1):
    result = run(case1)
    assert [t.round for t in result.trace] == list(range(1, result.rounds_to_converge + 1))
    assert not any(result.trace[-1].changed)
    assert all(t.messages == 20 for t in result.trace)


def test_disconnected_fleet_never_agrees():
    scenario = make_scenario([robot(0, a=10), robot(1, 5, 0, a=10)], [task(0, 3, 4, a=5)],
                             topology=Topology.from_edges(2, []))
    result = run(scenario)
    assert not result.converged
    assert result.rounds_to_converge == scenario.constants.max_rounds
    assert "constraint.consistency" in {v.code for v in check_constraints(result.beliefs)}


@pytest.mark.parametrize("kind", ["complete", "line", "ring", "random-connected"])
@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_topologies_are_connected_and_symmetric(kind, n):
    topology = make_topology(kind, n, seed=11)
    matrix = topology.as_array()
    assert (matrix == matrix.T).all()
    assert not matrix.diagonal().any()
    assert nx.is_connected(graph_of(topology))


def test_topology_shapes():
    assert make_topology("complete", 3).edges() == [(0, 1), (0, 2), (1, 2)]
    assert make_topology("line", 4).edges() == [(0, 1), (1, 2), (2, 3)]
    assert nx.diameter(graph_of(make_topology("line", 4))) == 3
    assert make_topology("random", 7, seed=3) == make_topology("random-connected", 7, seed=3)
    with pytest.raises(ValueError):
        make_topology("star", 3)


def test_dynamic_without_announcements_matches_static(case1):
    static, dynamic = run(case1), run_dynamic(case1)
    assert np.array_equal(static.reference.times, dynamic.reference.times)
    assert static.rounds_to_converge == dynamic.rounds_to_converge


class LockWatcher(Simulation):
    """Remembers locked rows at the moment they freeze"""

    def __init__(self, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.frozen = {}

    def _inject(self, now):
        super()._inject(now)
        reference = self.beliefs[0]
        for j in np.flatnonzero(reference.locked):
            self.frozen.setdefault(int(j), (reference.times[j].copy(), reference.alloc_a[j].copy()))


def test_dynamic_case_assigns_every_task(case1_dynamic):
    simulation = LockWatcher(case1_dynamic, "cbpa", lock_tasks=True)
    result = simulation.run()
    assert result.converged
    assert sorted(result.injection_rounds) == [8, 9, 10]
    assert not [v for v in check_constraints(result.beliefs) if v.code != "constraint.demand"]

    fleet_a = sum(r.payload_a for r in case1_dynamic.robots)
    demand_a = sum(t.demand_a for t in case1_dynamic.tasks)
    if demand_a <= fleet_a:
        assert result.unassigned_tasks == []
    else:
        assert set(result.unassigned_tasks) <= {8, 9, 10}

    for j, (times, alloc_a) in simulation.frozen.items():
        assert np.array_equal(result.reference.times[j], times)
        assert np.array_equal(result.reference.alloc_a[j], alloc_a)
    assert sorted(simulation.frozen) == result.locked_tasks


def test_injected_task_without_payload_stays_unassigned():
    scenario = make_scenario(
        [robot(0, a=5)],
        [task(0, 3, 4, a=5), task(1, 6, 8, a=2, announce=50.0)],
    )
    result = run_dynamic(scenario)
    assert result.converged
    assert result.unassigned_tasks == [1]
    assert result.locked_tasks == [0]
    assert result.injection_rounds == {1: result.injection_rounds[1]}


def _fleet(seed, kind):
    rng = np.random.default_rng(seed)
    n_robots = int(rng.integers(2, 9))
    n_tasks = int(rng.integers(3, 16))
    return random_scenario(seed, n_robots, n_tasks, make_topology(kind, n_robots, seed))


def _coverable(scenario):
    """Tasks the fleet can finish whatever else it takes on"""
    fleet_a = sum(r.payload_a for r in scenario.robots)
    fleet_b = sum(r.payload_b for r in scenario.robots)
    strike_fits = sum(t.demand_a for t in scenario.tasks) <= fleet_a
    return {t.id for t in scenario.tasks if t.demand_b <= fleet_b and (t.demand_a == 0 or strike_fits)}


def _check_progress_never_reverses(result):
    # once a task has a start in an agent's view, (residual, start) only improves
    for agent in range(result.scenario.n_robots):
        for j in range(result.scenario.n_tasks):
            previous = None
            for trace in result.trace:
                pair = (trace.residuals[agent][j], trace.start_times[agent][j])
                if previous is not None:
                    assert compare_quality(pair, previous, tol=1e-6) <= 0, (agent, j, trace.round)
                    previous = pair
                elif math.isfinite(pair[1]):
                    previous = pair


@pytest.mark.slow
@settings(max_examples=200, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1),
       kind=st.sampled_from(["complete", "line", "ring", "random-connected"]))
def test_random_fleets_converge_to_a_feasible_shared_plan(seed, kind):
    scenario = _fleet(seed, kind)
    result = run(scenario)
    assert result.converged
    if kind == "complete":
        assert result.rounds_to_converge <= 3 * scenario.n_tasks
    assert beliefs_agree(result.beliefs)

    coverable = _coverable(scenario)
    for violation in check_constraints(result.beliefs):
        assert violation.code == "constraint.demand", violation
    assert not coverable & set(result.unassigned_tasks)
    _check_progress_never_reverses(result)


@pytest.mark.slow
@settings(max_examples=10, deadline=None)
@given(seed=st.integers(min_value=0, max_value=2**31 - 1))
def test_runs_are_reproducible(seed):
    scenario = _fleet(seed, "random-connected")
    first, second = run(scenario), run(scenario)
    assert first.rounds_to_converge == second.rounds_to_converge
    assert np.array_equal(first.reference.times, second.reference.times)
    assert np.array_equal(first.reference.alloc_b, second.reference.alloc_b)
