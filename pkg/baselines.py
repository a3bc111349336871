"""
Reference allocators used for comparison
The auction awards one (task, robot) pair per round from a shared table; the
single-robot variant is the distributed engine with singleton coalitions
"""
from __future__ import annotations

from typing import List, Optional, Tuple

import structlog

from belief import AgentBelief, fresh_belief, remaining_a, remaining_b
from bundle_builder import Bid, _apply_bid, _sync_own_times, _walk, marginal_cost, refresh
from config import config
from engine import AllocationResult, Simulation, result_from_beliefs
from scenario import Scenario, ensure_valid

logger = structlog.get_logger(__name__)


def _broadcast(source: AgentBelief, beliefs: List[AgentBelief]) -> None:
    for other in beliefs:
        if other is source:
            continue
        other.winners[...] = source.winners
        other.times[...] = source.times
        other.alloc_a[...] = source.alloc_a
        other.alloc_b[...] = source.alloc_b
        other.timestamps[...] = source.timestamps
        other.known[...] = source.known


def _best_bid(belief: AgentBelief, scenario: Scenario) -> Optional[Bid]:
    tol = config.TOLERANCE
    me = belief.self_id
    if remaining_a(belief, me) <= tol and remaining_b(belief, me) <= tol:
        return None

    baseline = _walk(belief, scenario, belief.path)
    best = None
    for j in range(belief.n_tasks):
        bid = marginal_cost(belief, scenario, j, "cbpa", baseline)
        if bid.eligible(scenario.constants.big_c) and (best is None or bid.cost < best.cost - tol):
            best = bid
    return best


def run_auction(scenario: Scenario) -> AllocationResult:
    """One task per round, awarded to the robot with the globally lowest bid"""
    scenario = ensure_valid(scenario)
    tol = config.TOLERANCE
    beliefs = [fresh_belief(scenario, i) for i in range(scenario.n_robots)]
    pending = sorted((t for t in scenario.tasks if t.dynamic), key=lambda t: (t.announce_time, t.id))
    max_rounds = scenario.constants.max_rounds

    awards = 0
    converged = False
    while awards < max_rounds:
        now = awards + 1
        winner: Optional[Tuple[AgentBelief, Bid]] = None
        for belief in beliefs:
            refresh(belief, scenario, now)
            _broadcast(belief, beliefs)
            bid = _best_bid(belief, scenario)
            if bid is None:
                continue
            # strict improvement only: ties stay with the lower robot id
            if winner is None or bid.cost < winner[1].cost - tol:
                winner = (belief, bid)

        if winner is None:
            if pending:
                announce = pending[0].announce_time
                while pending and pending[0].announce_time <= announce:
                    task = pending.pop(0)
                    for belief in beliefs:
                        belief.known[task.id] = True
                    logger.info("task_injected", allocator="aoa", task=task.id, round=now)
                continue
            converged = True
            break

        belief, bid = winner
        _apply_bid(belief, bid, now)
        _sync_own_times(belief, scenario, now)
        _broadcast(belief, beliefs)
        awards += 1
        logger.debug("auction_award", round=now, robot=belief.self_id, task=bid.task,
                     branch=bid.candidate.branch, cost=bid.cost)

    for belief in beliefs:
        refresh(belief, scenario, awards + 1)
        _broadcast(belief, beliefs)

    result = result_from_beliefs(beliefs, scenario, awards, converged, "aoa")
    logger.info("auction_finished", rounds=awards, converged=converged,
                unassigned=result.unassigned_tasks)
    return result


def run_cbba_single(scenario: Scenario, workers: Optional[int] = None) -> AllocationResult:
    """Distributed rounds where every task is won by one robot at most"""
    return Simulation(scenario, "single", workers=workers, allocator="cbba").run()
