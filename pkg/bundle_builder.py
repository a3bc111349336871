"""
Payload bundle construction
Each robot repeatedly bids on the task with the lowest marginal path cost,
inserting it into its path and assigning payload to the coalition
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import structlog

from belief import (
    INF,
    UNASSIGNED,
    AgentBelief,
    compare_quality,
    combined_residual,
    is_met,
    refresh_winners,
    remaining,
    remaining_a,
    remaining_b,
    residual_demand,
    task_start_time,
)
from config import config
from payload_alloc import allocate_average
from scenario import Scenario, distance

logger = structlog.get_logger(__name__)

JOIN = "join"
REPLACE = "replace"
SINGLE = "single"


@dataclass(frozen=True)
class Candidate:
    """Row task q would hold if this robot took it (its own time still open)"""

    task: int
    branch: str
    winners: np.ndarray = field(compare=False)
    times: np.ndarray = field(compare=False)
    alloc_a: np.ndarray = field(compare=False)
    alloc_b: np.ndarray = field(compare=False)
    met: bool = False
    evicted: Optional[int] = None


@dataclass(frozen=True)
class Bid:
    task: int
    cost: float
    insert_pos: int
    arrival: float
    candidate: Optional[Candidate] = field(default=None, compare=False)

    def eligible(self, big_c: float) -> bool:
        # a robot standing on the task bids zero
        return self.candidate is not None and self.cost < big_c


def ineligible(j: int, big_c: float) -> Bid:
    return Bid(task=j, cost=big_c, insert_pos=-1, arrival=INF)


# ---------------------------------------------------------------------------
# Path timing
# ---------------------------------------------------------------------------

def _walk(belief: AgentBelief, scenario: Scenario, path: Sequence[int],
          candidate: Optional[Candidate] = None,
          provisional: bool = True) -> Tuple[List[float], List[float]]:
    """
    Own arrival and coalition start for every task along a path

    A task whose coalition is still short has no start. When planning
    (provisional) the robot carries on from its own arrival there; otherwise
    the rest of the path is unreachable.
    """
    me = belief.self_id
    robot = scenario.robots[me]
    position = robot.position
    done = 0.0
    arrivals, starts = [], []
    for j in path:
        task = scenario.tasks[j]
        if math.isinf(done):
            arrival = INF
        else:
            arrival = max(done, task.announce_time) + distance(position, task.position) / robot.velocity

        if candidate is not None and j == candidate.task:
            winners, times, met = candidate.winners, candidate.times, candidate.met
        else:
            winners, times, met = belief.winners[j], belief.times[j], is_met(belief, j)

        if met:
            others = [times[k] for k in np.flatnonzero(winners) if k != me]
            start = max(others + [arrival])
        else:
            start = INF

        arrivals.append(arrival)
        starts.append(start)
        position = task.position
        if math.isfinite(start):
            done = start + task.duration
        elif provisional and math.isfinite(arrival):
            done = arrival + task.duration
        else:
            done = INF
    return arrivals, starts


def arrival_time(belief: AgentBelief, scenario: Scenario, path: Sequence[int], k: int) -> float:
    """Own arrival at the k-th task of a path; infinite behind a coalition that is still short"""
    arrivals, _ = _walk(belief, scenario, path[: k + 1], provisional=False)
    return arrivals[k]


def _settled(start: float, arrival: float) -> float:
    """Time a task is charged at: its coalition start once met, else own arrival"""
    return start if math.isfinite(start) else arrival


def path_cost(belief: AgentBelief, scenario: Scenario, path: Sequence[int]) -> float:
    """Weighted residual demand plus the time each task can begin, summed over a path"""
    c = scenario.constants
    arrivals, starts = _walk(belief, scenario, path)
    total = 0.0
    for j, arrival, start in zip(path, arrivals, starts):
        total += combined_residual(belief, j, c.alpha, c.beta) + _settled(start, arrival)
    return total


def _candidate_residual(belief: AgentBelief, candidate: Candidate, alpha: float, beta: float) -> float:
    tol = config.TOLERANCE
    total = 0.0
    for kind, weight, alloc in (("a", alpha, candidate.alloc_a), ("b", beta, candidate.alloc_b)):
        shortfall = belief.demand(kind)[candidate.task] - alloc.sum()
        if shortfall > tol:
            total += weight * shortfall
    return total


# ---------------------------------------------------------------------------
# Candidate rows
# ---------------------------------------------------------------------------

def _available(belief: AgentBelief, j: int, members: np.ndarray, kind: str) -> np.ndarray:
    """Payload each member may give to task j; other robots never give more than they already do"""
    me = belief.self_id
    avail = np.where(members, belief.alloc(kind)[j], 0.0)
    avail[me] = remaining(belief, me, kind)
    if kind == "a":
        avail[me] += belief.alloc_a[j][me]
    return avail


def _coalition_row(belief: AgentBelief, j: int, members: np.ndarray, branch: str,
                   evicted: Optional[int] = None) -> Candidate:
    alloc_a = allocate_average(members, _available(belief, j, members, "a"), belief.demand_a[j])
    alloc_b = allocate_average(members, _available(belief, j, members, "b"), belief.demand_b[j])
    times = np.where(members, belief.times[j], UNASSIGNED)
    met = (alloc_a.sum() + config.TOLERANCE >= belief.demand_a[j]
           and alloc_b.sum() + config.TOLERANCE >= belief.demand_b[j])
    return Candidate(task=j, branch=branch, winners=members, times=times,
                     alloc_a=alloc_a, alloc_b=alloc_b, met=met, evicted=evicted)


def _cbpa_candidate(belief: AgentBelief, j: int) -> Optional[Candidate]:
    me = belief.self_id
    if belief.winners[j][me]:
        return None

    if not is_met(belief, j):
        useful = any(residual_demand(belief, j, kind) > 0 and remaining(belief, me, kind) > config.TOLERANCE
                     for kind in ("a", "b"))
        if not useful:
            return None
        members = belief.winners[j].copy()
        members[me] = True
        return _coalition_row(belief, j, members, JOIN)

    coalition = np.flatnonzero(belief.winners[j])
    if len(coalition) == 0:
        return None
    slowest = max(coalition, key=lambda k: (belief.times[j][k], -k))
    members = belief.winners[j].copy()
    members[slowest] = False
    members[me] = True
    candidate = _coalition_row(belief, j, members, REPLACE, evicted=int(slowest))
    return candidate if candidate.met else None


def _trim(belief: AgentBelief, candidate: Candidate, arrival: float) -> Candidate:
    """Leave out members arriving after this robot once their payload is no longer needed"""
    tol = config.TOLERANCE
    me = belief.self_id
    j = candidate.task
    row = candidate
    others = sorted((int(k) for k in np.flatnonzero(candidate.winners) if k != me),
                    key=lambda k: (belief.times[j][k], -k), reverse=True)
    for k in others:
        if not belief.times[j][k] > arrival + tol:
            break
        members = row.winners.copy()
        members[k] = False
        trial = _coalition_row(belief, j, members, JOIN)
        if (trial.alloc_a.sum() + tol < row.alloc_a.sum()
                or trial.alloc_b.sum() + tol < row.alloc_b.sum()):
            break
        row = trial
    return row


def _single_candidate(belief: AgentBelief, j: int) -> Optional[Candidate]:
    me = belief.self_id
    if belief.winners[j][me]:
        return None
    members = np.zeros(belief.n_robots, dtype=bool)
    members[me] = True
    alloc_a = np.zeros(belief.n_robots)
    alloc_b = np.zeros(belief.n_robots)
    alloc_a[me] = min(belief.demand_a[j], remaining_a(belief, me))
    alloc_b[me] = min(belief.demand_b[j], remaining_b(belief, me))
    if alloc_a[me] + alloc_b[me] <= config.TOLERANCE:
        return None
    met = (alloc_a[me] + config.TOLERANCE >= belief.demand_a[j]
           and alloc_b[me] + config.TOLERANCE >= belief.demand_b[j])
    return Candidate(task=j, branch=SINGLE, winners=members,
                     times=np.full(belief.n_robots, UNASSIGNED),
                     alloc_a=alloc_a, alloc_b=alloc_b, met=met,
                     evicted=None)


def _candidate(belief: AgentBelief, j: int, policy: str) -> Optional[Candidate]:
    if not belief.known[j] or belief.locked[j]:
        return None
    if policy == "single":
        return _single_candidate(belief, j)
    return _cbpa_candidate(belief, j)


# ---------------------------------------------------------------------------
# Bidding
# ---------------------------------------------------------------------------

def _first_open_position(belief: AgentBelief) -> int:
    locked = [n for n, j in enumerate(belief.path) if belief.locked[j]]
    return locked[-1] + 1 if locked else 0


def _delta(new: float, old: float) -> float:
    if math.isinf(new) and math.isinf(old):
        return 0.0
    return new - old


def marginal_cost(belief: AgentBelief, scenario: Scenario, j: int, policy: str = "cbpa",
                  baseline: Optional[Tuple[List[float], List[float]]] = None) -> Bid:
    """Cheapest insertion of task j into this robot's path, or an ineligible bid"""
    c = scenario.constants
    tol = config.TOLERANCE
    candidate = _candidate(belief, j, policy)
    if candidate is None:
        return ineligible(j, c.big_c)

    me = belief.self_id
    path = belief.path
    old_arrivals, old_starts = baseline or _walk(belief, scenario, path)
    current_start = task_start_time(belief, j)
    current_quality = (current_start, combined_residual(belief, j, c.alpha, c.beta))
    residual_term = _candidate_residual(belief, candidate, c.alpha, c.beta)

    best: Optional[Bid] = None
    for n in range(_first_open_position(belief), len(path) + 1):
        trial = list(path[:n]) + [j] + list(path[n:])

        # the candidate's own start depends on where this robot arrives
        arrivals, starts = _walk(belief, scenario, trial, candidate)
        arrival = arrivals[n]
        if math.isinf(arrival):
            continue

        row = candidate
        if candidate.branch == JOIN:
            row = _trim(belief, candidate, arrival)
            if row is not candidate:
                arrivals, starts = _walk(belief, scenario, trial, row)

        start = starts[n]
        if candidate.branch == REPLACE:
            if not arrival < candidate_slowest_time(belief, candidate) - tol:
                continue
            if not start < current_start - tol:
                continue
        elif candidate.branch == SINGLE:
            new_quality = (start, residual_term)
            if compare_quality(new_quality, current_quality) >= 0:
                continue

        feasible = True
        row_residual = residual_term if row is candidate else _candidate_residual(belief, row, c.alpha, c.beta)
        cost = row_residual + _settled(start, arrival)
        for offset, task in enumerate(path):
            position = offset if offset < n else offset + 1
            if is_met(belief, task) and starts[position] > old_starts[offset] + tol:
                feasible = False
                break
            cost += _delta(_settled(starts[position], arrivals[position]),
                           _settled(old_starts[offset], old_arrivals[offset]))
        if not feasible or math.isinf(cost) or math.isnan(cost):
            continue

        if best is None or cost < best.cost - tol:
            best = Bid(task=j, cost=cost, insert_pos=n, arrival=arrival, candidate=row)

    if best is None or best.cost >= c.big_c:
        return ineligible(j, c.big_c)
    return best


def candidate_slowest_time(belief: AgentBelief, candidate: Candidate) -> float:
    return float(belief.times[candidate.task][candidate.evicted])


def _apply_bid(belief: AgentBelief, bid: Bid, now: int) -> None:
    candidate = bid.candidate
    me = belief.self_id
    j = bid.task
    times = candidate.times.copy()
    times[me] = bid.arrival
    belief.times[j] = times
    belief.winners[j] = candidate.winners.copy()
    belief.alloc_a[j] = candidate.alloc_a
    belief.alloc_b[j] = candidate.alloc_b
    belief.timestamps[j] = now
    belief.path.insert(bid.insert_pos, j)
    belief.bundle.append(j)


def _sync_own_times(belief: AgentBelief, scenario: Scenario, now: int) -> List[int]:
    """Rewrite this robot's arrivals along its path; never delays a met task"""
    tol = config.TOLERANCE
    me = belief.self_id
    arrivals, _ = _walk(belief, scenario, belief.path)
    touched = []
    for j, arrival in zip(belief.path, arrivals):
        if belief.locked[j] or math.isinf(arrival):
            continue
        if abs(arrival - belief.times[j][me]) <= tol:
            continue
        if is_met(belief, j):
            others = [belief.times[j][k] for k in belief.coalition(j) if k != me]
            if max(others + [arrival]) > task_start_time(belief, j) + tol:
                continue
        belief.times[j][me] = arrival
        belief.timestamps[j] = now
        touched.append(j)
    return touched


def _top_up(belief: AgentBelief, now: int) -> List[int]:
    """Put payload left after bidding into short tasks this robot already serves"""
    tol = config.TOLERANCE
    touched = []
    for j in belief.path:
        if belief.locked[j] or is_met(belief, j):
            continue
        row = _coalition_row(belief, j, belief.winners[j].copy(), JOIN)
        gain_a = row.alloc_a.sum() - belief.alloc_a[j].sum()
        gain_b = row.alloc_b.sum() - belief.alloc_b[j].sum()
        if gain_a < -tol or gain_b < -tol or max(gain_a, gain_b) <= tol:
            continue
        belief.alloc_a[j] = row.alloc_a
        belief.alloc_b[j] = row.alloc_b
        belief.timestamps[j] = now
        touched.append(j)
    return touched


def refresh(belief: AgentBelief, scenario: Scenario, now: int) -> None:
    """Bring winners, bundle and path in line with the time matrix"""
    me = belief.self_id
    refresh_winners(belief, scenario.constants.big_n)

    for j in list(belief.bundle):
        if not belief.winners[j][me] or not belief.known[j]:
            belief.drop_task(j)

    missing = [j for j in np.flatnonzero(belief.winners[:, me]) if int(j) not in belief.path]
    for j in sorted((int(j) for j in missing), key=lambda j: (belief.times[j][me], j)):
        position = len(belief.path)
        for n, held in enumerate(belief.path):
            if belief.times[held][me] > belief.times[j][me]:
                position = n
                break
        belief.path.insert(position, j)
        belief.bundle.append(j)

    _sync_own_times(belief, scenario, now)


def build_bundle(belief: AgentBelief, scenario: Scenario, now: int, policy: str = "cbpa") -> AgentBelief:
    """Bid on tasks until nothing affordable or useful is left"""
    c = scenario.constants
    tol = config.TOLERANCE
    me = belief.self_id
    refresh(belief, scenario, now)

    added = []
    while remaining_a(belief, me) > tol or remaining_b(belief, me) > tol:
        baseline = _walk(belief, scenario, belief.path)
        best: Optional[Bid] = None
        for j in range(belief.n_tasks):
            bid = marginal_cost(belief, scenario, j, policy, baseline)
            if not bid.eligible(c.big_c):
                continue
            if best is None or bid.cost < best.cost - tol:
                best = bid
        if best is None:
            break

        _apply_bid(belief, best, now)
        _sync_own_times(belief, scenario, now)
        added.append((best.task, best.candidate.branch))

    topped = _top_up(belief, now)
    if topped:
        _sync_own_times(belief, scenario, now)
    if added or topped:
        logger.debug("bundle_built", robot=me, round=now, added=added, topped=topped,
                     path=list(belief.path))
    return belief
