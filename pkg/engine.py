"""
Round-based simulation of the distributed allocator
Every round all robots build bundles, then every robot folds in the messages
of its neighbours; dynamic tasks are announced once the fleet is quiet
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import networkx as nx
import numpy as np
import structlog

from belief import AgentBelief, fresh_belief, residuals, start_times, task_start_time
from bundle_builder import build_bundle
from consensus import make_message, receive
from scenario import Scenario, Topology, ensure_valid, rng_stream

logger = structlog.get_logger(__name__)

TOPOLOGY_KINDS = ("complete", "line", "ring", "random-connected")


@dataclass(frozen=True)
class RoundTrace:
    round: int
    changed: Tuple[bool, ...]
    start_times: Tuple[Tuple[float, ...], ...]
    residuals: Tuple[Tuple[float, ...], ...]
    messages: int = 0


@dataclass
class AllocationResult:
    allocator: str
    scenario: Scenario
    beliefs: List[AgentBelief]
    start_times: np.ndarray
    paths: List[List[int]]
    rounds_to_converge: int
    converged: bool
    trace: List[RoundTrace] = field(default_factory=list)
    locked_tasks: List[int] = field(default_factory=list)
    injection_rounds: Dict[int, int] = field(default_factory=dict)

    @property
    def reference(self) -> AgentBelief:
        return self.beliefs[0]

    @property
    def iterations(self) -> int:
        return self.rounds_to_converge

    @property
    def unassigned_tasks(self) -> List[int]:
        return [j for j, start in enumerate(self.start_times) if math.isinf(start)]

    def coalition(self, j: int) -> List[int]:
        return self.reference.coalition(j)


def make_topology(kind: str, n: int, seed: int = 0) -> Topology:
    """Connected, undirected communication graph of the requested family"""
    if n < 1:
        raise ValueError("a topology needs at least one robot")
    if kind == "complete":
        return Topology.complete(n)
    if kind == "line":
        return Topology.line(n)
    if kind == "ring":
        return Topology.ring(n)
    if kind not in ("random", "random-connected"):
        raise ValueError(f"unknown topology kind {kind!r}")

    rng = rng_stream(seed, "topology")
    graph = nx.gnp_random_graph(n, 0.3, seed=int(rng.integers(0, 2**31 - 1)))
    order = [int(i) for i in rng.permutation(n)]
    for position in range(1, n):
        parent = order[int(rng.integers(0, position))]
        graph.add_edge(order[position], parent)
    return Topology.from_edges(n, sorted(tuple(sorted(edge)) for edge in graph.edges()), "random-connected")


def beliefs_agree(beliefs: Sequence[AgentBelief]) -> bool:
    first = beliefs[0]
    return all(
        np.array_equal(first.times, other.times)
        and np.array_equal(first.alloc_a, other.alloc_a)
        and np.array_equal(first.alloc_b, other.alloc_b)
        for other in beliefs[1:]
    )


class Simulation:
    """Synchronous construct-then-exchange rounds over a static network"""

    def __init__(self, scenario: Scenario, policy: str = "cbpa", lock_tasks: bool = False,
                 workers: Optional[int] = None, allocator: Optional[str] = None):
        self.scenario = ensure_valid(scenario)
        self.policy = policy
        self.lock_tasks = lock_tasks
        self.workers = workers
        self.allocator = allocator or policy
        self.beliefs = [fresh_belief(scenario, i) for i in range(scenario.n_robots)]
        self.pending = sorted((t for t in scenario.tasks if t.dynamic), key=lambda t: (t.announce_time, t.id))
        self.neighbors = [sorted(scenario.topology.neighbors(i)) for i in range(scenario.n_robots)]
        self.trace: List[RoundTrace] = []
        self.injection_rounds: Dict[int, int] = {}
        self.clock = 0.0

    def _map(self, fn, items):
        if self.workers and self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                return list(pool.map(fn, items))
        return [fn(item) for item in items]

    def _build_phase(self, now: int) -> List[bool]:
        def build(belief):
            before = belief.copy()
            build_bundle(belief, self.scenario, now, self.policy)
            return not before.same_state(belief)

        return self._map(build, self.beliefs)

    def _exchange_phase(self, now: int) -> Tuple[List[bool], int]:
        outbox = [make_message(belief) for belief in self.beliefs]

        def fold(i):
            changed = False
            for k in self.neighbors[i]:
                _, touched = receive(self.beliefs[i], outbox[k], self.scenario, now)
                changed = changed or touched
            return changed

        delivered = sum(len(n) for n in self.neighbors)
        return self._map(fold, range(len(self.beliefs))), delivered

    def _record(self, now: int, changed: Sequence[bool], delivered: int) -> None:
        c = self.scenario.constants
        self.trace.append(RoundTrace(
            round=now,
            changed=tuple(changed),
            start_times=tuple(tuple(float(x) for x in start_times(b)) for b in self.beliefs),
            residuals=tuple(tuple(float(x) for x in residuals(b, c.alpha, c.beta)) for b in self.beliefs),
            messages=delivered,
        ))

    def _inject(self, now: int) -> None:
        self.clock = max(self.clock, self.pending[0].announce_time)
        if self.lock_tasks:
            reference = self.beliefs[0]
            newly = [j for j in range(reference.n_tasks)
                     if reference.known[j] and not reference.locked[j]
                     and task_start_time(reference, j) <= self.clock]
            for belief in self.beliefs:
                belief.locked[newly] = True
            if newly:
                logger.info("tasks_locked", tasks=newly, clock=self.clock)

        while self.pending and self.pending[0].announce_time <= self.clock:
            task = self.pending.pop(0)
            for belief in self.beliefs:
                belief.known[task.id] = True
            self.injection_rounds[task.id] = now
            logger.info("task_injected", task=task.id, round=now, clock=self.clock)

    def run(self) -> AllocationResult:
        max_rounds = self.scenario.constants.max_rounds
        converged = False
        now = 0
        while now < max_rounds:
            now += 1
            built = self._build_phase(now)
            received, delivered = self._exchange_phase(now)
            changed = [b or r for b, r in zip(built, received)]
            self._record(now, changed, delivered)
            logger.debug("round_complete", round=now, changed=sum(changed))

            if any(changed) or not beliefs_agree(self.beliefs):
                continue
            if self.pending:
                self._inject(now)
                continue
            converged = True
            break

        result = result_from_beliefs(self.beliefs, self.scenario, now, converged, self.allocator,
                                     self.trace, self.injection_rounds)
        if converged:
            logger.info("allocation_converged", allocator=self.allocator, rounds=now,
                        unassigned=result.unassigned_tasks)
        else:
            logger.warning("allocation_not_converged", allocator=self.allocator, rounds=now)
        return result


def result_from_beliefs(beliefs: List[AgentBelief], scenario: Scenario, rounds: int, converged: bool,
                        allocator: str, trace: Optional[List[RoundTrace]] = None,
                        injection_rounds: Optional[Dict[int, int]] = None) -> AllocationResult:
    """Assemble a result from agent 0's view; all agents agree at convergence"""
    reference = beliefs[0]
    starts = start_times(reference)
    starts[~reference.known] = math.inf
    return AllocationResult(
        allocator=allocator,
        scenario=scenario,
        beliefs=beliefs,
        start_times=starts,
        paths=[list(b.path) for b in beliefs],
        rounds_to_converge=rounds,
        converged=converged,
        trace=list(trace or []),
        locked_tasks=[int(j) for j in np.flatnonzero(reference.locked)],
        injection_rounds=dict(injection_rounds or {}),
    )


def run(scenario: Scenario, workers: Optional[int] = None) -> AllocationResult:
    """Allocate with CBPA; announced-later tasks join once the fleet is quiet"""
    return Simulation(scenario, "cbpa", workers=workers, allocator="cbpa").run()


def run_dynamic(scenario: Scenario, workers: Optional[int] = None) -> AllocationResult:
    """As run, but tasks already started when a new one arrives stay frozen"""
    return Simulation(scenario, "cbpa", lock_tasks=True, workers=workers, allocator="cbpa").run()
