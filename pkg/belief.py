"""
Local allocation view of one robot
Winners, arrival times, payload assignments, timestamps, bundle and path,
plus the quantities derived from them
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence

import numpy as np

from config import config
from scenario import Scenario, Violation

INF = math.inf
UNASSIGNED = -1.0
KINDS = ("a", "b")


@dataclass
class AgentBelief:
    self_id: int
    winners: np.ndarray
    times: np.ndarray
    alloc_a: np.ndarray
    alloc_b: np.ndarray
    timestamps: np.ndarray
    capacity_a: np.ndarray
    capacity_b: np.ndarray
    demand_a: np.ndarray
    demand_b: np.ndarray
    known: np.ndarray
    locked: np.ndarray
    bundle: List[int] = field(default_factory=list)
    path: List[int] = field(default_factory=list)

    @property
    def n_tasks(self) -> int:
        return self.times.shape[0]

    @property
    def n_robots(self) -> int:
        return self.times.shape[1]

    def alloc(self, kind: str) -> np.ndarray:
        return self.alloc_a if kind == "a" else self.alloc_b

    def demand(self, kind: str) -> np.ndarray:
        return self.demand_a if kind == "a" else self.demand_b

    def coalition(self, j: int) -> List[int]:
        return [int(k) for k in np.flatnonzero(self.winners[j])]

    def copy(self) -> "AgentBelief":
        return AgentBelief(
            self_id=self.self_id,
            winners=self.winners.copy(),
            times=self.times.copy(),
            alloc_a=self.alloc_a.copy(),
            alloc_b=self.alloc_b.copy(),
            timestamps=self.timestamps.copy(),
            capacity_a=self.capacity_a,
            capacity_b=self.capacity_b,
            demand_a=self.demand_a,
            demand_b=self.demand_b,
            known=self.known.copy(),
            locked=self.locked.copy(),
            bundle=list(self.bundle),
            path=list(self.path),
        )

    def same_state(self, other: "AgentBelief") -> bool:
        return (
            self.bundle == other.bundle
            and self.path == other.path
            and np.array_equal(self.times, other.times)
            and np.array_equal(self.alloc_a, other.alloc_a)
            and np.array_equal(self.alloc_b, other.alloc_b)
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.known, other.known)
            and np.array_equal(self.locked, other.locked)
        )

    def clear_row(self, j: int) -> None:
        self.winners[j] = False
        self.times[j] = UNASSIGNED
        self.alloc_a[j] = 0.0
        self.alloc_b[j] = 0.0

    def drop_task(self, j: int) -> None:
        if j in self.bundle:
            self.bundle.remove(j)
        if j in self.path:
            self.path.remove(j)


def fresh_belief(scenario: Scenario, self_id: int, known: Optional[Sequence[bool]] = None) -> AgentBelief:
    """Empty belief: every time -1, every assignment 0"""
    n_t, n_r = scenario.n_tasks, scenario.n_robots
    if known is None:
        known = [not task.dynamic for task in scenario.tasks]
    return AgentBelief(
        self_id=self_id,
        winners=np.zeros((n_t, n_r), dtype=bool),
        times=np.full((n_t, n_r), UNASSIGNED),
        alloc_a=np.zeros((n_t, n_r)),
        alloc_b=np.zeros((n_t, n_r)),
        timestamps=np.zeros(n_t, dtype=np.int64),
        capacity_a=np.array([r.payload_a for r in scenario.robots], dtype=float),
        capacity_b=np.array([r.payload_b for r in scenario.robots], dtype=float),
        demand_a=np.array([t.demand_a for t in scenario.tasks], dtype=float),
        demand_b=np.array([t.demand_b for t in scenario.tasks], dtype=float),
        known=np.array(known, dtype=bool),
        locked=np.zeros(n_t, dtype=bool),
    )


def refresh_winners(belief: AgentBelief, big_n: float) -> None:
    """A robot wins a task exactly when its recorded time is a real arrival"""
    belief.winners = (belief.times >= 0) & (belief.times < big_n)


def remaining_a(belief: AgentBelief, k: int) -> float:
    """Consumable payload left on robot k"""
    return max(0.0, float(belief.capacity_a[k] - belief.alloc_a[:, k].sum()))


def remaining_b(belief: AgentBelief, k: int) -> float:
    """Non-consumable payload: always the carried amount"""
    return float(belief.capacity_b[k])


def remaining(belief: AgentBelief, k: int, kind: str) -> float:
    return remaining_a(belief, k) if kind == "a" else remaining_b(belief, k)


def residual_demand(belief: AgentBelief, j: int, kind: str) -> float:
    """Demand of task j not yet covered by the coalition, floored at zero"""
    shortfall = belief.demand(kind)[j] - belief.alloc(kind)[j].sum()
    return float(shortfall) if shortfall > config.TOLERANCE else 0.0


def combined_residual(belief: AgentBelief, j: int, alpha: float, beta: float) -> float:
    return alpha * residual_demand(belief, j, "a") + beta * residual_demand(belief, j, "b")


def is_met(belief: AgentBelief, j: int) -> bool:
    return residual_demand(belief, j, "a") == 0.0 and residual_demand(belief, j, "b") == 0.0


def task_start_time(belief: AgentBelief, j: int) -> float:
    """Arrival of the last coalition member once demands are met, else infinity"""
    if not is_met(belief, j) or not belief.winners[j].any():
        return INF
    return float(belief.times[j][belief.winners[j]].max())


def quality(belief: AgentBelief, j: int, alpha: float, beta: float):
    """Ordering key of a task row: met rows first, then earlier start, then smaller residual"""
    return task_start_time(belief, j), combined_residual(belief, j, alpha, beta)


def compare_quality(first, second, tol: float = None) -> int:
    """-1 when first is strictly better, 1 when strictly worse, 0 on a tie"""
    tol = config.TOLERANCE if tol is None else tol
    for x, y in zip(first, second):
        if x == y or (math.isfinite(x) and math.isfinite(y) and abs(x - y) <= tol):
            continue
        return -1 if x < y else 1
    return 0


def start_times(belief: AgentBelief) -> np.ndarray:
    return np.array([task_start_time(belief, j) for j in range(belief.n_tasks)])


def residuals(belief: AgentBelief, alpha: float, beta: float) -> np.ndarray:
    return np.array([combined_residual(belief, j, alpha, beta) for j in range(belief.n_tasks)])


def check_constraints(beliefs: Sequence[AgentBelief], tasks: Optional[Iterable[int]] = None,
                      tol: float = 1e-6) -> List[Violation]:
    """Demand coverage, payload capacity and cross-agent consistency checks"""
    found: List[Violation] = []
    if not beliefs:
        return found

    reference = beliefs[0]
    task_ids = range(reference.n_tasks) if tasks is None else tasks
    for belief in beliefs:
        for j in task_ids:
            if not belief.known[j]:
                continue
            for kind in KINDS:
                supplied = belief.alloc(kind)[j].sum()
                if supplied + tol < belief.demand(kind)[j]:
                    found.append(Violation(
                        "constraint.demand",
                        f"agent {belief.self_id}: task {j} gets {supplied:g} of "
                        f"{belief.demand(kind)[j]:g} payload {kind.upper()}",
                    ))
        for k in range(belief.n_robots):
            committed = belief.alloc_a[:, k].sum()
            if committed > belief.capacity_a[k] + tol:
                found.append(Violation(
                    "constraint.payload",
                    f"agent {belief.self_id}: robot {k} commits {committed:g} of "
                    f"{belief.capacity_a[k]:g} payload A",
                ))
            over_b = belief.alloc_b[:, k] > belief.capacity_b[k] + tol
            if over_b.any():
                found.append(Violation(
                    "constraint.payload",
                    f"agent {belief.self_id}: robot {k} exceeds its payload B on a task",
                ))

    for other in beliefs[1:]:
        same = (np.allclose(reference.times, other.times, atol=tol, rtol=0)
                and np.allclose(reference.alloc_a, other.alloc_a, atol=tol, rtol=0)
                and np.allclose(reference.alloc_b, other.alloc_b, atol=tol, rtol=0))
        if not same:
            found.append(Violation(
                "constraint.consistency",
                f"agents {reference.self_id} and {other.self_id} disagree on the assignment",
            ))
    return found
