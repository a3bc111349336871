"""
Evaluation quantities: average task start time, per-task and total gains
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from belief import residual_demand
from errors import PreconditionError
from scenario import Scenario


@dataclass(frozen=True)
class GainParams:
    static_gain: float = 100.0
    lam: float = 0.0

    def __post_init__(self):
        if not self.static_gain > 0:
            raise PreconditionError(f"static gain must be positive, got {self.static_gain}")
        if self.lam < 0:
            raise PreconditionError(f"decay rate must be non-negative, got {self.lam}")

    @classmethod
    def for_scenario(cls, scenario: Scenario) -> "GainParams":
        return cls(static_gain=scenario.constants.static_gain, lam=scenario.constants.lam)


@dataclass
class MetricsReport:
    allocator: str
    avg_start_time: float
    per_task_gain: np.ndarray
    total_gain: float
    iterations: int
    unassigned_tasks: List[int] = field(default_factory=list)
    per_task_mean_start_time: float = 0.0
    converged: bool = True


def task_gain(demand: float, residual: float, start_time: float, params: GainParams) -> float:
    """Static gain scaled by demand coverage, decaying with the start time"""
    if not demand > 0:
        raise PreconditionError(f"demand must be positive, got {demand}")
    if math.isinf(start_time):
        return 0.0
    residual = min(max(residual, 0.0), demand)
    coverage = (demand - residual) / demand
    return params.static_gain * coverage * math.exp(-params.lam * start_time)


def _finite(start_times: Sequence[float]) -> Tuple[List[float], List[int]]:
    finite, unassigned = [], []
    for j, start in enumerate(start_times):
        if math.isinf(start):
            unassigned.append(j)
        else:
            finite.append(float(start))
    return finite, unassigned


def average_start_time(result, n_robots: int) -> float:
    """Sum of finite task start times over the robot count"""
    finite, _ = _finite(result.start_times)
    return sum(finite) / n_robots if finite else 0.0


def per_task_mean_start_time(result) -> float:
    """Mean over assigned tasks (not part of the published metric)"""
    finite, _ = _finite(result.start_times)
    return float(np.mean(finite)) if finite else 0.0


def per_task_gains(result, scenario: Scenario, params: GainParams) -> np.ndarray:
    """
    Gain of each task under the strike payload

    A task that never asks for payload A is scored on payload B instead, so
    transport-only tasks are not silently worth nothing.
    """
    belief = result.reference
    gains = np.zeros(scenario.n_tasks)
    for task in scenario.tasks:
        kind = "a" if task.demand_a > 0 else "b"
        demand = task.demand_a if kind == "a" else task.demand_b
        if not belief.known[task.id] or demand <= 0:
            continue
        gains[task.id] = task_gain(demand, residual_demand(belief, task.id, kind),
                                   float(result.start_times[task.id]), params)
    return gains


def combined_gain_fraction(result, scenario: Scenario, alpha: float, beta: float) -> np.ndarray:
    """Coverage of both payload kinds weighted alpha:beta (an extension of the strike-only gain)"""
    belief = result.reference
    fractions = np.zeros(scenario.n_tasks)
    for task in scenario.tasks:
        weight, covered = 0.0, 0.0
        for kind, demand, w in (("a", task.demand_a, alpha), ("b", task.demand_b, beta)):
            if demand > 0:
                weight += w
                covered += w * (demand - residual_demand(belief, task.id, kind)) / demand
        if weight > 0 and not math.isinf(result.start_times[task.id]):
            fractions[task.id] = covered / weight
    return fractions


def report(result, scenario: Scenario, params: Optional[GainParams] = None) -> MetricsReport:
    params = params or GainParams.for_scenario(scenario)
    _, unassigned = _finite(result.start_times)
    gains = per_task_gains(result, scenario, params)
    return MetricsReport(
        allocator=result.allocator,
        avg_start_time=average_start_time(result, scenario.n_robots),
        per_task_gain=gains,
        total_gain=float(gains.sum()),
        iterations=result.rounds_to_converge,
        unassigned_tasks=unassigned,
        per_task_mean_start_time=per_task_mean_start_time(result),
        converged=result.converged,
    )


def compare(results, scenario: Scenario, params: Optional[GainParams] = None) -> pd.DataFrame:
    """One row per (label, result) pair, in the order given"""
    rows = []
    for label, result in results:
        metrics = report(result, scenario, params)
        coverage = combined_gain_fraction(result, scenario, scenario.constants.alpha, scenario.constants.beta)
        rows.append({
            "allocator": label,
            "iterations": metrics.iterations,
            "converged": metrics.converged,
            "avg_start_time": metrics.avg_start_time,
            "total_gain": metrics.total_gain,
            "unassigned": " ".join(str(j) for j in metrics.unassigned_tasks),
            "per_task_mean_start_time_extra": metrics.per_task_mean_start_time,
            "combined_coverage_extension": float(coverage.sum()),
        })
    columns = ["allocator", "iterations", "converged", "avg_start_time", "total_gain",
               "unassigned", "per_task_mean_start_time_extra", "combined_coverage_extension"]
    return pd.DataFrame(rows, columns=columns)
