"""
CSV and SVG output for allocation results
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import pandas as pd  # noqa: E402
import structlog  # noqa: E402

from belief import residual_demand  # noqa: E402
from config import config  # noqa: E402
from metrics import GainParams, combined_gain_fraction, per_task_gains  # noqa: E402
from scenario import Scenario  # noqa: E402

logger = structlog.get_logger(__name__)

# fixed ids and no timestamp so repeated renders are identical
matplotlib.rcParams["svg.hashsalt"] = "cbpa"
matplotlib.rcParams["svg.fonttype"] = "none"
SVG_METADATA = {"Date": None}


def _write_frame(frame: pd.DataFrame, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, float_format=config.CSV_FLOAT_FORMAT,
                 encoding="utf-8", lineterminator="\n")
    logger.info("report_written", path=str(path), rows=len(frame))
    return path


def result_frame(result, scenario: Scenario, params: GainParams) -> pd.DataFrame:
    belief = result.reference
    gains = per_task_gains(result, scenario, params)
    coverage = combined_gain_fraction(result, scenario, scenario.constants.alpha, scenario.constants.beta)
    rows = []
    for task in scenario.tasks:
        j = task.id
        rows.append({
            "task": j,
            "winners": " ".join(str(k) for k in belief.coalition(j)),
            "alloc_a": float(belief.alloc_a[j].sum()),
            "alloc_b": float(belief.alloc_b[j].sum()),
            "residual_a": residual_demand(belief, j, "a"),
            "residual_b": residual_demand(belief, j, "b"),
            "start_time": float(result.start_times[j]),
            "gain": float(gains[j]),
            "locked": bool(belief.locked[j]),
            # both payload kinds weighted alpha:beta; not part of the strike gain
            "combined_coverage_extension": float(coverage[j]),
        })
    return pd.DataFrame(rows, columns=["task", "winners", "alloc_a", "alloc_b", "residual_a",
                                       "residual_b", "start_time", "gain", "locked",
                                       "combined_coverage_extension"])


def paths_frame(result) -> pd.DataFrame:
    belief = result.reference
    rows = []
    for robot, path in enumerate(result.paths):
        for order, j in enumerate(path):
            rows.append({"robot": robot, "order": order, "task": j,
                         "arrival": float(belief.times[j][robot])})
    return pd.DataFrame(rows, columns=["robot", "order", "task", "arrival"])


def write_result_csv(result, scenario: Scenario, params: GainParams, path) -> Path:
    return _write_frame(result_frame(result, scenario, params), path)


def write_paths_csv(result, path) -> Path:
    return _write_frame(paths_frame(result), path)


def write_comparison_csv(frame: pd.DataFrame, path) -> Path:
    return _write_frame(frame, path)


def write_sweep_csv(frame: pd.DataFrame, path) -> Path:
    return _write_frame(frame, path)


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    logger.info("figure_written", path=str(path))
    return path


def render_schedule_svg(result, scenario: Scenario, path) -> Path:
    """Gantt chart: one lane per robot, one bar per task visit until the task ends"""
    belief = result.reference
    fig, ax = plt.subplots(figsize=(10, 1 + 0.6 * scenario.n_robots))
    cmap = plt.get_cmap("tab20")
    labelled = set()

    for robot in range(scenario.n_robots):
        for j in result.paths[robot]:
            start = float(result.start_times[j])
            arrival = float(belief.times[j][robot])
            if math.isinf(start):
                continue
            end = start + scenario.tasks[j].duration
            ax.barh(y=robot, width=max(end - arrival, 1e-6), left=arrival,
                    color=cmap(j % 20), edgecolor="black", linewidth=0.5)
            if j not in labelled:
                ax.text(arrival, robot, f"T{j}", va="center", ha="left", fontsize=7)
                labelled.add(j)

    title = f"{result.allocator} schedule"
    if result.unassigned_tasks:
        title += " (unassigned: " + ", ".join(f"T{j}" for j in result.unassigned_tasks) + ")"
    ax.set_title(title)
    ax.set_xlabel("Time (s)")
    ax.set_ylabel("Robot")
    ax.set_yticks(range(scenario.n_robots))
    ax.grid(True, axis="x", linestyle=":")
    fig.tight_layout()
    return _save(fig, path)


def render_paths_svg(result, scenario: Scenario, path) -> Path:
    """Routes from each robot's start through its path tasks"""
    fig, ax = plt.subplots(figsize=(9, 6))
    cmap = plt.get_cmap("tab10")

    for task in scenario.tasks:
        marker = "s" if task.dynamic else "o"
        ax.scatter(*task.position, marker=marker, color="grey", zorder=2)
        ax.annotate(f"T{task.id}", task.position, textcoords="offset points", xytext=(4, 4), fontsize=7)

    for robot in scenario.robots:
        points = [robot.position] + [scenario.tasks[j].position for j in result.paths[robot.id]]
        xs, ys = zip(*points)
        color = cmap(robot.id % 10)
        ax.plot(xs, ys, color=color, linewidth=1.2, label=f"R{robot.id}", zorder=1)
        ax.scatter(*robot.position, marker="^", color=color, zorder=3)

    ax.set_xlim(0, config.AREA_WIDTH)
    ax.set_ylim(0, config.AREA_HEIGHT)
    ax.set_aspect("equal")
    ax.set_title(f"{result.allocator} routes")
    ax.legend(loc="upper right", fontsize=7)
    fig.tight_layout()
    return _save(fig, path)


def render_gains_svg(frame: pd.DataFrame, path, labels: Sequence[str] = ("cbpa", "cbba")) -> Path:
    """Mean total gain per task count, one line per allocator with a std band"""
    fig, ax = plt.subplots(figsize=(8, 5))
    for label in labels:
        mean = frame[f"mean_gain_{label}"]
        std = frame[f"std_gain_{label}"]
        ax.plot(frame["n_tasks"], mean, marker="o", label=label.upper())
        ax.fill_between(frame["n_tasks"], mean - std, mean + std, alpha=0.2)
    ax.set_xlabel("Number of tasks")
    ax.set_ylabel("Total task gain")
    ax.grid(True, linestyle=":")
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)
