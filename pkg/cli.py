#!/usr/bin/env python3
"""
Command-line entry point for the payload-aware task allocator
"""
from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
import structlog

from baselines import run_auction, run_cbba_single
from config import config, configure_logging
from engine import AllocationResult, make_topology, run_dynamic
from errors import CbpaError
from metrics import GainParams, compare, report
from reports import (
    render_gains_svg,
    render_paths_svg,
    render_schedule_svg,
    write_comparison_csv,
    write_paths_csv,
    write_result_csv,
    write_sweep_csv,
)
from scenario import PRESETS, Scenario, case2_scenario, load_scenario, rng_stream, validate

logger = structlog.get_logger(__name__)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2

ALLOCATORS: Dict[str, Callable[[Scenario], AllocationResult]] = {
    "cbpa": run_dynamic,
    "aoa": run_auction,
    "cbba": run_cbba_single,
}


class InputError(CbpaError):
    """Bad command-line input"""


def parse_range(text: str) -> Tuple[int, int]:
    """Parse 'lo..hi' with 1 <= lo <= hi <= 100"""
    parts = text.split("..")
    if len(parts) != 2 or not all(p.strip().isdigit() for p in parts):
        raise InputError(f"task range must look like LO..HI, got {text!r}")
    lo, hi = int(parts[0]), int(parts[1])
    if not 1 <= lo <= hi <= 100:
        raise InputError(f"task range must lie within 1..100, got {text!r}")
    return lo, hi


def load_input(args) -> Scenario:
    if args.scenario:
        try:
            scenario = load_scenario(Path(args.scenario).read_bytes())
        except OSError as e:
            logger.error("scenario_unreadable", path=args.scenario, error=str(e))
            raise InputError(f"cannot read scenario file {args.scenario}: {e}") from e
    else:
        if args.preset not in PRESETS:
            raise InputError(f"unknown preset {args.preset!r}; choose from {', '.join(PRESETS)}")
        scenario = PRESETS[args.preset](args.seed)

    if args.topology:
        scenario = scenario.with_topology(make_topology(args.topology, scenario.n_robots, args.seed))
    if args.max_rounds is not None:
        if args.max_rounds < 1:
            raise InputError("--max-rounds must be at least 1")
        scenario = scenario.with_max_rounds(args.max_rounds)
    return scenario


def cmd_run(args) -> int:
    scenario = load_input(args)
    result = ALLOCATORS[args.algo](scenario)
    params = GainParams.for_scenario(scenario)
    out = Path(args.out)

    write_result_csv(result, scenario, params, out / "result.csv")
    write_paths_csv(result, out / "paths.csv")
    render_schedule_svg(result, scenario, out / "schedule.svg")
    render_paths_svg(result, scenario, out / "paths.svg")

    metrics = report(result, scenario, params)
    print(f"{args.algo}: {metrics.iterations} rounds, average start time "
          f"{metrics.avg_start_time:.2f}, total gain {metrics.total_gain:.2f}")
    if metrics.unassigned_tasks:
        print(f"⚠️  Unassigned tasks: {metrics.unassigned_tasks}")
    if not result.converged:
        print(f"❌ {args.algo} did not converge within {scenario.constants.max_rounds} rounds")
        return EXIT_NOT_CONVERGED
    return EXIT_OK


def cmd_compare(args) -> int:
    scenario = load_input(args)
    labels = ["cbpa", "aoa", "cbba"] if args.algo == "all" else ["cbpa", args.algo]
    results = [(label, ALLOCATORS[label](scenario)) for label in dict.fromkeys(labels)]
    frame = compare(results, scenario, GainParams.for_scenario(scenario))
    write_comparison_csv(frame, Path(args.out) / "comparison.csv")
    print(frame.to_string(index=False))
    return EXIT_OK if all(result.converged for _, result in results) else EXIT_NOT_CONVERGED


def _sweep_cell(key: Tuple[int, int, int]) -> Tuple[int, int, float, float, bool]:
    n_tasks, repeat, seed = key
    instance_seed = int(rng_stream(seed, f"sweep/{n_tasks}/{repeat}").integers(0, 2**31 - 1))
    scenario = case2_scenario(n_tasks, instance_seed)
    params = GainParams.for_scenario(scenario)
    cbpa = run_dynamic(scenario)
    cbba = run_cbba_single(scenario)
    return (n_tasks, repeat, report(cbpa, scenario, params).total_gain,
            report(cbba, scenario, params).total_gain, cbpa.converged and cbba.converged)


def sweep_frame(lo: int, hi: int, repeats: int, seed: int, workers: Optional[int] = None) -> Tuple[pd.DataFrame, bool]:
    keys = [(n, r, seed) for n in range(lo, hi + 1) for r in range(repeats)]
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_sweep_cell, keys))
    else:
        cells = [_sweep_cell(key) for key in keys]

    cells.sort(key=lambda cell: (cell[0], cell[1]))
    rows: List[dict] = []
    for n in range(lo, hi + 1):
        cbpa = np.array([c[2] for c in cells if c[0] == n])
        cbba = np.array([c[3] for c in cells if c[0] == n])
        rows.append({
            "n_tasks": n,
            "mean_gain_cbpa": float(cbpa.mean()),
            "mean_gain_cbba": float(cbba.mean()),
            "std_gain_cbpa": float(cbpa.std()),
            "std_gain_cbba": float(cbba.std()),
        })
    columns = ["n_tasks", "mean_gain_cbpa", "mean_gain_cbba", "std_gain_cbpa", "std_gain_cbba"]
    return pd.DataFrame(rows, columns=columns), all(c[4] for c in cells)


def cmd_sweep(args) -> int:
    lo, hi = parse_range(args.sweep)
    if args.repeats < 1:
        raise InputError("--repeats must be at least 1")

    frame, converged = sweep_frame(lo, hi, args.repeats, args.seed, args.workers)
    out = Path(args.out)
    write_sweep_csv(frame, out / "sweep.csv")
    render_gains_svg(frame, out / "gains.svg")
    print(frame.to_string(index=False))
    return EXIT_OK if converged else EXIT_NOT_CONVERGED


def cmd_validate(args) -> int:
    scenario = load_input(args)
    violations = validate(scenario)
    if violations:
        for violation in violations:
            print(f"❌ {violation.code}: {violation.message}")
        return EXIT_INPUT
    print(f"✅ Scenario {scenario.name!r} is valid: {scenario.n_robots} robots, {scenario.n_tasks} tasks")
    return EXIT_OK


COMMANDS = {
    "run": cmd_run,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cbpa",
        description="Payload-aware consensus task allocation for heterogeneous robot fleets",
    )
    parser.add_argument("command", choices=list(COMMANDS), help="Command to execute")
    parser.add_argument("--preset", default="case1", help=f"Built-in scenario ({', '.join(PRESETS)})")
    parser.add_argument("--scenario", help="Scenario JSON file (overrides --preset)")
    parser.add_argument("--algo", default="cbpa", choices=list(ALLOCATORS) + ["all"],
                        help="Allocator; for compare, the baseline to set against cbpa")
    parser.add_argument("--seed", type=int, default=config.DEFAULT_SEED, help="Root random seed")
    parser.add_argument("--out", default=config.OUTPUT_DIR, help="Output directory")
    parser.add_argument("--max-rounds", type=int, default=None, help="Round limit override")
    parser.add_argument("--sweep", default="{}..{}".format(*config.CASE2_TASK_RANGE),
                        help="Task-count range LO..HI for the sweep command")
    parser.add_argument("--repeats", type=int, default=config.CASE2_REPEATS,
                        help="Instances per task count for the sweep command")
    parser.add_argument("--workers", type=int, default=None, help="Parallel sweep workers")
    parser.add_argument("--topology", choices=["complete", "line", "ring", "random"],
                        help="Replace the scenario's communication graph")
    parser.add_argument("--log-level", default=None, help="Logging level (default from LOG_LEVEL)")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INPUT if e.code else EXIT_OK

    configure_logging(args.log_level)
    if args.algo == "all" and args.command != "compare":
        print("❌ --algo all is only valid for compare")
        return EXIT_INPUT

    try:
        return COMMANDS[args.command](args)
    except (CbpaError, OSError) as e:
        logger.error("command_failed", command=args.command, error=str(e))
        print(f"❌ {e}")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
