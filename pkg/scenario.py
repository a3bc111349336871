"""
Scenario model
Robots, tasks, network topology and algorithm constants, with validation,
JSON persistence and the Case 1 / Case 2 presets
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from config import config
from errors import ScenarioError, ScenarioParseError

logger = structlog.get_logger(__name__)

SCHEMA_VERSION = 1

Point = Tuple[float, float]


@dataclass(frozen=True)
class Robot:
    id: int
    position: Point
    velocity: float = config.DEFAULT_VELOCITY
    payload_a: float = 0.0
    payload_b: float = 0.0


@dataclass(frozen=True)
class Task:
    id: int
    position: Point
    duration: float = config.DEFAULT_DURATION
    demand_a: float = 0.0
    demand_b: float = 0.0
    announce_time: float = 0.0

    @property
    def dynamic(self) -> bool:
        return self.announce_time > 0


@dataclass(frozen=True)
class Topology:
    """Undirected communication graph as a boolean adjacency matrix"""

    adjacency: Tuple[Tuple[bool, ...], ...]
    kind: str = field(default="explicit", compare=False)

    @property
    def size(self) -> int:
        return len(self.adjacency)

    def neighbors(self, i: int) -> List[int]:
        return [k for k, linked in enumerate(self.adjacency[i]) if linked]

    def as_array(self) -> np.ndarray:
        return np.array(self.adjacency, dtype=bool).reshape(self.size, self.size)

    def edges(self) -> List[Tuple[int, int]]:
        return [(i, k) for i in range(self.size) for k in range(i + 1, self.size)
                if self.adjacency[i][k]]

    @classmethod
    def from_edges(cls, n: int, edges, kind: str = "explicit") -> "Topology":
        matrix = [[False] * n for _ in range(n)]
        for i, k in edges:
            matrix[i][k] = True
            matrix[k][i] = True
        return cls(tuple(tuple(row) for row in matrix), kind)

    @classmethod
    def complete(cls, n: int) -> "Topology":
        return cls.from_edges(n, [(i, k) for i in range(n) for k in range(i + 1, n)], "complete")

    @classmethod
    def line(cls, n: int) -> "Topology":
        return cls.from_edges(n, [(i, i + 1) for i in range(n - 1)], "line")

    @classmethod
    def ring(cls, n: int) -> "Topology":
        edges = [(i, i + 1) for i in range(n - 1)]
        if n > 2:
            edges.append((0, n - 1))
        return cls.from_edges(n, edges, "ring")


@dataclass(frozen=True)
class AlgoConstants:
    alpha: float = config.ALPHA
    beta: float = config.BETA
    big_n: float = config.BIG_N
    big_c: float = config.BIG_C
    lam: float = 0.0
    max_rounds: int = 1
    static_gain: float = 100.0


@dataclass(frozen=True)
class Scenario:
    robots: Tuple[Robot, ...]
    tasks: Tuple[Task, ...]
    topology: Topology
    constants: AlgoConstants
    seed: int = config.DEFAULT_SEED
    name: str = "custom"

    @property
    def n_robots(self) -> int:
        return len(self.robots)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    def travel_time(self, robot: int, a: Point, b: Point) -> float:
        return distance(a, b) / self.robots[robot].velocity

    def with_topology(self, topology: Topology) -> "Scenario":
        return replace(self, topology=topology)

    def with_max_rounds(self, max_rounds: int) -> "Scenario":
        return replace(self, constants=replace(self.constants, max_rounds=max_rounds))


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def distance(a: Point, b: Point) -> float:
    return math.hypot(a[0] - b[0], a[1] - b[1])


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent, named random stream derived from one seed"""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, zlib.crc32(name.encode())])


def default_constants(n_tasks: int, n_robots: int, **overrides) -> AlgoConstants:
    values = dict(
        alpha=config.ALPHA,
        beta=config.BETA,
        big_n=config.BIG_N,
        big_c=config.BIG_C,
        max_rounds=config.max_rounds_for(n_tasks, n_robots),
    )
    values.update(overrides)
    return AlgoConstants(**values)


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------

def validate(scenario: Scenario) -> List[Violation]:
    """Return every invariant violation; empty when the scenario is well formed"""
    found: List[Violation] = []

    def add(code, message):
        found.append(Violation(code, message))

    for index, robot in enumerate(scenario.robots):
        if robot.id != index:
            add("robot.id.noncontiguous", f"robot at index {index} has id {robot.id}")
        if not robot.velocity > 0:
            add("robot.velocity.nonpositive", f"robot {robot.id} velocity {robot.velocity}")
        if robot.payload_a < 0 or robot.payload_b < 0:
            add("robot.payload.negative", f"robot {robot.id} carries a negative payload")

    for index, task in enumerate(scenario.tasks):
        if task.id != index:
            add("task.id.noncontiguous", f"task at index {index} has id {task.id}")
        if task.demand_a < 0 or task.demand_b < 0:
            add("task.demand.negative", f"task {task.id} has a negative demand")
        elif task.demand_a + task.demand_b <= 0:
            add("task.demand.zero", f"task {task.id} demands nothing")
        if task.duration < 0:
            add("task.duration.negative", f"task {task.id} duration {task.duration}")
        if task.announce_time < 0:
            add("task.announce.negative", f"task {task.id} announce time {task.announce_time}")

    adjacency = scenario.topology.adjacency
    n = scenario.n_robots
    if len(adjacency) != n or any(len(row) != n for row in adjacency):
        add("topology.dimension", f"adjacency is not {n}x{n}")
    else:
        for i in range(n):
            if adjacency[i][i]:
                add("topology.diagonal", f"robot {i} is linked to itself")
            for k in range(i + 1, n):
                if adjacency[i][k] != adjacency[k][i]:
                    add("topology.asymmetric", f"link {i}-{k} is one-way")

    c = scenario.constants
    for name in ("alpha", "beta", "big_n", "big_c"):
        if not getattr(c, name) > 0:
            add(f"constants.{name}.nonpositive", f"{name} must be positive")
    if c.lam < 0:
        add("constants.lambda.negative", "lambda must be non-negative")
    if c.max_rounds < 1:
        add("constants.max_rounds.nonpositive", "max_rounds must be at least 1")
    if c.static_gain <= 0:
        add("constants.static_gain.nonpositive", "static gain must be positive")

    if not any(v.code.startswith(("robot.", "task.")) for v in found) and n:
        time_bound = _time_bound(scenario)
        cost_bound = (c.alpha * sum(t.demand_a for t in scenario.tasks)
                      + c.beta * sum(t.demand_b for t in scenario.tasks)
                      + scenario.n_tasks * time_bound)
        if c.big_n <= time_bound:
            add("constants.big_n.too_small", f"big_n {c.big_n} does not exceed time bound {time_bound:.1f}")
        if c.big_c <= cost_bound:
            add("constants.big_c.too_small", f"big_c {c.big_c} does not exceed cost bound {cost_bound:.1f}")

    return found


def _time_bound(scenario: Scenario) -> float:
    """Upper bound on any arrival time a robot can reach"""
    points = [r.position for r in scenario.robots] + [t.position for t in scenario.tasks]
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    diagonal = math.hypot(max(xs) - min(xs), max(ys) - min(ys))
    slowest = min(r.velocity for r in scenario.robots)
    legs = scenario.n_tasks + 1
    return (max((t.announce_time for t in scenario.tasks), default=0.0)
            + legs * diagonal / slowest
            + sum(t.duration for t in scenario.tasks))


def ensure_valid(scenario: Scenario) -> Scenario:
    violations = validate(scenario)
    if violations:
        logger.error("scenario_invalid", codes=[v.code for v in violations])
        raise ScenarioError(violations)
    return scenario


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------

CASE1_ROBOTS = [
    # position, payload A (strike), payload B (reconnaissance)
    ((150, 130), 0, 3),
    ((150, 330), 0, 3),
    ((150, 700), 30, 3),
    ((150, 970), 30, 0),
    ((150, 1270), 25, 0),
]

CASE1_TASKS = [
    # position, demand A, demand B
    ((850, 350), 8, 1),
    ((1450, 550), 6, 2),
    ((2100, 430), 8, 3),
    ((740, 820), 7, 3),
    ((1120, 740), 8, 3),
    ((1710, 970), 6, 2),
    ((2360, 680), 9, 2),
    ((730, 1260), 10, 3),
    ((1440, 1020), 8, 2),
    ((1950, 1280), 9, 2),
]


def _case1_robots() -> Tuple[Robot, ...]:
    return tuple(
        Robot(id=i, position=(float(p[0]), float(p[1])), payload_a=float(a), payload_b=float(b))
        for i, (p, a, b) in enumerate(CASE1_ROBOTS)
    )


def case1_scenario(seed: int = config.DEFAULT_SEED) -> Scenario:
    robots = _case1_robots()
    tasks = tuple(
        Task(id=j, position=(float(p[0]), float(p[1])), demand_a=float(a), demand_b=float(b))
        for j, (p, a, b) in enumerate(CASE1_TASKS)
    )
    return Scenario(
        robots=robots,
        tasks=tasks,
        topology=Topology.complete(len(robots)),
        constants=default_constants(len(tasks), len(robots)),
        seed=seed,
        name="case1",
    )


def case1_dynamic_scenario(seed: int = config.DEFAULT_SEED, n_injected: int = 3) -> Scenario:
    """Tasks 1-8 known up front, the rest injected while the plan executes"""
    robots = _case1_robots()
    tasks = [
        Task(id=j, position=(float(p[0]), float(p[1])), demand_a=float(a), demand_b=float(b))
        for j, (p, a, b) in enumerate(CASE1_TASKS[:8])
    ]

    placement = rng_stream(seed, "placement")
    injection = rng_stream(seed, "injection")
    announce = np.sort(injection.uniform(30.0, 300.0, size=n_injected))
    for offset in range(n_injected):
        x = placement.uniform(0.0, config.AREA_WIDTH)
        y = placement.uniform(0.0, config.AREA_HEIGHT)
        tasks.append(Task(
            id=len(tasks),
            position=(round(float(x), 3), round(float(y), 3)),
            demand_a=float(injection.integers(1, 11)),
            demand_b=float(injection.integers(1, 4)),
            announce_time=round(float(announce[offset]), 3),
        ))

    return Scenario(
        robots=robots,
        tasks=tuple(tasks),
        topology=Topology.complete(len(robots)),
        constants=default_constants(len(tasks), len(robots)),
        seed=seed,
        name="case1-dynamic",
    )


def case2_scenario(n_tasks: int, seed: int = config.DEFAULT_SEED, n_robots: int = 5) -> Scenario:
    """Strike-only fleet against a growing number of identical strike tasks"""
    if n_tasks < 1:
        raise ValueError("case 2 needs at least one task")

    placement = rng_stream(seed, "placement")
    robots = tuple(
        Robot(
            id=i,
            position=(round(float(placement.uniform(0, config.AREA_WIDTH)), 3),
                      round(float(placement.uniform(0, config.AREA_HEIGHT)), 3)),
            payload_a=config.CASE2_PAYLOAD,
        )
        for i in range(n_robots)
    )
    tasks = tuple(
        Task(
            id=j,
            position=(round(float(placement.uniform(0, config.AREA_WIDTH)), 3),
                      round(float(placement.uniform(0, config.AREA_HEIGHT)), 3)),
            demand_a=config.CASE2_DEMAND,
        )
        for j in range(n_tasks)
    )
    return Scenario(
        robots=robots,
        tasks=tasks,
        topology=Topology.complete(n_robots),
        constants=default_constants(n_tasks, n_robots, lam=config.CASE2_LAMBDA,
                                    static_gain=config.CASE2_STATIC_GAIN),
        seed=seed,
        name="case2",
    )


def random_scenario(seed: int, n_robots: int, n_tasks: int, topology: Optional[Topology] = None) -> Scenario:
    """Mixed-payload scenario used by the property suites"""
    rng = rng_stream(seed, "placement")
    robots = []
    for i in range(n_robots):
        kind = rng.integers(0, 3)
        robots.append(Robot(
            id=i,
            position=(round(float(rng.uniform(0, config.AREA_WIDTH)), 3),
                      round(float(rng.uniform(0, config.AREA_HEIGHT)), 3)),
            velocity=float(rng.choice([3.0, 5.0, 8.0])),
            payload_a=float(rng.integers(5, 31)) if kind != 1 else 0.0,
            payload_b=float(rng.integers(1, 4)) if kind != 0 else 0.0,
        ))
    tasks = []
    for j in range(n_tasks):
        demand_a = float(rng.integers(0, 11))
        demand_b = float(rng.integers(0, 4))
        if demand_a + demand_b == 0:
            demand_a = 1.0
        tasks.append(Task(
            id=j,
            position=(round(float(rng.uniform(0, config.AREA_WIDTH)), 3),
                      round(float(rng.uniform(0, config.AREA_HEIGHT)), 3)),
            duration=float(rng.integers(0, 21)),
            demand_a=demand_a,
            demand_b=demand_b,
        ))
    return Scenario(
        robots=tuple(robots),
        tasks=tuple(tasks),
        topology=topology or Topology.complete(n_robots),
        constants=default_constants(n_tasks, n_robots),
        seed=seed,
        name="random",
    )


PRESETS = {
    "case1": lambda seed: case1_scenario(seed),
    "case1-dynamic": lambda seed: case1_dynamic_scenario(seed),
    "case2": lambda seed: case2_scenario(15, seed),
}


# ---------------------------------------------------------------------------
# Persistence
# ---------------------------------------------------------------------------

_ROBOT_FIELDS = {f.name for f in fields(Robot)}
_TASK_FIELDS = {f.name for f in fields(Task)}
_CONSTANT_FIELDS = {f.name for f in fields(AlgoConstants)}
_TOP_FIELDS = {"schema", "name", "seed", "robots", "tasks", "topology", "constants"}


def save_scenario(scenario: Scenario) -> bytes:
    """Serialize a scenario as a versioned JSON document"""
    topology = scenario.topology
    if topology.kind in ("complete", "line", "ring"):
        topology_doc = topology.kind
    else:
        topology_doc = {"edges": [list(edge) for edge in topology.edges()]}

    document = {
        "schema": SCHEMA_VERSION,
        "name": scenario.name,
        "seed": scenario.seed,
        "robots": [
            {"id": r.id, "position": list(r.position), "velocity": r.velocity,
             "payload_a": r.payload_a, "payload_b": r.payload_b}
            for r in scenario.robots
        ],
        "tasks": [
            {"id": t.id, "position": list(t.position), "duration": t.duration,
             "demand_a": t.demand_a, "demand_b": t.demand_b, "announce_time": t.announce_time}
            for t in scenario.tasks
        ],
        "topology": topology_doc,
        "constants": {f.name: getattr(scenario.constants, f.name) for f in fields(AlgoConstants)},
    }
    return (json.dumps(document, indent=2) + "\n").encode("utf-8")


def load_scenario(data: bytes) -> Scenario:
    """Parse and validate a scenario document"""
    try:
        document = json.loads(data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data)
    except UnicodeDecodeError as e:
        raise ScenarioParseError("scenario is not UTF-8", f"byte {e.start}") from e
    except json.JSONDecodeError as e:
        raise ScenarioParseError(e.msg, f"line {e.lineno}, column {e.colno}") from e

    if not isinstance(document, dict):
        raise ScenarioParseError("scenario document must be an object", "$")
    _reject_unknown(document, _TOP_FIELDS, "$")
    if document.get("schema") != SCHEMA_VERSION:
        raise ScenarioParseError(f"unsupported schema {document.get('schema')!r}", "$.schema")

    robots = tuple(
        Robot(**_point_fields(_record(item, _ROBOT_FIELDS, f"$.robots[{i}]"), f"$.robots[{i}]"))
        for i, item in enumerate(_required(document, "robots", list, "$"))
    )
    tasks = tuple(
        Task(**_point_fields(_record(item, _TASK_FIELDS, f"$.tasks[{j}]"), f"$.tasks[{j}]"))
        for j, item in enumerate(_required(document, "tasks", list, "$"))
    )
    constant_values = _record(document.get("constants", {}), _CONSTANT_FIELDS, "$.constants", required=())
    topology = _parse_topology(_required(document, "topology", (str, dict), "$"), len(robots))
    constants = default_constants(len(tasks), len(robots), **constant_values)

    scenario = Scenario(
        robots=robots,
        tasks=tasks,
        topology=topology,
        constants=constants,
        seed=int(document.get("seed", config.DEFAULT_SEED)),
        name=str(document.get("name", "custom")),
    )
    return ensure_valid(scenario)


def _reject_unknown(record: Dict, allowed, locus: str) -> None:
    unknown = sorted(set(record) - set(allowed))
    if unknown:
        raise ScenarioParseError(f"unknown field {unknown[0]!r}", f"{locus}.{unknown[0]}")


def _required(record: Dict, key: str, kind, locus: str):
    if key not in record:
        raise ScenarioParseError(f"missing field {key!r}", f"{locus}.{key}")
    value = record[key]
    if not isinstance(value, kind):
        raise ScenarioParseError(f"field {key!r} has the wrong type", f"{locus}.{key}")
    return value


def _record(item, allowed, locus: str, required: Sequence[str] = ("id", "position")) -> Dict:
    if not isinstance(item, dict):
        raise ScenarioParseError("expected an object", locus)
    _reject_unknown(item, allowed, locus)
    for key in required:
        if key not in item:
            raise ScenarioParseError(f"missing field {key!r}", f"{locus}.{key}")
    for key, value in item.items():
        if key != "position" and (not isinstance(value, (int, float)) or isinstance(value, bool)):
            raise ScenarioParseError(f"field {key!r} must be a number", f"{locus}.{key}")
    return dict(item)


def _point_fields(record: Dict, locus: str) -> Dict:
    position = record["position"]
    if (not isinstance(position, list) or len(position) != 2
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in position)):
        raise ScenarioParseError("position must be [x, y]", f"{locus}.position")
    record["position"] = (float(position[0]), float(position[1]))
    record["id"] = int(record["id"])
    return record


def _parse_topology(value, n: int) -> Topology:
    if isinstance(value, str):
        builders = {"complete": Topology.complete, "line": Topology.line, "ring": Topology.ring}
        if value not in builders:
            raise ScenarioParseError(f"unknown topology {value!r}", "$.topology")
        return builders[value](n)

    _reject_unknown(value, {"edges"}, "$.topology")
    edges = _required(value, "edges", list, "$.topology")
    parsed = []
    for index, edge in enumerate(edges):
        if (not isinstance(edge, list) or len(edge) != 2
                or not all(isinstance(v, int) and 0 <= v < n for v in edge)):
            raise ScenarioParseError("edge must be a pair of robot ids", f"$.topology.edges[{index}]")
        parsed.append((edge[0], edge[1]))
    return Topology.from_edges(n, parsed)
