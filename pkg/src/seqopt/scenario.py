"""World, robot, task and sequence types plus scenario file I/O.

Scenario files are YAML documents with the top-level keys ``workspace``,
``robots``, ``tasks`` and ``precedence``. Cells are 0-based ``[x, y]`` pairs.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterator, Optional, Union

import yaml

Cell = tuple[int, int]

GOTO = "goto"
PICKPLACE = "pickplace"


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or violates an invariant."""


def chebyshev(a: Cell, b: Cell) -> int:
    return max(abs(a[0] - b[0]), abs(a[1] - b[1]))


@dataclass(frozen=True)
class Workspace:
    width: int
    height: int
    obstacles: frozenset = frozenset()

    def in_bounds(self, cell: Cell) -> bool:
        return 0 <= cell[0] < self.width and 0 <= cell[1] < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.obstacles

    @cached_property
    def free_cells(self) -> frozenset:
        return frozenset(
            (x, y) for x in range(self.width) for y in range(self.height) if (x, y) not in self.obstacles
        )


@dataclass(frozen=True)
class RobotSpec:
    id: int
    start: Cell
    resting: Cell
    radius: int = 0
    max_speed: int = 1

    def overlaps(self, cell: Cell, other: "RobotSpec", other_cell: Cell) -> bool:
        """True if this robot at ``cell`` intersects ``other`` at ``other_cell``."""
        return chebyshev(cell, other_cell) <= self.radius + other.radius


@dataclass(frozen=True)
class TaskSpec:
    """A go-to-pose task (one action cell) or a pick-and-place task (two)."""

    id: int
    kind: str
    cells: tuple[Cell, ...]
    capable: frozenset
    dwell: int = 0

    @property
    def final_cell(self) -> Cell:
        return self.cells[-1]

    @classmethod
    def goto(cls, id: int, goal: Cell, capable, dwell: int = 0) -> "TaskSpec":
        return cls(id, GOTO, (tuple(goal),), frozenset(capable), dwell)

    @classmethod
    def pickplace(cls, id: int, pick: Cell, place: Cell, capable, dwell: int = 0) -> "TaskSpec":
        return cls(id, PICKPLACE, (tuple(pick), tuple(place)), frozenset(capable), dwell)


@dataclass(frozen=True)
class Scenario:
    workspace: Workspace
    robots: tuple[RobotSpec, ...]
    tasks: tuple[TaskSpec, ...]
    precedence: frozenset = frozenset()
    name: str = "scenario"

    def __post_init__(self):
        _check_scenario(self)

    @property
    def num_robots(self) -> int:
        return len(self.robots)

    @property
    def num_tasks(self) -> int:
        return len(self.tasks)

    def robot(self, robot_id: int) -> RobotSpec:
        return self.robots[robot_id - 1]

    def task(self, task_id: int) -> TaskSpec:
        return self.tasks[task_id - 1]

    def predecessors(self, task_id: int) -> set[int]:
        return {a for a, b in self.precedence if b == task_id}


@dataclass(frozen=True)
class SerializedSequence:
    """Total order over (task_id, robot_id) pairs.

    The position of an entry fixes its finishing-time rank; the robot field
    fixes the assignment. ``per_robot`` recovers the per-robot task lists.
    """

    entries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple((int(t), int(r)) for t, r in self.entries))

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.entries)

    def __getitem__(self, j):
        return self.entries[j]

    @property
    def tasks(self) -> tuple[int, ...]:
        return tuple(t for t, _ in self.entries)

    @property
    def robots(self) -> tuple[int, ...]:
        return tuple(r for _, r in self.entries)

    def per_robot(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {}
        for task, robot in self.entries:
            out.setdefault(robot, []).append(task)
        return out

    def position_in_robot(self, j: int) -> int:
        """Index of entry ``j`` within its robot's own task list."""
        robot = self.entries[j][1]
        return sum(1 for _, r in self.entries[:j] if r == robot)

    def with_entries(self, entries) -> "SerializedSequence":
        return SerializedSequence(tuple(entries))


def validate_sequence(seq: SerializedSequence, scenario: Scenario) -> Optional[str]:
    """Return ``None`` if ``seq`` is a valid serialization, else a violation message."""
    n = scenario.num_tasks
    if len(seq) != n:
        return f"length {len(seq)} != number of tasks {n}"
    seen: dict[int, int] = {}
    for j, (task_id, robot_id) in enumerate(seq):
        if not 1 <= task_id <= n:
            return f"unknown task {task_id} at position {j}"
        if task_id in seen:
            return f"task repeated: {task_id} at positions {seen[task_id]} and {j}"
        seen[task_id] = j
        if robot_id not in scenario.task(task_id).capable:
            return f"capability: robot {robot_id} cannot do task {task_id}"
    for before, after in scenario.precedence:
        if seen[before] > seen[after]:
            return f"precedence: task {before} must come before task {after}"
    return None


def _check_scenario(sc: Scenario) -> None:
    ws = sc.workspace
    if ws.width < 1 or ws.height < 1:
        raise ScenarioError("workspace: width and height must be >= 1")
    for cell in ws.obstacles:
        if not ws.in_bounds(cell):
            raise ScenarioError(f"workspace: obstacle {list(cell)} out of bounds")
    if not sc.robots:
        raise ScenarioError("robots: at least one robot required")
    for i, rb in enumerate(sc.robots, start=1):
        if rb.id != i:
            raise ScenarioError(f"robots: ids must be contiguous 1..R, got {rb.id} at position {i}")
        if rb.radius < 0:
            raise ScenarioError(f"robot {rb.id}: radius must be >= 0")
        if rb.max_speed < 1:
            raise ScenarioError(f"robot {rb.id}: max_speed must be a positive integer")
        for what, cell in (("start", rb.start), ("resting", rb.resting)):
            if not ws.is_free(cell):
                raise ScenarioError(f"robot {rb.id}: {what} cell {list(cell)} is outside bounds or an obstacle")
    for a in sc.robots:
        for b in sc.robots:
            if a.id >= b.id:
                continue
            if a.overlaps(a.start, b, b.start):
                raise ScenarioError(f"robots {a.id} and {b.id}: start footprints overlap")
            if a.overlaps(a.resting, b, b.resting):
                raise ScenarioError(f"robots {a.id} and {b.id}: resting footprints overlap")
    ids = {rb.id for rb in sc.robots}
    for i, task in enumerate(sc.tasks, start=1):
        if task.id != i:
            raise ScenarioError(f"tasks: ids must be contiguous 1..N, got {task.id} at position {i}")
        if task.kind not in (GOTO, PICKPLACE):
            raise ScenarioError(f"task {task.id}: unknown kind {task.kind!r}")
        if len(task.cells) != (1 if task.kind == GOTO else 2):
            raise ScenarioError(f"task {task.id}: wrong number of action cells for kind {task.kind}")
        for cell in task.cells:
            if not ws.is_free(cell):
                raise ScenarioError(f"task {task.id}: cell {list(cell)} is outside bounds or an obstacle")
        if not task.capable:
            raise ScenarioError(f"task {task.id}: capable robot set is empty")
        if not task.capable <= ids:
            raise ScenarioError(f"task {task.id}: capable robots {sorted(task.capable - ids)} do not exist")
        if task.dwell < 0:
            raise ScenarioError(f"task {task.id}: dwell must be >= 0")
    n = len(sc.tasks)
    for a, b in sc.precedence:
        if not (1 <= a <= n and 1 <= b <= n) or a == b:
            raise ScenarioError(f"precedence: invalid edge {[a, b]}")
    _check_acyclic(n, sc.precedence)


def _check_acyclic(n: int, edges) -> None:
    indeg = {t: 0 for t in range(1, n + 1)}
    succ: dict[int, list[int]] = {t: [] for t in range(1, n + 1)}
    for a, b in edges:
        succ[a].append(b)
        indeg[b] += 1
    ready = [t for t, d in indeg.items() if d == 0]
    seen = 0
    while ready:
        t = ready.pop()
        seen += 1
        for b in succ[t]:
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    if seen != n:
        raise ScenarioError("precedence: graph contains a cycle")


# --- file I/O ---------------------------------------------------------------


def _cell(value, where: str) -> Cell:
    if not (isinstance(value, (list, tuple)) and len(value) == 2 and all(isinstance(v, int) for v in value)):
        raise ScenarioError(f"{where}: expected an integer pair, got {value!r}")
    return (value[0], value[1])


def _require(mapping, key: str, where: str):
    if not isinstance(mapping, dict):
        raise ScenarioError(f"{where}: expected a mapping, got {type(mapping).__name__}")
    if key not in mapping:
        raise ScenarioError(f"{where}: missing key '{key}'")
    return mapping[key]


def scenario_from_dict(data, name: str = "scenario") -> Scenario:
    if not isinstance(data, dict):
        raise ScenarioError("top level: expected a mapping")
    ws_data = _require(data, "workspace", "top level")
    obstacles = frozenset(
        _cell(c, f"workspace.obstacles[{i}]") for i, c in enumerate(ws_data.get("obstacles") or [])
    )
    workspace = Workspace(int(_require(ws_data, "width", "workspace")), int(_require(ws_data, "height", "workspace")), obstacles)

    robots = []
    for i, rd in enumerate(_require(data, "robots", "top level") or []):
        where = f"robots[{i}]"
        robots.append(
            RobotSpec(
                id=int(_require(rd, "id", where)),
                start=_cell(_require(rd, "start", where), f"{where}.start"),
                resting=_cell(_require(rd, "resting", where), f"{where}.resting"),
                radius=int(rd.get("radius", 0)),
                max_speed=int(rd.get("max_speed", 1)),
            )
        )

    tasks = []
    for i, td in enumerate(_require(data, "tasks", "top level") or []):
        where = f"tasks[{i}]"
        kind = _require(td, "kind", where)
        tid = int(_require(td, "id", where))
        capable = _require(td, "capable", where)
        if not isinstance(capable, list):
            raise ScenarioError(f"{where}.capable: expected a list of robot ids")
        dwell = int(td.get("dwell", 0))
        if kind == GOTO:
            tasks.append(TaskSpec.goto(tid, _cell(_require(td, "goal", where), f"{where}.goal"), capable, dwell))
        elif kind == PICKPLACE:
            tasks.append(
                TaskSpec.pickplace(
                    tid,
                    _cell(_require(td, "pick", where), f"{where}.pick"),
                    _cell(_require(td, "place", where), f"{where}.place"),
                    capable,
                    dwell,
                )
            )
        else:
            raise ScenarioError(f"{where}.kind: expected '{GOTO}' or '{PICKPLACE}', got {kind!r}")

    precedence = frozenset(_cell(e, f"precedence[{i}]") for i, e in enumerate(data.get("precedence") or []))
    return Scenario(workspace, tuple(robots), tuple(tasks), precedence, name=name)


def scenario_to_dict(sc: Scenario) -> dict:
    tasks = []
    for t in sc.tasks:
        entry = {"id": t.id, "kind": t.kind}
        if t.kind == GOTO:
            entry["goal"] = list(t.cells[0])
        else:
            entry["pick"] = list(t.cells[0])
            entry["place"] = list(t.cells[1])
        entry["capable"] = sorted(t.capable)
        entry["dwell"] = t.dwell
        tasks.append(entry)
    return {
        "workspace": {
            "width": sc.workspace.width,
            "height": sc.workspace.height,
            "obstacles": [list(c) for c in sorted(sc.workspace.obstacles)],
        },
        "robots": [
            {"id": r.id, "start": list(r.start), "resting": list(r.resting), "radius": r.radius, "max_speed": r.max_speed}
            for r in sc.robots
        ],
        "tasks": tasks,
        "precedence": [list(e) for e in sorted(sc.precedence)],
    }


def dump_yaml(data) -> str:
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None, width=100)


def load_scenario(path: Union[str, Path]) -> Scenario:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ScenarioError(f"{path}: parse error{loc}: {getattr(exc, 'problem', exc)}") from exc
    try:
        return scenario_from_dict(data, name=path.stem)
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ScenarioError(f"{path}: {exc}") from exc


def save_scenario(sc: Scenario, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_yaml(scenario_to_dict(sc)))


def load_sequence(path: Union[str, Path]) -> SerializedSequence:
    data = yaml.safe_load(Path(path).read_text())
    entries = data.get("sequence") if isinstance(data, dict) else data
    if not isinstance(entries, list):
        raise ScenarioError(f"{path}: expected a 'sequence' list of [task, robot] pairs")
    return SerializedSequence(tuple(_cell(e, f"sequence[{i}]") for i, e in enumerate(entries)))


def save_sequence(seq: SerializedSequence, path: Union[str, Path]) -> None:
    Path(path).write_text(dump_yaml({"sequence": [list(e) for e in seq]}))


BUNDLED_DIR = Path(__file__).with_name("scenarios")


def bundled_scenarios() -> list[str]:
    return sorted(p.name for p in BUNDLED_DIR.glob("*.scn"))


def resolve_scenario_path(name: Union[str, Path]) -> Path:
    """Accept a filesystem path or the name of a bundled scenario."""
    path = Path(name)
    if path.exists():
        return path
    for candidate in (BUNDLED_DIR / path.name, BUNDLED_DIR / f"{path.name}.scn"):
        if candidate.exists():
            return candidate
    raise ScenarioError(f"scenario not found: {name}")
