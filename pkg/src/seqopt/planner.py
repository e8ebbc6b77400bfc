"""Space-time A* for a single robot among committed, time-varying obstacles.

Each other robot is a timeline of cells indexed by timestep; after its last
cell it stays there forever. A robot with radius ``r`` occupies the square of
side ``2r+1`` around its cell. Two robots conflict when their squares overlap
at the same timestep, or when they exchange cells across one timestep.
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional

from .scenario import Cell, RobotSpec, Workspace, chebyshev


class PlanningInfeasible(RuntimeError):
    """No collision-free trajectory exists within the search horizon."""


@dataclass(frozen=True)
class Trajectory:
    robot_id: int
    start_time: int
    cells: tuple[Cell, ...]

    @property
    def end_time(self) -> int:
        return self.start_time + len(self.cells) - 1

    @property
    def end_cell(self) -> Cell:
        return self.cells[-1]

    def at(self, t: int) -> Cell:
        if t <= self.start_time:
            return self.cells[0]
        return self.cells[min(t - self.start_time, len(self.cells) - 1)]

    def moved_distance(self) -> float:
        return path_length(self.cells)


def path_length(cells) -> float:
    return sum(math.dist(a, b) for a, b in zip(cells, cells[1:]))


def straight_line_lower_bound(from_cell: Cell, to_cell: Cell, max_speed: int) -> int:
    """Fewest timesteps to cover the straight-line gap at full speed."""
    return -(-chebyshev(from_cell, to_cell) // max_speed)


@dataclass(frozen=True)
class Timeline:
    """Where one other robot is at every timestep, plus its footprint radius."""

    cells: tuple[Cell, ...]
    radius: int = 0
    start_time: int = 0

    def at(self, t: int) -> Cell:
        i = t - self.start_time
        if i <= 0:
            return self.cells[0]
        return self.cells[i] if i < len(self.cells) else self.cells[-1]

    @property
    def last_event(self) -> int:
        return self.start_time + len(self.cells) - 1


class DynamicObstacleField:
    """Immutable set of robot timelines keyed by robot id."""

    def __init__(self, timelines: Optional[Mapping[int, Timeline]] = None):
        self.timelines: dict[int, Timeline] = dict(timelines or {})

    def position(self, robot_id: int, t: int) -> Cell:
        return self.timelines[robot_id].at(t)

    def without(self, robot_id: int) -> "DynamicObstacleField":
        return DynamicObstacleField({k: v for k, v in self.timelines.items() if k != robot_id})

    def last_event(self, exclude: Optional[int] = None) -> int:
        return max((tl.last_event for k, tl in self.timelines.items() if k != exclude), default=0)


class _Occupancy:
    """Per-query cache of cells and moves forbidden to a robot of a given radius."""

    def __init__(self, field: DynamicObstacleField, robot_id: int, radius: int):
        self.others = [tl for k, tl in sorted(field.timelines.items()) if k != robot_id]
        self.radius = radius
        self.last_event = max((tl.last_event for tl in self.others), default=0)
        self._blocked: dict[int, frozenset] = {}
        self._swaps: dict[int, frozenset] = {}

    def blocked(self, t: int) -> frozenset:
        if t > self.last_event:
            t = self.last_event
        cached = self._blocked.get(t)
        if cached is None:
            cells = set()
            for tl in self.others:
                x, y = tl.at(t)
                reach = self.radius + tl.radius
                for dx in range(-reach, reach + 1):
                    for dy in range(-reach, reach + 1):
                        cells.add((x + dx, y + dy))
            cached = self._blocked[t] = frozenset(cells)
        return cached

    def swaps(self, t: int) -> frozenset:
        """Moves (from, to) between t and t+1 that would exchange cells with someone."""
        if t >= self.last_event:
            return frozenset()
        cached = self._swaps.get(t)
        if cached is None:
            moves = set()
            for tl in self.others:
                a, b = tl.at(t), tl.at(t + 1)
                if a != b:
                    moves.add((b, a))
            cached = self._swaps[t] = frozenset(moves)
        return cached

    def hold_ok(self, cell: Cell, t_from: int, t_to: int) -> bool:
        """Whether ``cell`` stays free for every timestep in (t_from, t_to]."""
        for t in range(t_from + 1, min(t_to, self.last_event + 1) + 1):
            if cell in self.blocked(t):
                return False
        return True


def _offsets(max_speed: int) -> list[tuple[int, int]]:
    rng = range(-max_speed, max_speed + 1)
    return [(dx, dy) for dx in rng for dy in rng]


def _search(
    workspace: Workspace,
    occ: _Occupancy,
    start: Cell,
    t0: int,
    goal: Cell,
    max_speed: int,
    min_arrival: int,
    hold: Optional[int],
    horizon: int,
) -> tuple[Cell, ...]:
    """A* over (cell, t). Returns cells from t0 to the accepted arrival time.

    ``hold`` is the number of steps the goal must stay free after arrival;
    ``None`` means it must stay free for good.
    """
    last_event = occ.last_event
    free = workspace.free_cells
    offsets = _offsets(max_speed)
    gx, gy = goal

    def h(x, y, t):
        dx = x - gx if x > gx else gx - x
        dy = y - gy if y > gy else gy - y
        d = -(-(dx if dx > dy else dy) // max_speed)
        slack = min_arrival - t
        return d if d > slack else slack

    if start not in free or start in occ.blocked(t0):
        raise PlanningInfeasible(f"start {start} blocked at t={t0}")

    # (f, waits, x, y, t, parent)
    heap = [(t0 + h(start[0], start[1], t0), 0, start[0], start[1], t0, None)]
    parents: dict[tuple[Cell, int], Optional[tuple[Cell, int]]] = {}
    push, pop = heapq.heappush, heapq.heappop
    while heap:
        f, waits, x, y, t, parent = pop(heap)
        cell = (x, y)
        key = (cell, t)
        if key in parents:
            continue
        parents[key] = parent
        if cell == goal and t >= min_arrival:
            hold_until = max(t, last_event) if hold is None else t + hold
            if occ.hold_ok(cell, t, hold_until):
                path = []
                node: Optional[tuple[Cell, int]] = key
                while node is not None:
                    path.append(node[0])
                    node = parents[node]
                return tuple(reversed(path))
        if t >= horizon:
            continue
        nt = t + 1
        blocked = occ.blocked(nt)
        swaps = occ.swaps(t)
        for dx, dy in offsets:
            nx, ny = x + dx, y + dy
            nc = (nx, ny)
            if nc not in free or nc in blocked or (nc, nt) in parents:
                continue
            if swaps and (cell, nc) in swaps:
                continue
            push(heap, (nt + h(nx, ny, nt), waits + 1 if nc == cell else waits, nx, ny, nt, key))
    raise PlanningInfeasible(f"no path from {start}@{t0} to {goal} within horizon {horizon}")


def _horizon(workspace: Workspace, occ: _Occupancy, t0: int, min_finish: int, dwell: int, max_speed: int) -> int:
    # beyond max(last_event, min_finish) the world is static, so any static path fits in width*height steps
    span = max(math.ceil((workspace.width + workspace.height) * 4 / max_speed), workspace.width * workspace.height)
    return max(occ.last_event, min_finish, t0) + span + dwell + 1


@dataclass(frozen=True)
class PlanQuery:
    robot_id: int
    start_cell: Cell
    earliest_start: int
    goal_cell: Cell
    min_finish: int = 0
    dwell: int = 0
    radius: int = 0
    max_speed: int = 1

    def __post_init__(self):
        if self.min_finish < self.earliest_start:
            object.__setattr__(self, "min_finish", self.earliest_start)


def plan_path(
    query: PlanQuery, obstacles: DynamicObstacleField, workspace: Workspace
) -> tuple[Trajectory, int]:
    """Earliest-finishing trajectory that reaches the goal and holds it for ``dwell`` steps.

    The finish time (arrival + dwell) is at least ``query.min_finish``; the
    robot waits, en route or at the goal, when it would otherwise be early.
    """
    occ = _Occupancy(obstacles, query.robot_id, query.radius)
    horizon = _horizon(workspace, occ, query.earliest_start, query.min_finish, query.dwell, query.max_speed)
    min_arrival = max(query.earliest_start, query.min_finish - query.dwell)
    cells = _search(
        workspace,
        occ,
        query.start_cell,
        query.earliest_start,
        query.goal_cell,
        query.max_speed,
        min_arrival,
        query.dwell,
        horizon,
    )
    cells = cells + (query.goal_cell,) * query.dwell
    traj = Trajectory(query.robot_id, query.earliest_start, cells)
    return traj, traj.end_time


def plan_escape(
    robot: RobotSpec, from_cell: Cell, from_time: int, obstacles: DynamicObstacleField, workspace: Workspace
) -> Trajectory:
    """Earliest trajectory to the robot's resting cell where it can then stay indefinitely."""
    occ = _Occupancy(obstacles, robot.id, robot.radius)
    horizon = _horizon(workspace, occ, from_time, from_time, 0, robot.max_speed)
    cells = _search(workspace, occ, from_cell, from_time, robot.resting, robot.max_speed, from_time, None, horizon)
    return Trajectory(robot.id, from_time, cells)


def _interpolate(a: Cell, b: Cell, steps: int) -> list[Cell]:
    return [
        (a[0] + round((b[0] - a[0]) * k / steps), a[1] + round((b[1] - a[1]) * k / steps))
        for k in range(steps + 1)
    ]


def segment_ok(
    cells: Iterable[Cell], t0: int, occ: _Occupancy, workspace: Workspace, max_speed: int
) -> bool:
    cells = list(cells)
    for k, c in enumerate(cells):
        if c not in workspace.free_cells or c in occ.blocked(t0 + k):
            return False
        if k:
            prev = cells[k - 1]
            if chebyshev(prev, c) > max_speed or (prev, c) in occ.swaps(t0 + k - 1):
                return False
    return True


def shortcut(
    trajectory: Trajectory,
    obstacles: DynamicObstacleField,
    workspace: Workspace,
    rng_seed,
    radius: int = 0,
    max_speed: int = 1,
    attempts: int = 100,
) -> Trajectory:
    """Randomized shortcutting that keeps every timestamp of the endpoints.

    A sub-trajectory between two random indices is replaced by a straight,
    evenly time-parameterized segment when that is collision-free and
    strictly shorter in travelled distance.
    """
    cells = list(trajectory.cells)
    n = len(cells)
    if n < 3:
        return trajectory
    rng = rng_seed if isinstance(rng_seed, random.Random) else random.Random(rng_seed)
    occ = _Occupancy(obstacles, trajectory.robot_id, radius)
    t0 = trajectory.start_time
    changed = False
    cum = _cumulative(cells)
    for _ in range(attempts):
        i, j = rng.randrange(n), rng.randrange(n)
        if i > j:
            i, j = j, i
        if j - i < 2:
            continue
        old = cum[j] - cum[i]
        if math.dist(cells[i], cells[j]) >= old - 1e-9:
            continue
        new = _interpolate(cells[i], cells[j], j - i)
        if path_length(new) >= old - 1e-9:
            continue
        if segment_ok(new, t0 + i, occ, workspace, max_speed):
            cells[i : j + 1] = new
            cum = _cumulative(cells)
            changed = True
    if not changed:
        return trajectory
    return Trajectory(trajectory.robot_id, t0, tuple(cells))


def _cumulative(cells) -> list[float]:
    out = [0.0]
    for a, b in zip(cells, cells[1:]):
        out.append(out[-1] + math.dist(a, b))
    return out
