"""Plan a serialized sequence entry by entry against already committed paths.

Every entry is planned for its robot alone, starting where that robot's last
task ended, with every other robot's committed path (and its tentative escape
to the resting cell) treated as a moving obstacle. An entry must finish at
least one timestep after the previous entry. After each task the robot gets a
tentative escape path, which it drops again when it plans its next task.
"""

from __future__ import annotations

import hashlib
import os
import random
import threading
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Optional

from .planner import (
    DynamicObstacleField,
    PlanningInfeasible,
    PlanQuery,
    Timeline,
    Trajectory,
    plan_escape,
    plan_path,
    shortcut,
    straight_line_lower_bound,
)
from .scenario import Cell, Scenario, SerializedSequence

# debug switch: conflict-check every successful plan (SEQOPT_CHECK_PLANS=1)
CHECK_PLANS = os.environ.get("SEQOPT_CHECK_PLANS") == "1"
plans_checked = 0

OK = "ok"
PRUNED = "pruned"
INFEASIBLE = "infeasible"


@dataclass(frozen=True)
class PlanState:
    """Committed planning state after some prefix of a sequence.

    ``committed[i]`` is robot ``i+1``'s cells from t=0 up to the end of its last
    task; ``escapes[i]`` starts at that last cell and ends at the resting cell.
    """

    committed: tuple[tuple[Cell, ...], ...]
    escapes: tuple[tuple[Cell, ...], ...]
    finish_times: tuple[int, ...] = ()
    action_times: tuple[tuple[int, ...], ...] = ()

    def timeline(self, idx: int) -> tuple[Cell, ...]:
        return self.committed[idx] + self.escapes[idx][1:]

    def ready_time(self, idx: int) -> int:
        return len(self.committed[idx]) - 1

    @property
    def makespan(self) -> int:
        return self.finish_times[-1] if self.finish_times else 0


@dataclass(frozen=True)
class PlanResult:
    trajectories: dict  # robot id -> Trajectory, including the final escape
    finish_times: tuple[int, ...]
    action_times: tuple[tuple[int, ...], ...]
    makespan: int
    task_end_times: dict = field(default_factory=dict)  # robot id -> end of its last task

    @classmethod
    def from_state(cls, state: PlanState) -> "PlanResult":
        return cls(
            trajectories={i + 1: Trajectory(i + 1, 0, state.timeline(i)) for i in range(len(state.committed))},
            finish_times=state.finish_times,
            action_times=state.action_times,
            makespan=state.makespan,
            task_end_times={i + 1: state.ready_time(i) for i in range(len(state.committed))},
        )


@dataclass(frozen=True)
class EvalOutcome:
    status: str
    result: Optional[PlanResult] = None
    lower_bound: Optional[int] = None
    reason: str = ""
    entries_planned: int = 0

    @property
    def makespan(self) -> Optional[int]:
        return self.result.makespan if self.result is not None else None

    @property
    def ok(self) -> bool:
        return self.status == OK


class PrefixCache:
    """LRU map from sequence prefixes to the planning state after them.

    One cache serves one scenario. Lookups and insertions are serialized by a
    lock so the cache can be shared between threads.
    """

    def __init__(self, max_entries: int = 10_000):
        self.max_entries = max_entries
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()
        self.hits = 0
        self.misses = 0

    def __len__(self) -> int:
        return len(self._data)

    def get(self, key):
        with self._lock:
            state = self._data.get(key)
            if state is not None:
                self._data.move_to_end(key)
            return state

    def put(self, key, state: PlanState) -> None:
        with self._lock:
            self._data[key] = state
            self._data.move_to_end(key)
            while len(self._data) > self.max_entries:
                self._data.popitem(last=False)

    def clear(self) -> None:
        with self._lock:
            self._data.clear()


def _settings_key(seed: int, shortcut_attempts: int) -> tuple:
    return (int(seed), int(shortcut_attempts))


def cache_lookup(cache: PrefixCache, seq: SerializedSequence, seed: int = 0, shortcut_attempts: int = 100):
    """Longest cached prefix of ``seq``: returns ``(m, state)`` or ``(0, None)``."""
    settings = _settings_key(seed, shortcut_attempts)
    for m in range(len(seq), -1, -1):
        state = cache.get((settings, seq.entries[:m]))
        if state is not None:
            cache.hits += 1
            return m, state
    cache.misses += 1
    return 0, None


def entry_seed(seed: int, prefix) -> int:
    """Seed for planning the last entry of ``prefix``; independent of call order."""
    digest = hashlib.blake2b(repr((int(seed), tuple(prefix))).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def _field_for(state: PlanState, scenario: Scenario, skip_idx: int) -> DynamicObstacleField:
    return DynamicObstacleField(
        {
            rb.id: Timeline(state.timeline(i), rb.radius)
            for i, rb in enumerate(scenario.robots)
            if i != skip_idx
        }
    )


def initial_state(scenario: Scenario) -> PlanState:
    """Robots at their start cells, each with an escape to its resting cell."""
    committed = tuple((rb.start,) for rb in scenario.robots)
    escapes = [(rb.start,) for rb in scenario.robots]
    for i, rb in enumerate(scenario.robots):
        if rb.start == rb.resting:
            continue
        state = PlanState(committed, tuple(escapes))
        traj = plan_escape(rb, rb.start, 0, _field_for(state, scenario, i), scenario.workspace)
        escapes[i] = traj.cells
    return PlanState(committed, tuple(escapes))


def plan_entry(
    state: PlanState,
    task_id: int,
    robot_id: int,
    scenario: Scenario,
    rng: random.Random,
    shortcut_attempts: int = 100,
) -> PlanState:
    """Plan one (task, robot) entry and its escape; raises ``PlanningInfeasible``."""
    idx = robot_id - 1
    rb = scenario.robot(robot_id)
    task = scenario.task(task_id)
    ws = scenario.workspace
    obstacles = _field_for(state, scenario, idx)
    min_finish = state.finish_times[-1] + 1 if state.finish_times else 0

    def attempt(min_finish):
        cells = list(state.committed[idx])
        t, pos = len(cells) - 1, cells[-1]
        times = []
        for k, goal in enumerate(task.cells):
            last = k == len(task.cells) - 1
            query = PlanQuery(robot_id, pos, t, goal, min_finish if last else t, task.dwell, rb.radius, rb.max_speed)
            traj, finish = plan_path(query, obstacles, ws)
            moving = Trajectory(robot_id, t, traj.cells[: len(traj.cells) - task.dwell])
            moving = shortcut(moving, obstacles, ws, rng, rb.radius, rb.max_speed, shortcut_attempts)
            cells.extend(moving.cells[1:])
            cells.extend((goal,) * task.dwell)
            t, pos = finish, goal
            times.append(finish)
        escape = plan_escape(rb, pos, t, obstacles, ws)
        return tuple(cells), escape.cells, tuple(times)

    try:
        cells, escape, times = attempt(min_finish)
    except PlanningInfeasible:
        # arriving once every other robot is parked leaves the way out clear
        cells, escape, times = attempt(max(min_finish, obstacles.last_event() + 1))

    committed = state.committed[:idx] + (cells,) + state.committed[idx + 1 :]
    escapes = state.escapes[:idx] + (escape,) + state.escapes[idx + 1 :]
    return PlanState(committed, escapes, state.finish_times + (times[-1],), state.action_times + (times,))


def remaining_lower_bound(
    seq: SerializedSequence, from_index: int, state: PlanState, scenario: Scenario
) -> int:
    """Optimistic makespan for any completion of ``seq`` after ``from_index`` entries.

    Each remaining leg is costed at straight-line full speed, chained per robot,
    and each entry must finish after the one before it.
    """
    ready = {i + 1: state.ready_time(i) for i in range(len(state.committed))}
    pos = {i + 1: state.committed[i][-1] for i in range(len(state.committed))}
    prev = state.finish_times[-1] if state.finish_times else -1
    bound = state.makespan
    for task_id, robot_id in seq.entries[from_index:]:
        task = scenario.task(task_id)
        speed = scenario.robot(robot_id).max_speed
        t, p = ready[robot_id], pos[robot_id]
        for cell in task.cells:
            t += straight_line_lower_bound(p, cell, speed) + task.dwell
            p = cell
        finish = max(prev + 1, t)
        ready[robot_id], pos[robot_id], prev = finish, p, finish
        bound = max(bound, finish)
    return bound


def plan_given_sequence(
    seq: SerializedSequence,
    scenario: Scenario,
    incumbent_makespan: Optional[int] = None,
    cache: Optional[PrefixCache] = None,
    seed: int = 0,
    shortcut_attempts: int = 100,
) -> EvalOutcome:
    """Plan ``seq`` in order, reusing cached prefixes and pruning on the lower bound.

    With an incumbent, planning stops as soon as the optimistic bound shows the
    sequence cannot beat it.
    """
    settings = _settings_key(seed, shortcut_attempts)
    m, state = cache_lookup(cache, seq, seed, shortcut_attempts) if cache is not None else (0, None)
    if state is None:
        try:
            state = initial_state(scenario)
        except PlanningInfeasible as exc:
            return EvalOutcome(INFEASIBLE, reason=f"initial escape: {exc}")
        if cache is not None:
            cache.put((settings, ()), state)

    first_bound = remaining_lower_bound(seq, m, state, scenario)
    planned = 0
    for j in range(m, len(seq)):
        if incumbent_makespan is not None:
            bound = first_bound if j == m else remaining_lower_bound(seq, j, state, scenario)
            if bound >= incumbent_makespan:
                return EvalOutcome(PRUNED, lower_bound=bound, entries_planned=planned)
        task_id, robot_id = seq[j]
        rng = random.Random(entry_seed(seed, seq.entries[: j + 1]))
        try:
            state = plan_entry(state, task_id, robot_id, scenario, rng, shortcut_attempts)
        except PlanningInfeasible as exc:
            return EvalOutcome(INFEASIBLE, reason=f"entry {j} (task {task_id}, robot {robot_id}): {exc}", entries_planned=planned)
        planned += 1
        if cache is not None:
            cache.put((settings, seq.entries[: j + 1]), state)

    result = PlanResult.from_state(state)
    assert first_bound <= result.makespan, "lower bound exceeded realized makespan"
    if CHECK_PLANS:
        _debug_check(seq, scenario, result)
    return EvalOutcome(OK, result=result, lower_bound=first_bound, entries_planned=planned)


def _debug_check(seq, scenario, result) -> None:
    global plans_checked
    from .checker import check_plan

    problems = check_plan(scenario, seq, result)
    plans_checked += 1
    if problems:
        raise AssertionError(f"invalid plan for {seq.entries}: {problems[:3]}")
