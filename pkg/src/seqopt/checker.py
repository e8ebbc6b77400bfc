"""Whole-plan validity checks, written independently of the planner internals."""

from __future__ import annotations

from typing import Mapping, Sequence

from .scenario import Cell, Scenario


def _pos(cells: Sequence[Cell], start: int, t: int) -> Cell:
    k = t - start
    if k < 0:
        k = 0
    if k >= len(cells):
        k = len(cells) - 1
    return tuple(cells[k])


def find_conflicts(
    scenario: Scenario,
    timelines: Mapping[int, Sequence[Cell]],
    start_times: Mapping[int, int] | None = None,
    limit: int = 50,
) -> list[str]:
    """List every robot-robot, robot-obstacle and speed violation in a joint plan.

    ``timelines`` maps robot id to its cell at each timestep; robots rest on
    their last cell afterwards.
    """
    start_times = start_times or {}
    ws = scenario.workspace
    problems: list[str] = []
    ids = sorted(timelines)
    horizon = max(start_times.get(r, 0) + len(timelines[r]) for r in ids) if ids else 0

    for r in ids:
        speed = scenario.robot(r).max_speed
        cells = timelines[r]
        for k, c in enumerate(cells):
            x, y = c
            if not (0 <= x < ws.width and 0 <= y < ws.height):
                problems.append(f"robot {r} out of bounds at {list(c)} t={start_times.get(r, 0) + k}")
            elif (x, y) in ws.obstacles:
                problems.append(f"robot {r} on obstacle {list(c)} t={start_times.get(r, 0) + k}")
            if k:
                px, py = cells[k - 1]
                if max(abs(px - x), abs(py - y)) > speed:
                    problems.append(f"robot {r} exceeds max speed at t={start_times.get(r, 0) + k}")

    for t in range(horizon + 1):
        here = {r: _pos(timelines[r], start_times.get(r, 0), t) for r in ids}
        nxt = {r: _pos(timelines[r], start_times.get(r, 0), t + 1) for r in ids}
        for i, a in enumerate(ids):
            for b in ids[i + 1 :]:
                reach = scenario.robot(a).radius + scenario.robot(b).radius
                pa, pb = here[a], here[b]
                if abs(pa[0] - pb[0]) <= reach and abs(pa[1] - pb[1]) <= reach:
                    problems.append(f"robots {a} and {b} collide at t={t}: {list(pa)} vs {list(pb)}")
                if pa != nxt[a] and nxt[a] == pb and nxt[b] == pa:
                    problems.append(f"robots {a} and {b} swap cells between t={t} and t={t + 1}")
        if len(problems) >= limit:
            break
    return problems


def check_plan(scenario: Scenario, sequence, result) -> list[str]:
    """Conflicts plus ordering and task-completion checks for a plan result."""
    timelines = {r: traj.cells for r, traj in result.trajectories.items()}
    starts = {r: traj.start_time for r, traj in result.trajectories.items()}
    problems = find_conflicts(scenario, timelines, starts)
    finish = list(result.finish_times)
    if any(b <= a for a, b in zip(finish, finish[1:])):
        problems.append(f"finish times not strictly increasing: {finish}")
    if finish and result.makespan != max(finish):
        problems.append(f"makespan {result.makespan} != last finish time {max(finish)}")
    for (task_id, robot_id), times in zip(sequence, result.action_times):
        task = scenario.task(task_id)
        cells = timelines[robot_id]
        start = starts[robot_id]
        for cell, t_done in zip(task.cells, times):
            for t in range(t_done - task.dwell, t_done + 1):
                if _pos(cells, start, t) != tuple(cell):
                    problems.append(f"task {task_id}: robot {robot_id} not at {list(cell)} at t={t}")
                    break
    return problems
