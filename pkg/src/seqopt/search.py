"""Initial, neighbouring and baseline serialized sequences."""

from __future__ import annotations

import random
from typing import Optional, Sequence

from .planner import straight_line_lower_bound
from .scenario import Scenario, SerializedSequence, validate_sequence

RETRY_CAP = 50
DEFAULT_MUTATION_WEIGHTS = (1 / 3, 1 / 3, 1 / 3)


class SequenceError(RuntimeError):
    """No valid sequence can be constructed."""


class InfeasibleSequence(SequenceError):
    """The requested baseline cannot cover every task."""


def _ready(scenario: Scenario, placed: set[int]) -> list[int]:
    return [
        t.id for t in scenario.tasks if t.id not in placed and scenario.predecessors(t.id) <= placed
    ]


def _round_robin(scenario: Scenario, pick, robot_ids: Optional[Sequence[int]] = None) -> SerializedSequence:
    """Cycle through robots, letting ``pick(robot, candidates)`` choose each robot's next task."""
    placed: set[int] = set()
    entries = []
    robot_ids = list(robot_ids or [r.id for r in scenario.robots])
    turn = 0
    idle_turns = 0
    while len(placed) < scenario.num_tasks:
        robot = robot_ids[turn % len(robot_ids)]
        turn += 1
        candidates = [t for t in _ready(scenario, placed) if robot in scenario.task(t).capable]
        if not candidates:
            idle_turns += 1
            if idle_turns >= len(robot_ids):
                left = sorted(set(range(1, scenario.num_tasks + 1)) - placed)
                raise SequenceError(f"no robot can take any of the remaining tasks {left}")
            continue
        idle_turns = 0
        task = pick(robot, candidates)
        placed.add(task)
        entries.append((task, robot))
    return SerializedSequence(tuple(entries))


def initialize_sequence(scenario: Scenario, rng: random.Random) -> SerializedSequence:
    """Round-robin over robots, each taking a uniformly random ready task it can do."""
    if scenario.num_tasks == 0:
        raise SequenceError("scenario has no tasks")
    return _round_robin(scenario, lambda robot, candidates: rng.choice(candidates))


def _nearest_first(scenario: Scenario, robots: Sequence[int]) -> SerializedSequence:
    position = {r.id: r.start for r in scenario.robots}

    def pick(robot, candidates):
        speed = scenario.robot(robot).max_speed
        task = min(
            candidates,
            key=lambda t: (straight_line_lower_bound(position[robot], scenario.task(t).cells[0], speed), t),
        )
        position[robot] = scenario.task(task).final_cell
        return task

    return _round_robin(scenario, pick, robots)


def greedy_baseline_sequence(scenario: Scenario) -> SerializedSequence:
    """Robots take turns; each takes the ready task closest to where it currently is."""
    return _nearest_first(scenario, [r.id for r in scenario.robots])


def single_robot_sequence(scenario: Scenario, robot_id: int) -> SerializedSequence:
    missing = [t.id for t in scenario.tasks if robot_id not in t.capable]
    if missing:
        raise InfeasibleSequence(f"robot {robot_id} cannot do tasks {missing}")
    return _nearest_first(scenario, [robot_id])


# --- neighbourhood moves ------------------------------------------------------


def swap_entries(seq: SerializedSequence, i: int, j: int) -> SerializedSequence:
    entries = list(seq.entries)
    entries[i], entries[j] = entries[j], entries[i]
    return SerializedSequence(tuple(entries))


def reverse_entries(seq: SerializedSequence, i: int, j: int) -> SerializedSequence:
    """Reverse the inclusive index range i..j."""
    entries = list(seq.entries)
    entries[i : j + 1] = entries[i : j + 1][::-1]
    return SerializedSequence(tuple(entries))


def reassign(seq: SerializedSequence, i: int, robot_id: int) -> SerializedSequence:
    entries = list(seq.entries)
    entries[i] = (entries[i][0], robot_id)
    return SerializedSequence(tuple(entries))


def swap_robot(seq: SerializedSequence, scenario: Scenario, rng: random.Random) -> SerializedSequence:
    for _ in range(RETRY_CAP):
        i = rng.randrange(len(seq))
        task, robot = seq[i]
        others = sorted(scenario.task(task).capable - {robot})
        if not others:
            continue
        cand = reassign(seq, i, rng.choice(others))
        if validate_sequence(cand, scenario) is None:
            return cand
    return seq


def swap_random_elements(seq: SerializedSequence, scenario: Scenario, rng: random.Random) -> SerializedSequence:
    if len(seq) < 2:
        return seq
    for _ in range(RETRY_CAP):
        i, j = rng.sample(range(len(seq)), 2)
        cand = swap_entries(seq, i, j)
        if validate_sequence(cand, scenario) is None:
            return cand
    return seq


def reverse_subtour(seq: SerializedSequence, scenario: Scenario, rng: random.Random) -> SerializedSequence:
    if len(seq) < 2:
        return seq
    for _ in range(RETRY_CAP):
        i, j = sorted(rng.sample(range(len(seq)), 2))
        cand = reverse_entries(seq, i, j)
        if validate_sequence(cand, scenario) is None:
            return cand
    return seq


MUTATIONS = (swap_robot, swap_random_elements, reverse_subtour)


def generate_neighbor(
    seq: SerializedSequence,
    scenario: Scenario,
    rng: random.Random,
    weights: Optional[Sequence[float]] = None,
) -> SerializedSequence:
    """Apply one randomly chosen move: robot swap, element swap or subtour reversal."""
    weights = weights or DEFAULT_MUTATION_WEIGHTS
    u = rng.random() * sum(weights)
    acc = 0.0
    for move, w in zip(MUTATIONS, weights):
        acc += w
        if u < acc:
            return move(seq, scenario, rng)
    return MUTATIONS[-1](seq, scenario, rng)
