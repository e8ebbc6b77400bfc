import itertools
import random

import pytest

from oracle import bfs_finish_time, plan_sequence
from seqopt import evaluator
from seqopt.checker import check_plan, find_conflicts
from seqopt.evaluator import (
    INFEASIBLE,
    OK,
    PRUNED,
    PrefixCache,
    cache_lookup,
    entry_seed,
    initial_state,
    plan_entry,
    plan_given_sequence,
    remaining_lower_bound,
)
from seqopt.scenario import RobotSpec, Scenario, SerializedSequence, TaskSpec, Workspace
from seqopt.search import generate_neighbor, initialize_sequence


def test_single_goto():
    sc = Scenario(Workspace(10, 10), (RobotSpec(1, (0, 0), (0, 0)),), (TaskSpec.goto(1, (3, 0), {1}),))
    out = plan_given_sequence(SerializedSequence(((1, 1),)), sc)
    assert out.status == OK and out.makespan == 3
    # the return to rest is not part of the makespan
    assert out.result.trajectories[1].end_time == 6


def test_independent_robots():
    ws = Workspace(20, 20)
    robots = (RobotSpec(1, (0, 0), (0, 0)), RobotSpec(2, (19, 19), (19, 19)))
    tasks = (TaskSpec.goto(1, (4, 0), {1}), TaskSpec.goto(2, (19, 12), {2}))
    sc = Scenario(ws, robots, tasks)
    out = plan_given_sequence(SerializedSequence(((1, 1), (2, 2))), sc)
    assert out.makespan == max(4, 7)
    out = plan_given_sequence(SerializedSequence(((2, 2), (1, 1))), sc)
    # robot 1 must now finish strictly after robot 2
    assert out.result.finish_times == (7, 8)


def test_corridor_matches_oracle(corridor):
    orders = [((1, 1), (2, 2)), ((2, 2), (1, 1))]
    ours = {o: plan_given_sequence(SerializedSequence(o), corridor) for o in orders}
    reference = {o: plan_sequence(corridor, o) for o in orders}
    for o in orders:
        assert ours[o].ok
        assert list(ours[o].result.finish_times) == reference[o]
    best = min(r[-1] for r in reference.values())
    assert min(out.makespan for out in ours.values()) == best


def test_every_corridor_sequence_matches_oracle(corridor):
    for order in itertools.permutations([1, 2]):
        for robots in itertools.product([1, 2], repeat=2):
            entries = tuple(zip(order, robots))
            out = plan_given_sequence(SerializedSequence(entries), corridor)
            assert out.ok
            assert list(out.result.finish_times) == plan_sequence(corridor, entries), entries


def test_pickplace_two_actions():
    ws = Workspace(8, 3)
    sc = Scenario(ws, (RobotSpec(1, (0, 0), (0, 0)),), (TaskSpec.pickplace(1, (3, 0), (7, 2), {1}, dwell=1),))
    out = plan_given_sequence(SerializedSequence(((1, 1),)), sc)
    assert out.result.action_times == ((4, 9),)
    assert out.makespan == 9
    traj = out.result.trajectories[1]
    assert traj.at(3) == traj.at(4) == (3, 0) and traj.at(8) == traj.at(9) == (7, 2)


def test_finish_times_strictly_increasing(bundled):
    sc = bundled["lis_small"]
    for seed in range(20):
        seq = initialize_sequence(sc, random.Random(seed))
        out = plan_given_sequence(seq, sc, seed=seed)
        assert out.ok
        ft = out.result.finish_times
        assert all(a < b for a, b in zip(ft, ft[1:]))
        assert out.makespan == ft[-1] == max(ft)


def test_plans_are_conflict_free(bundled):
    for name, sc in bundled.items():
        for seed in range(3):
            seq = initialize_sequence(sc, random.Random(seed))
            out = plan_given_sequence(seq, sc)
            assert out.ok, out.reason
            assert check_plan(sc, seq, out.result) == []


def test_escape_exclusion():
    # moving the resting cells farther away lengthens the returns but not the tasks
    def build(rest_x):
        ws = Workspace(30, 9)
        robots = (RobotSpec(1, (0, 0), (rest_x, 0)), RobotSpec(2, (0, 8), (rest_x, 8)))
        tasks = (TaskSpec.goto(1, (10, 2), {1, 2}), TaskSpec.goto(2, (10, 6), {1, 2}))
        return Scenario(ws, robots, tasks)

    seq = SerializedSequence(((1, 1), (2, 2)))
    near = plan_given_sequence(seq, build(0))
    far = plan_given_sequence(seq, build(25))
    assert near.makespan == far.makespan == 11
    assert near.result.finish_times == far.result.finish_times
    assert far.result.trajectories[1].end_time > near.result.trajectories[1].end_time


def test_escape_fallback_when_parked_robot_blocks():
    # robot 2 rests inside the dead end robot 1 has to visit, so robot 1 can
    # only finish once robot 2 is gone; the retry arrives after the last event
    ws = Workspace(5, 3, frozenset({(1, 0), (2, 0), (3, 0), (1, 2), (2, 2), (3, 2)}))
    robots = (RobotSpec(1, (0, 1), (0, 1)), RobotSpec(2, (4, 0), (4, 2)))
    tasks = (TaskSpec.goto(1, (4, 1), {1}),)
    sc = Scenario(ws, robots, tasks)
    out = plan_given_sequence(SerializedSequence(((1, 1),)), sc)
    assert out.ok
    assert find_conflicts(sc, {r: t.cells for r, t in out.result.trajectories.items()}) == []


# --- lower bound ------------------------------------------------------------------


def test_lower_bound_nothing_left(bundled):
    sc = bundled["lis_small"]
    seq = initialize_sequence(sc, random.Random(0))
    state = initial_state(sc)
    for j, (task, robot) in enumerate(seq):
        state = plan_entry(state, task, robot, sc, random.Random(j))
    assert remaining_lower_bound(seq, len(seq), state, sc) == state.makespan


def test_lower_bound_single_leg():
    ws = Workspace(12, 12)
    robots = (RobotSpec(1, (0, 0), (0, 0)), RobotSpec(2, (11, 11), (11, 11)))
    tasks = (TaskSpec.goto(1, (0, 4), {1, 2}), TaskSpec.goto(2, (0, 10), {1, 2}))
    sc = Scenario(ws, robots, tasks)
    state = plan_entry(initial_state(sc), 1, 1, sc, random.Random(0))
    assert state.makespan == 4
    # robot 1 idles at (0, 4) from t=4; the next goal is 6 cells away
    assert remaining_lower_bound(SerializedSequence(((1, 1), (2, 1))), 1, state, sc) == 4 + 6
    # robot 2 is free from t=0 and 11 cells away, above the precedence floor of 5
    assert remaining_lower_bound(SerializedSequence(((1, 1), (2, 2))), 1, state, sc) == 11


@pytest.mark.parametrize("seed", range(5))
def test_lower_bound_admissible_on_random_instances(seed):
    rng = random.Random(seed)
    ws = Workspace(8, 8, frozenset(rng.sample([(x, y) for x in range(2, 6) for y in range(8)], 6)))
    robots = (RobotSpec(1, (0, 0), (0, 0)), RobotSpec(2, (7, 7), (7, 7)))
    free = sorted(ws.free_cells - {(0, 0), (7, 7), (1, 1), (6, 6), (0, 1), (1, 0), (6, 7), (7, 6)})
    tasks = tuple(TaskSpec.goto(i, rng.choice(free), {1, 2}, dwell=rng.randint(0, 2)) for i in range(1, 7))
    sc = Scenario(ws, robots, tasks)
    for trial in range(100):
        seq = initialize_sequence(sc, rng)
        out = plan_given_sequence(seq, sc, seed=trial)
        if not out.ok:
            continue
        state = initial_state(sc)
        for j in range(len(seq) + 1):
            assert remaining_lower_bound(seq, j, state, sc) <= out.makespan
            if j < len(seq):
                state = plan_entry(state, *seq[j], sc, random.Random(entry_seed(trial, seq.entries[: j + 1])))


def test_pruning_stops_early(bundled):
    sc = bundled["grid2"]
    seq = initialize_sequence(sc, random.Random(0))
    full = plan_given_sequence(seq, sc)
    out = plan_given_sequence(seq, sc, incumbent_makespan=full.lower_bound)
    assert out.status == PRUNED and out.lower_bound >= full.lower_bound
    assert out.entries_planned < len(seq)
    # an incumbent above the result never prunes
    assert plan_given_sequence(seq, sc, incumbent_makespan=full.makespan + 1).makespan == full.makespan


def test_infeasible_reports_reason():
    # robot 1 is walled in, so the goal cannot be reached
    ws = Workspace(3, 3, frozenset({(1, 0), (1, 1), (1, 2)}))
    sc = Scenario(ws, (RobotSpec(1, (0, 0), (0, 0)),), (TaskSpec.goto(1, (2, 2), {1}),))
    out = plan_given_sequence(SerializedSequence(((1, 1),)), sc)
    assert out.status == INFEASIBLE and "task 1" in out.reason


# --- prefix cache -------------------------------------------------------------------


def _same(a, b):
    assert a.status == b.status
    assert a.makespan == b.makespan
    if a.ok:
        assert a.result.finish_times == b.result.finish_times
        assert {r: t.cells for r, t in a.result.trajectories.items()} == {
            r: t.cells for r, t in b.result.trajectories.items()
        }


@pytest.mark.parametrize("name", ["lis_small", "binpick2"])
def test_cache_transparency(bundled, name):
    sc = bundled[name]
    rng = random.Random(1)
    cache = PrefixCache()
    seq = initialize_sequence(sc, rng)
    for _ in range(30):
        seq = generate_neighbor(seq, sc, rng)
        _same(plan_given_sequence(seq, sc, cache=cache, seed=3), plan_given_sequence(seq, sc, seed=3))
    assert cache.hits > 0


def test_cache_lookup_longest_prefix(bundled):
    sc = bundled["lis_small"]
    seq = initialize_sequence(sc, random.Random(2))
    cache = PrefixCache()
    plan_given_sequence(seq, sc, cache=cache)
    changed = SerializedSequence(seq.entries[:3] + (seq.entries[4], seq.entries[3]) + seq.entries[5:])
    m, state = cache_lookup(cache, changed)
    assert m == 3 and len(state.finish_times) == 3
    # different settings never share entries
    assert cache_lookup(cache, seq, seed=1) == (0, None)


def test_cache_eviction():
    cache = PrefixCache(max_entries=2)
    for k in range(3):
        cache.put(k, k)
    assert len(cache) == 2 and cache.get(0) is None and cache.get(2) == 2


def test_entry_seed_depends_only_on_prefix():
    assert entry_seed(5, ((1, 1), (2, 2))) == entry_seed(5, [(1, 1), (2, 2)])
    assert entry_seed(5, ((1, 1),)) != entry_seed(6, ((1, 1),))


def test_debug_checks_are_running():
    assert evaluator.CHECK_PLANS
    before = evaluator.plans_checked
    sc = Scenario(Workspace(4, 4), (RobotSpec(1, (0, 0), (0, 0)),), (TaskSpec.goto(1, (3, 3), {1}),))
    plan_given_sequence(SerializedSequence(((1, 1),)), sc)
    assert evaluator.plans_checked == before + 1


def test_single_goto_matches_oracle_time():
    assert bfs_finish_time(10, 10, set(), [], (0, 0), 0, (3, 0)) == 3
