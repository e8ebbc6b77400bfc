"""Greedy descent with random restarts over serialized sequences."""

from __future__ import annotations

import logging
import math
import random
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

from .evaluator import EvalOutcome, PlanResult, PrefixCache, plan_given_sequence
from .scenario import Scenario, SerializedSequence
from .search import (
    DEFAULT_MUTATION_WEIGHTS,
    generate_neighbor,
    greedy_baseline_sequence,
    initialize_sequence,
    single_robot_sequence,
)

log = logging.getLogger(__name__)


class OptimizationError(RuntimeError):
    """No restart produced a feasible plan."""


@dataclass
class OptimizerConfig:
    max_outer_iter: int = 10
    max_inner_iter: int = 20
    seed: int = 0
    prune_with_lower_bound: bool = True
    prune_against: str = "inner"  # "inner" keeps the search path identical to unpruned runs
    time_budget: Optional[float] = None
    use_cache: bool = True
    cache_size: int = 10_000
    shortcut_attempts: int = 100
    mutation_weights: tuple = DEFAULT_MUTATION_WEIGHTS
    workers: int = 1

    def __post_init__(self):
        if self.max_outer_iter < 1:
            raise ValueError("max_outer_iter must be >= 1")
        if self.max_inner_iter < 0:
            raise ValueError("max_inner_iter must be >= 0")
        if self.prune_against not in ("inner", "global"):
            raise ValueError("prune_against must be 'inner' or 'global'")


@dataclass(frozen=True)
class TraceSample:
    wall_s: float
    candidate_makespan: Optional[int]  # None when pruned or infeasible
    best_makespan: float
    outer: int
    inner: int  # -1 for the restart's initial sequence


@dataclass
class SearchTrace:
    samples: list = field(default_factory=list)

    def append(self, sample: TraceSample) -> None:
        self.samples.append(sample)

    def best_curve(self) -> list[float]:
        return [s.best_makespan for s in self.samples]

    def __len__(self) -> int:
        return len(self.samples)


@dataclass
class OptimizeResult:
    plan: PlanResult
    sequence: SerializedSequence
    trace: SearchTrace
    restart_makespans: list = field(default_factory=list)  # makespan of each restart's initial sequence
    evaluations: int = 0


def restart_seed(seed: int, outer: int) -> int:
    return random.Random(f"{seed}:{outer}").getrandbits(63)


def _evaluate(seq, scenario, config, cache, incumbent) -> EvalOutcome:
    return plan_given_sequence(
        seq,
        scenario,
        incumbent_makespan=incumbent,
        cache=cache,
        seed=config.seed,
        shortcut_attempts=config.shortcut_attempts,
    )


def _run_restart(scenario, config, outer, cache, clock0, deadline, global_best=math.inf):
    """One outer iteration: random start, then greedy descent from it.

    Returns the restart's best (makespan, sequence, plan), its initial makespan
    and the raw samples ``(wall_s, candidate, outer, inner, feasible_makespan)``.
    """
    rng = random.Random(restart_seed(config.seed, outer))
    samples = []
    seq = initialize_sequence(scenario, rng)
    outcome = _evaluate(seq, scenario, config, cache, None)
    samples.append((time.monotonic() - clock0, outcome.makespan, outer, -1))
    if outcome.ok:
        best = (outcome.makespan, seq, outcome.result)
        start_makespan = outcome.makespan
    else:
        log.debug("restart %d: initial sequence %s", outer, outcome.reason)
        best = (math.inf, seq, None)
        start_makespan = None
    global_best = min(global_best, best[0])

    for inner in range(config.max_inner_iter):
        if deadline is not None and time.monotonic() >= deadline:
            break
        cand = generate_neighbor(seq, scenario, rng, config.mutation_weights)
        incumbent = None
        if config.prune_with_lower_bound:
            bound = best[0] if config.prune_against == "inner" else global_best
            incumbent = None if math.isinf(bound) else bound
        outcome = _evaluate(cand, scenario, config, cache, incumbent)
        samples.append((time.monotonic() - clock0, outcome.makespan, outer, inner))
        if outcome.ok and outcome.makespan < best[0]:
            best = (outcome.makespan, cand, outcome.result)
            seq = cand
        if outcome.ok:
            global_best = min(global_best, outcome.makespan)
    return best, start_makespan, samples


def _worker(args):
    scenario, config, outer, clock0, deadline = args
    cache = PrefixCache(config.cache_size) if config.use_cache else None
    return outer, _run_restart(scenario, config, outer, cache, clock0, deadline)


def optimize(scenario: Scenario, config: Optional[OptimizerConfig] = None) -> OptimizeResult:
    """Run greedy descent with restarts and return the best plan found.

    Neighbours are always drawn from the restart's current incumbent, which
    moves only on strict improvement. Stops between evaluations once the time
    budget is spent.
    """
    config = config or OptimizerConfig()
    clock0 = time.monotonic()
    deadline = clock0 + config.time_budget if config.time_budget is not None else None

    restarts: dict[int, tuple] = {}
    if config.workers > 1:
        jobs = [(scenario, config, outer, clock0, deadline) for outer in range(config.max_outer_iter)]
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for outer, res in pool.map(_worker, jobs):
                restarts[outer] = res
    else:
        cache = PrefixCache(config.cache_size) if config.use_cache else None
        global_best = math.inf
        for outer in range(config.max_outer_iter):
            if deadline is not None and time.monotonic() >= deadline and restarts:
                break
            res = _run_restart(scenario, config, outer, cache, clock0, deadline, global_best)
            restarts[outer] = res
            global_best = min(global_best, res[0][0])

    # global incumbent: strictly better wins, so earlier restarts win ties
    best = (math.inf, None, None)
    for outer in sorted(restarts):
        if restarts[outer][0][0] < best[0]:
            best = restarts[outer][0]
    if best[2] is None:
        raise OptimizationError(f"no feasible sequence found in {len(restarts)} restarts")

    samples = sorted(
        (s for outer in sorted(restarts) for s in restarts[outer][2]),
        key=lambda s: (s[0], s[2], s[3]),
    )
    trace = SearchTrace()
    running = math.inf
    for wall, cand, outer, inner in samples:
        if cand is not None:
            running = min(running, cand)
        trace.append(TraceSample(wall, cand, running, outer, inner))

    return OptimizeResult(
        plan=best[2],
        sequence=best[1],
        trace=trace,
        restart_makespans=[restarts[o][1] for o in sorted(restarts)],
        evaluations=len(samples),
    )


def baseline_sequence(scenario: Scenario, kind: str, robot_id: Optional[int] = None) -> SerializedSequence:
    if kind == "greedy":
        return greedy_baseline_sequence(scenario)
    if kind == "single":
        return single_robot_sequence(scenario, robot_id or 1)
    raise ValueError(f"unknown baseline {kind!r}")


def run_baseline(
    scenario: Scenario, kind: str, robot_id: Optional[int] = None, shortcut_attempts: int = 100, seed: int = 0
) -> OptimizeResult:
    """Plan the greedy or single-robot baseline once, without pruning.

    Raises ``InfeasibleSequence`` if the baseline cannot cover every task and
    ``OptimizationError`` if planning fails.
    """
    clock0 = time.monotonic()
    seq = baseline_sequence(scenario, kind, robot_id)
    outcome = plan_given_sequence(seq, scenario, seed=seed, shortcut_attempts=shortcut_attempts)
    if not outcome.ok:
        raise OptimizationError(f"{kind} baseline infeasible: {outcome.reason}")
    trace = SearchTrace([TraceSample(time.monotonic() - clock0, outcome.makespan, outcome.makespan, 0, -1)])
    return OptimizeResult(outcome.result, seq, trace, [outcome.makespan], 1)
