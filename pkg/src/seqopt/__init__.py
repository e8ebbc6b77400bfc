"""Makespan optimization of serialized multi-robot task sequences on a grid."""

from .evaluator import EvalOutcome, PlanResult, PrefixCache, plan_given_sequence
from .optimizer import OptimizeResult, OptimizerConfig, optimize, run_baseline
from .planner import PlanningInfeasible, PlanQuery, plan_escape, plan_path, shortcut
from .scenario import (
    RobotSpec,
    Scenario,
    ScenarioError,
    SerializedSequence,
    TaskSpec,
    Workspace,
    load_scenario,
    validate_sequence,
)

__version__ = "0.1.0"

__all__ = [
    "EvalOutcome",
    "OptimizeResult",
    "OptimizerConfig",
    "PlanQuery",
    "PlanResult",
    "PlanningInfeasible",
    "PrefixCache",
    "RobotSpec",
    "Scenario",
    "ScenarioError",
    "SerializedSequence",
    "TaskSpec",
    "Workspace",
    "load_scenario",
    "optimize",
    "plan_escape",
    "plan_given_sequence",
    "plan_path",
    "run_baseline",
    "shortcut",
    "validate_sequence",
]
