"""Run reports (YAML, same dialect as scenario files) and trace tables (CSV)."""

from __future__ import annotations

import csv
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional, Union

import yaml

from .evaluator import PlanResult
from .optimizer import OptimizeResult
from .planner import Trajectory
from .scenario import SerializedSequence, dump_yaml

TRACE_HEADER = ["wall_s", "candidate_makespan", "best_makespan", "outer", "inner"]
WALL_CLOCK_FIELDS = ("wall_time",)


@dataclass
class RunReport:
    scenario: str
    method: str
    config: dict
    makespan: int
    wall_time: float
    sequence: list
    finish_times: list
    action_times: list
    trajectories: dict  # robot id -> list of [x, y], one per timestep from t=0
    task_end_times: dict = field(default_factory=dict)
    trace: list = field(default_factory=list)  # rows matching TRACE_HEADER

    @classmethod
    def from_result(cls, scenario_name: str, method: str, config: dict, result: OptimizeResult, wall_time: float):
        plan = result.plan
        return cls(
            scenario=scenario_name,
            method=method,
            config=dict(config),
            makespan=int(plan.makespan),
            wall_time=round(float(wall_time), 6),
            sequence=[list(e) for e in result.sequence],
            finish_times=list(plan.finish_times),
            action_times=[list(a) for a in plan.action_times],
            trajectories={int(r): [list(c) for c in traj.cells] for r, traj in sorted(plan.trajectories.items())},
            task_end_times={int(r): int(t) for r, t in sorted(plan.task_end_times.items())},
            trace=[
                [round(s.wall_s, 6), s.candidate_makespan, _num(s.best_makespan), s.outer, s.inner]
                for s in result.trace.samples
            ],
        )

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunReport":
        data = dict(data)
        data["trajectories"] = {int(k): v for k, v in data["trajectories"].items()}
        data["task_end_times"] = {int(k): v for k, v in (data.get("task_end_times") or {}).items()}
        return cls(**data)

    def sequence_obj(self) -> SerializedSequence:
        return SerializedSequence(tuple(tuple(e) for e in self.sequence))

    def plan_result(self) -> PlanResult:
        return PlanResult(
            trajectories={r: Trajectory(r, 0, tuple(tuple(c) for c in cells)) for r, cells in self.trajectories.items()},
            finish_times=tuple(self.finish_times),
            action_times=tuple(tuple(a) for a in self.action_times),
            makespan=self.makespan,
            task_end_times=dict(self.task_end_times),
        )

    def without_wall_clock(self) -> dict:
        d = self.to_dict()
        for key in WALL_CLOCK_FIELDS:
            d.pop(key, None)
        d["trace"] = [row[1:] for row in d["trace"]]
        return d


def _num(x):
    return None if x == float("inf") else int(x)


def save_report(report: RunReport, out_dir: Union[str, Path]) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report_path = out / "report.yaml"
    report_path.write_text(dump_yaml(report.to_dict()))
    trace_path = out / "trace.csv"
    write_trace(report.trace, trace_path)
    return report_path, trace_path


def load_report(path: Union[str, Path]) -> RunReport:
    path = Path(path)
    if path.is_dir():
        path = path / "report.yaml"
    return RunReport.from_dict(yaml.safe_load(path.read_text()))


def write_trace(rows, path: Union[str, Path]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRACE_HEADER)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])


def read_trace(path: Union[str, Path]) -> list[list[Optional[float]]]:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header != TRACE_HEADER:
            raise ValueError(f"unexpected trace header {header}")
        return [[float(v) if v != "" else None for v in row] for row in r]
