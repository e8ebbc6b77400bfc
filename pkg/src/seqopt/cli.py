"""Command-line front end: ``seqopt run | compare | validate``."""

from __future__ import annotations

import argparse
import csv
import logging
import statistics
import sys
import time
from pathlib import Path

from .checker import check_plan
from .optimizer import OptimizationError, OptimizerConfig, optimize, run_baseline
from .report import RunReport, load_report, save_report
from .scenario import ScenarioError, load_scenario, load_sequence, resolve_scenario_path, validate_sequence
from .search import InfeasibleSequence, SequenceError

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_INFEASIBLE = 0, 1, 2, 3

log = logging.getLogger("seqopt")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_search_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-outer", type=int, default=OptimizerConfig.max_outer_iter)
    p.add_argument("--max-inner", type=int, default=OptimizerConfig.max_inner_iter)
    p.add_argument("--time-budget", type=float, default=None, help="seconds")
    p.add_argument("--no-prune", action="store_true", help="disable lower-bound early stopping")
    p.add_argument("--no-cache", action="store_true", help="disable prefix caching")
    p.add_argument("--workers", type=int, default=1, help="parallel restarts")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="seqopt", description="Makespan optimization of multi-robot task sequences.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="optimize a scenario or plan a baseline")
    run.add_argument("--scenario", required=True, help="scenario file or bundled scenario name")
    run.add_argument("--method", choices=["optimize", "greedy", "single"], default="optimize")
    run.add_argument("--robot", type=int, default=1, help="robot for --method single")
    run.add_argument("--out", required=True, help="output directory")
    _add_search_flags(run)

    cmp_ = sub.add_parser("compare", help="run every method on several scenarios and seeds")
    cmp_.add_argument("--scenarios", nargs="+", required=True)
    cmp_.add_argument("--seeds", type=int, default=3, help="number of seeds (0..N-1)")
    cmp_.add_argument("--out", default=None, help="write summary.csv here")
    _add_search_flags(cmp_)

    val = sub.add_parser("validate", help="check a scenario, a sequence, or a saved run report")
    val.add_argument("--scenario", required=True)
    val.add_argument("--sequence", default=None)
    val.add_argument("--report", default=None, help="report.yaml or its directory")
    return parser


def _config(args) -> OptimizerConfig:
    if args.max_outer < 1 or args.max_inner < 0:
        raise SystemExit(EXIT_USAGE)
    return OptimizerConfig(
        max_outer_iter=args.max_outer,
        max_inner_iter=args.max_inner,
        seed=args.seed,
        prune_with_lower_bound=not args.no_prune,
        time_budget=args.time_budget,
        use_cache=not args.no_cache,
        workers=args.workers,
    )


def _config_echo(args, method: str) -> dict:
    echo = {"method": method}
    if method == "optimize":
        echo.update(
            seed=args.seed,
            max_outer=args.max_outer,
            max_inner=args.max_inner,
            time_budget=args.time_budget,
            prune=not args.no_prune,
            cache=not args.no_cache,
            workers=args.workers,
        )
    elif method == "single":
        echo["robot"] = args.robot
    return echo


def execute(scenario, method: str, args):
    if method == "optimize":
        return optimize(scenario, _config(args))
    if method == "greedy":
        return run_baseline(scenario, "greedy")
    return run_baseline(scenario, "single", args.robot)


def cmd_run(args) -> int:
    scenario = load_scenario(resolve_scenario_path(args.scenario))
    t0 = time.monotonic()
    result = execute(scenario, args.method, args)
    wall = time.monotonic() - t0
    problems = check_plan(scenario, result.sequence, result.plan)
    if problems:
        log.error("plan failed the conflict check: %s", problems[0])
        return EXIT_VALIDATION
    report = RunReport.from_result(scenario.name, args.method, _config_echo(args, args.method), result, wall)
    report_path, trace_path = save_report(report, args.out)
    print(f"{scenario.name} {args.method}: makespan {report.makespan} in {wall:.2f}s -> {report_path}, {trace_path}")
    return EXIT_OK


def cmd_compare(args) -> int:
    rows = []
    for name in args.scenarios:
        scenario = load_scenario(resolve_scenario_path(name))
        greedy = run_baseline(scenario, "greedy").plan.makespan
        singles = []
        for rb in scenario.robots:
            try:
                singles.append(run_baseline(scenario, "single", rb.id).plan.makespan)
            except InfeasibleSequence:
                pass
        single = min(singles) if singles else None
        opt = []
        for seed in range(args.seeds):
            args.seed = seed
            opt.append(optimize(scenario, _config(args)).plan.makespan)
        med = statistics.median(opt)
        rows.append(
            {
                "scenario": scenario.name,
                "optimize_median": med,
                "greedy": greedy,
                "single": single if single is not None else "",
                "improvement_vs_greedy": round(1 - med / greedy, 4),
                "improvement_vs_single": round(1 - med / single, 4) if single else "",
            }
        )
    cols = list(rows[0])
    print("  ".join(f"{c:>22}" for c in cols))
    for row in rows:
        print("  ".join(f"{str(row[c]):>22}" for c in cols))
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "summary.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=cols)
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def cmd_validate(args) -> int:
    scenario = load_scenario(resolve_scenario_path(args.scenario))
    status = EXIT_OK
    if args.sequence:
        violation = validate_sequence(load_sequence(args.sequence), scenario)
        if violation:
            print(f"sequence invalid: {violation}")
            status = EXIT_VALIDATION
        else:
            print("sequence ok")
    if args.report:
        report = load_report(args.report)
        seq = report.sequence_obj()
        violation = validate_sequence(seq, scenario)
        problems = [violation] if violation else check_plan(scenario, seq, report.plan_result())
        if problems:
            for p in problems:
                print(f"conflict: {p}")
            status = EXIT_VALIDATION
        else:
            print(f"report ok: makespan {report.makespan}, no conflicts")
    if status == EXIT_OK:
        print(f"scenario ok: {scenario.num_robots} robots, {scenario.num_tasks} tasks")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    handlers = {"run": cmd_run, "compare": cmd_compare, "validate": cmd_validate}
    try:
        return handlers[args.command](args)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleSequence, SequenceError, OptimizationError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE


if __name__ == "__main__":
    sys.exit(main())
