import csv
import subprocess
import sys

import pytest
import yaml

from seqopt.cli import EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, main
from seqopt.report import TRACE_HEADER, load_report, read_trace, save_report
from seqopt.scenario import save_sequence


def test_greedy_run_has_one_sample(tmp_path, capsys):
    assert main(["run", "--scenario", "grid2.scn", "--method", "greedy", "--out", str(tmp_path)]) == EXIT_OK
    report = load_report(tmp_path)
    assert report.method == "greedy" and len(report.trace) == 1
    rows = read_trace(tmp_path / "trace.csv")
    assert len(rows) == 1 and rows[0][2] == report.makespan
    assert "makespan" in capsys.readouterr().out


def test_optimize_runs_are_reproducible(tmp_path):
    reports = []
    for k in range(2):
        out = tmp_path / f"r{k}"
        argv = ["run", "--scenario", "grid2.scn", "--method", "optimize", "--seed", "7", "--time-budget", "60",
                "--out", str(out)]
        assert main(argv) == EXIT_OK
        reports.append(load_report(out))
    a, b = (r.without_wall_clock() for r in reports)
    assert a == b
    assert reports[0].config["seed"] == 7


def test_trace_file_format(tmp_path):
    main(["run", "--scenario", "lis_small", "--max-outer", "2", "--max-inner", "5", "--out", str(tmp_path)])
    with open(tmp_path / "trace.csv") as fh:
        assert next(csv.reader(fh)) == TRACE_HEADER
    rows = read_trace(tmp_path / "trace.csv")
    assert len(rows) == 2 * 6
    walls = [r[0] for r in rows]
    best = [r[2] for r in rows]
    assert walls == sorted(walls) and best == sorted(best, reverse=True)


def test_single_arm_beats_two_arm_greedy_when_congested(tmp_path):
    makespan = {}
    for method in ("single", "greedy", "optimize"):
        out = tmp_path / method
        assert main(["run", "--scenario", "lis_small", "--method", method, "--robot", "1", "--out", str(out)]) == 0
        makespan[method] = load_report(out).makespan
    assert makespan["single"] < makespan["greedy"]
    # the optimizer is free to give every task to one robot, so it is not expected to lose to the single arm
    assert makespan["optimize"] <= makespan["greedy"]


def test_compare_writes_summary(tmp_path, capsys):
    argv = ["compare", "--scenarios", "lis_small", "binpick2", "--seeds", "2", "--max-outer", "2", "--max-inner", "5",
            "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    with open(tmp_path / "summary.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["scenario"] for r in rows] == ["lis_small", "binpick2"]
    assert all(float(r["optimize_median"]) > 0 for r in rows)
    assert "improvement_vs_greedy" in capsys.readouterr().out


def test_compare_handles_capability_restricted_scenario(tmp_path):
    argv = ["compare", "--scenarios", "grid4", "--seeds", "1", "--max-outer", "1", "--max-inner", "2",
            "--out", str(tmp_path)]
    assert main(argv) == EXIT_OK
    with open(tmp_path / "summary.csv") as fh:
        row = next(csv.DictReader(fh))
    assert row["single"] == ""


def test_validate_report_and_sequence(tmp_path, capsys):
    main(["run", "--scenario", "binpick2", "--method", "greedy", "--out", str(tmp_path)])
    assert main(["validate", "--scenario", "binpick2", "--report", str(tmp_path)]) == EXIT_OK
    assert "no conflicts" in capsys.readouterr().out

    report = load_report(tmp_path)
    save_sequence(report.sequence_obj(), tmp_path / "seq.yaml")
    assert main(["validate", "--scenario", "binpick2", "--sequence", str(tmp_path / "seq.yaml")]) == EXIT_OK

    # a tampered trajectory must be caught
    report.trajectories[1][3] = list(report.trajectories[2][3])
    save_report(report, tmp_path / "bad")
    assert main(["validate", "--scenario", "binpick2", "--report", str(tmp_path / "bad")]) == EXIT_VALIDATION
    assert "conflict" in capsys.readouterr().out


def test_validate_rejects_bad_sequence(tmp_path, capsys):
    (tmp_path / "seq.yaml").write_text(yaml.safe_dump({"sequence": [[1, 1], [1, 2]]}))
    assert main(["validate", "--scenario", "lis_small", "--sequence", str(tmp_path / "seq.yaml")]) == EXIT_VALIDATION
    assert "sequence invalid" in capsys.readouterr().out


def test_exit_code_usage(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "grid2", "--bogus"])
    assert exc.value.code == EXIT_USAGE
    with pytest.raises(SystemExit) as exc:
        main(["run", "--scenario", "grid2", "--out", "x", "--max-outer", "0"])
    assert exc.value.code == EXIT_USAGE


def test_exit_code_validation(tmp_path, capsys):
    bad = tmp_path / "bad.scn"
    bad.write_text("workspace: {width: 3, height: 3}\nrobots: []\ntasks: []\n")
    assert main(["validate", "--scenario", str(bad)]) == EXIT_VALIDATION
    assert main(["run", "--scenario", "missing_file", "--out", str(tmp_path)]) == EXIT_VALIDATION
    assert "error" in capsys.readouterr().err


def test_exit_code_infeasible(tmp_path, capsys):
    argv = ["run", "--scenario", "grid4", "--method", "single", "--robot", "2", "--out", str(tmp_path)]
    assert main(argv) == EXIT_INFEASIBLE
    assert "cannot do" in capsys.readouterr().err


def test_module_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "seqopt", "validate", "--scenario", "grid2"], capture_output=True, text=True
    )
    assert proc.returncode == 0 and "2 robots, 16 tasks" in proc.stdout


def test_report_round_trip(tmp_path):
    main(["run", "--scenario", "lis_small", "--method", "greedy", "--out", str(tmp_path)])
    report = load_report(tmp_path / "report.yaml")
    save_report(report, tmp_path / "again")
    assert load_report(tmp_path / "again") == report
    plan = report.plan_result()
    assert plan.makespan == max(plan.finish_times)
