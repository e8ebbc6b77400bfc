import os

# every successful plan produced during the run is re-checked for conflicts
os.environ["SEQOPT_CHECK_PLANS"] = "1"

import pytest  # noqa: E402

from seqopt.scenario import (  # noqa: E402
    RobotSpec,
    Scenario,
    TaskSpec,
    Workspace,
    load_scenario,
    resolve_scenario_path,
)

BUNDLED = ["grid2", "grid4", "lis_small", "lis_large", "binpick2"]


@pytest.fixture(scope="session")
def bundled():
    return {name: load_scenario(resolve_scenario_path(name)) for name in BUNDLED}


@pytest.fixture
def corridor():
    """Two point robots that must share a one-cell-wide corridor."""
    walls = {(x, y) for x in range(1, 6) for y in (0, 2)}
    ws = Workspace(7, 3, frozenset(walls))
    robots = (RobotSpec(1, (0, 0), (0, 0)), RobotSpec(2, (6, 2), (6, 2)))
    tasks = (TaskSpec.goto(1, (6, 0), {1, 2}), TaskSpec.goto(2, (0, 2), {1, 2}))
    return Scenario(ws, robots, tasks, name="corridor")


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        ok, detail = results[n]
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
