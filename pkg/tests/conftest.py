import dataclasses

import numpy as np
import pytest

from jacobifdi.sim import Scenario, run_scenario


@pytest.fixture(scope="session")
def default_scenario():
    return Scenario()


@pytest.fixture(scope="session")
def nominal_run(default_scenario):
    """No noise, faults or disturbance."""
    return run_scenario(default_scenario.quiet())


@pytest.fixture(scope="session")
def noise_free_run(default_scenario):
    """Faults and disturbance active, no noise."""
    return run_scenario(dataclasses.replace(default_scenario, noise=False))


@pytest.fixture(scope="session")
def disturbance_only_run(default_scenario):
    return run_scenario(default_scenario.quiet(disturbance=True))


@pytest.fixture(scope="session")
def noisy_run(default_scenario):
    return run_scenario(default_scenario)


def crossing_time(t, x, after, level):
    """First upward crossing of ``level`` after ``after``, linearly interpolated."""
    idx = np.where((t > after) & (x > level))[0][0]
    t0, t1, x0, x1 = t[idx - 1], t[idx], x[idx - 1], x[idx]
    return t0 + (level - x0) / (x1 - x0) * (t1 - t0)


# acceptance criteria register here; one summary line each is printed at the end
ACCEPTANCE = {}


def record_criterion(number, checks, detail=""):
    """Store the outcome of acceptance criterion ``number`` and assert it.

    ``checks`` maps a short label to a boolean; failing labels are listed.
    """
    failed = [name for name, ok in checks.items() if not ok]
    ACCEPTANCE[number] = (not failed, detail if not failed else f"{detail}; failed: {', '.join(failed)}")
    line = f"criterion {number}: {'PASS' if not failed else 'FAIL'} {ACCEPTANCE[number][1]}"
    print(line)
    assert not failed, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
