"""Shared fixtures: the two heavy population sweeps are computed once per
session because both the consistency tests and the acceptance gate read
them.  The terminal summary prints one line per acceptance criterion."""

import os

import pytest

from envest import simulate

ACCEPTANCE_RESULTS = {}


def record_criterion(number, passed, detail=""):
    """Remember a criterion outcome for the end-of-run summary."""
    ACCEPTANCE_RESULTS[number] = (passed, detail)
    return passed


@pytest.fixture(scope="session")
def population_sweep_small():
    # 100 exact (M, U) pairs at (d, u) = (10, 3), sequential solver
    return simulate.population_experiment(
        10, 3, 100, ("onedim",), seed=1000, max_workers=os.cpu_count()
    )


@pytest.fixture(scope="session")
def population_sweep_medium():
    # 100 exact pairs at (30, 10); both solvers so timings are comparable
    return simulate.population_experiment(
        30, 10, 100, ("onedim", "fg"), seed=2000, max_workers=os.cpu_count()
    )


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[number]
        verdict = "PASS" if passed else "FAIL"
        line = f"[criterion {number}] {verdict}"
        if detail:
            line += f" {detail}"
        terminalreporter.write_line(line)
