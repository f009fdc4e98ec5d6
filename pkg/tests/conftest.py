import os
from pathlib import Path

import numpy as np
import pytest

from rulcon.synthetic import synthetic_split

CMAPSS_ROOT = Path(os.environ.get("RULCON_DATA", Path(__file__).resolve().parents[1] / "data" / "CMAPSS"))


@pytest.fixture(scope="session")
def small_split():
    """A CMAPSS-shaped split small enough to train on in seconds."""
    return synthetic_split("FD001", seed=3, length_range=(40, 90), counts=(6, 5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_acceptance_results = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py" in report.nodeid and report.when == "call":
        _acceptance_results[report.nodeid.split("::")[-1]] = report.outcome
    elif "test_acceptance.py" in report.nodeid and report.when == "setup" and report.outcome != "passed":
        _acceptance_results[report.nodeid.split("::")[-1]] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome in sorted(_acceptance_results.items()):
        mark = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{mark:5s} {name}")
