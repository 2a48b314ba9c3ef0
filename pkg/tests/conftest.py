"""Shared fixtures and the acceptance-criteria report.

Optimized pulses that several acceptance tests share are computed once per
session through the `pulse_bank` fixture (lazy, in-memory). After the run a
summary block prints one line per acceptance criterion, derived from the
outcomes of the test_criterion_* tests.
"""
from __future__ import annotations

import re
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from urcontrol.optimize import OptimizeOptions, optimize_pulse, preset

CRITERIA = {
    1: "norm identity",
    2: "defining property of the averaging superoperator",
    3: "curvature theorem",
    4: "single-qubit minimal control times",
    5: "single-qubit robustness ordering",
    6: "two-qubit generalized robustness",
    7: "1-design identity",
    8: "analytic gradient",
    9: "universal cost bound",
    10: "four-qubit state control",
    11: "noise kernel vs Monte Carlo",
    12: "CLI determinism",
}

_NODE_RE = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


class PulseBank:
    """Session cache of optimized preset pulses, keyed by (name, options)."""

    def __init__(self):
        self._cache = {}

    def get(self, name: str, n_starts: int | None = None):
        key = (name, n_starts)
        if key not in self._cache:
            p = preset(name)
            options = OptimizeOptions() if n_starts is None else OptimizeOptions(n_starts=n_starts)
            self._cache[key] = optimize_pulse(p.objective, p.n_segments, p.dt, options)
        return self._cache[key]


@pytest.fixture(scope="session")
def pulse_bank():
    return PulseBank()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = {}
    for status, label in (("passed", "PASSED"), ("failed", "FAILED"), ("error", "FAILED"),
                          ("skipped", "SKIPPED"), ("deselected", "NOT RUN")):
        for report in terminalreporter.stats.get(status, []):
            match = _NODE_RE.search(getattr(report, "nodeid", ""))
            if match:
                outcomes[int(match.group(1))] = label
    if not outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for number in sorted(CRITERIA):
        label = outcomes.get(number, "NOT RUN")
        terminalreporter.write_line(
            f"criterion {number:2d} ({CRITERIA[number]}): {label}"
        )
