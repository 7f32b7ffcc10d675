"""Shared helpers for the test suite."""
from __future__ import annotations

import math
import sys


def ulps(x: float, y: float) -> float:
    """Distance between two floats in units of the larger one's ULP."""
    if math.isnan(x) or math.isnan(y):
        return math.inf
    if x == y:
        return 0.0
    return abs(x - y) / math.ulp(max(abs(x), abs(y)))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Re-emit the acceptance pass/fail lines at the end of the run."""
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "_LINES", None) if mod is not None else None
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
