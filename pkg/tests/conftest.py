"""Shared fixtures and the acceptance summary printed at the end of a run."""

import pytest

from refinery.algebra import make_problem

# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


@pytest.fixture
def coin_problem():
    """Two acts: A worth 0, not-A worth -1, equal mass."""
    return make_problem(["A", "not-A"], [[0], [1]], [0.5, 0.5], [0.0, -1.0])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
