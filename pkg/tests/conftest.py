"""Shared fixtures: the expensive lookup tables used by the acceptance
tests are built once per session.  A terminal-summary hook replays the
per-criterion verdict lines after the run so they are visible even
though pytest captures stdout inside the tests."""

import sys
import time
from types import SimpleNamespace

import pytest

from mnngp.fq_table import QuadratureGrid, build_table


@pytest.fixture(scope="session")
def q2_acceptance():
    """High-resolution q=2 table plus its measured build time."""
    start = time.perf_counter()
    table = build_table(2, 1001, QuadratureGrid(8.0, 2001))
    return SimpleNamespace(table=table, build_seconds=time.perf_counter() - start)


@pytest.fixture(scope="session")
def q3_nodes_table():
    """q=3 table whose 21 nodes include every MC comparison point."""
    return build_table(3, 21, QuadratureGrid(8.0, 2001))


@pytest.fixture(scope="session")
def q4_nodes_table():
    return build_table(4, 21, QuadratureGrid(8.0, 2001))


@pytest.fixture(scope="session")
def q3_dense_table():
    """q=3 table with interior resolution for kernel recursions."""
    return build_table(3, 201, QuadratureGrid(8.0, 2001))


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None) if module else None
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for line in results:
        terminalreporter.write_line(line)
