import os

import pytest

from qfbias.arith import build_tables
from qfbias.golden import Workspace

X8 = 10**8
THREADS = min(8, os.cpu_count() or 1)

# criterion id -> (passed, detail), filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def ws():
    """Sieves and prime tables at 10^8, shared across the session."""
    return Workspace(x=X8, threads=THREADS)


@pytest.fixture(scope="session")
def tables_1e6():
    return build_tables(10**6)


@pytest.fixture(scope="session")
def tables_1e7():
    return build_tables(10**7)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
