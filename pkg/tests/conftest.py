import os

import pytest

from fofd.smt import default_solver
from helpers import ACCEPTANCE

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")



def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def read_fixture(name: str) -> str:
    with open(fixture_path(name)) as f:
        return f.read()


@pytest.fixture(scope="session")
def solver():
    cfg = default_solver(timeout=60.0)
    if cfg is None:
        pytest.skip("no SMT solver (yices-smt2 or z3) on PATH")
    return cfg


def pytest_collection_modifyitems(config, items):
    if default_solver() is not None:
        return
    skip = pytest.mark.skip(reason="no SMT solver on PATH")
    for item in items:
        if "solver" in item.keywords:
            item.add_marker(skip)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {n}: {detail}")
