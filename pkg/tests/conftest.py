from __future__ import annotations

import pytest

from smalideob.cfg import build_cfg
from smalideob.fixtures import EXAMPLE_CLASS, EXAMPLE_METHOD, load_example

# filled by test_acceptance; one line per criterion in the terminal summary
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def example():
    return load_example()


@pytest.fixture(scope="session")
def example_method(example):
    program, _ = example
    return program.classes[EXAMPLE_CLASS].method(EXAMPLE_METHOD)


@pytest.fixture(scope="session")
def example_cfg(example_method):
    return build_cfg(example_method)
