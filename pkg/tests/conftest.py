import pytest

from chrcp import corpus_program, corpus_store
from chrcp.parse import parse_program, parse_store

# one line per acceptance criterion, echoed after the run (test_acceptance.py)
acceptance_lines: list[str] = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in acceptance_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def pivot_program():
    return corpus_program("pivot_swap")


@pytest.fixture(scope="session")
def pivot_store():
    return corpus_store("pivot_swap")


@pytest.fixture(scope="session")
def relabel_program():
    # r @ {a(X)}#{X in Xs} <=> {b(X)}#{X in Xs}
    return corpus_program("relabel")


@pytest.fixture(scope="session")
def remove_min_program():
    return corpus_program("remove_non_min")


@pytest.fixture(scope="session")
def remove_min_store():
    return corpus_store("remove_non_min")


def program(text: str):
    return parse_program(text)


def store(text: str):
    return parse_store(text)
