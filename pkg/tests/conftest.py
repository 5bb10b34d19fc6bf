from functools import lru_cache

import pytest

from zeckgap.decomposition import enumerate_batch
from zeckgap.sequence import DEFAULT_INTERVAL, fibonacci

ACCEPTANCE_LINES: list[str] = []


@lru_cache(maxsize=None)
def fib_batch(n: int):
    return enumerate_batch(fibonacci(), DEFAULT_INTERVAL, n)


@pytest.fixture(scope="session")
def fib():
    return fibonacci()


@pytest.fixture(scope="session")
def batches():
    return fib_batch


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
