from pathlib import Path

import pytest

from kgnotable.graph import LoadOptions, load_triples, load_tsv

DATA = Path(__file__).parent / "data"
LEADERS = DATA / "leaders.tsv"


@pytest.fixture(scope="session")
def leaders():
    return load_tsv(LEADERS, LoadOptions(type_predicate="type"))


@pytest.fixture
def star():
    # hub with four leaves, one label
    return load_triples([("hub", "p", f"leaf{i}") for i in range(4)])


@pytest.fixture
def diamond():
    return load_triples([
        ("a", "x", "b"), ("a", "y", "c"), ("b", "x", "d"), ("c", "x", "d"),
    ])


# -- acceptance report ------------------------------------------------------------

ACCEPTANCE: dict[int, str] = {}


@pytest.fixture
def record():
    """Record one acceptance line; the test still asserts on its own."""

    def _record(number: int, ok: bool, detail: str) -> bool:
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
