import numpy as np
import pytest

from catnet.kdd_data import split_holdout
from catnet.resources import fixture_path, load_mini


@pytest.fixture(scope="session")
def mini():
    return load_mini()


@pytest.fixture(scope="session")
def mini_path():
    return fixture_path("kdd_mini_2000.txt")


@pytest.fixture(scope="session")
def split(mini):
    """Fixed 1,500 / 500 category-proportional split of the fixture."""
    return split_holdout(mini, 500, seed=11)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


VERDICTS = pytest.StashKey[dict]()


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line per acceptance criterion; printed at session end."""
    store = request.config.stash.setdefault(VERDICTS, {})

    def record(number: int, ok: bool, detail: str):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        store[number] = line
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(VERDICTS, {})
    if store:
        terminalreporter.section("acceptance")
        for n in sorted(store):
            terminalreporter.write_line(store[n])
