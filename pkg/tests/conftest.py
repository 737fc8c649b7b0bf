import time

import pytest
from hypothesis import settings

# a single slow core makes wall-clock deadlines meaningless
settings.register_profile("repo", deadline=None)
settings.load_profile("repo")

SESSION_START = time.monotonic()


def pytest_collection_modifyitems(config, items):
    # acceptance criteria run last so the final one can time the whole session
    items.sort(key=lambda item: item.module.__name__.endswith("test_acceptance"))


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line straight to the terminal, bypassing capture."""

    def emit(name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")

    return emit
