import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from coopow import KeyPair  # noqa: E402

_ACCEPTANCE: dict[str, str] = {}


def record_criterion(name: str, passed: bool, detail: str = ""):
    _ACCEPTANCE[name] = f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[name])


@pytest.fixture(scope="session")
def kp():
    return KeyPair.from_seed("test-key")


@pytest.fixture(scope="session")
def other_kp():
    return KeyPair.from_seed("other-key")


@pytest.fixture(scope="session")
def banks():
    from treebank import build_bank
    return {d: build_bank(1, d) for d in (2, 3)}
