import numpy as np
import pytest

from flatcrane.beam_model import PhysicalParams

_RESULTS: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session")
def params():
    return PhysicalParams()


@pytest.fixture
def rng():
    return np.random.default_rng(20221)


@pytest.fixture(scope="session")
def criterion():
    """Record one acceptance line; printed in the terminal summary."""

    def record(name: str, ok: bool, detail: str = ""):
        _RESULTS.append((name, bool(ok), detail))
        assert ok, f"{name}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")
