import numpy as np
import pytest

_CRITERIA = {}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """``criterion(n, part, ok, detail)`` records one check for the summary table."""

    def record(n, part, ok, detail=""):
        _CRITERIA.setdefault(n, []).append((part, bool(ok), detail))
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        status = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        tr.write_line(f"criterion {n:2d}: {status}")
        for part, ok, detail in parts:
            tr.write_line(f"    [{'ok' if ok else 'FAIL'}] {part}: {detail}")
