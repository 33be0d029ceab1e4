import contextlib

import numpy as np
import pytest

_VERDICTS: dict[str, tuple[str, str]] = {}


@contextlib.contextmanager
def criterion(label: str, what: str):
    """Record PASS/FAIL for an acceptance criterion; failures still raise."""
    try:
        yield
    except BaseException:
        _VERDICTS[label] = ("FAIL", what)
        print(f"[acceptance] {label}: FAIL  {what}")
        raise
    _VERDICTS.setdefault(label, ("PASS", what))
    print(f"[acceptance] {label}: PASS  {what}")


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_VERDICTS, key=lambda s: [int(t) if t.isdigit() else t for t in s.replace(".", " ").split()]):
        status, what = _VERDICTS[label]
        terminalreporter.write_line(f"{label:<14} {status}  {what}")


@pytest.fixture(name="criterion")
def criterion_fixture():
    return criterion


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
