import time

import numpy as np
import pytest
from hypothesis import settings

from pvshift.timeseries import SECONDS_PER_DAY, DaySeries

settings.register_profile("pvshift", deadline=None, max_examples=50)
settings.load_profile("pvshift")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def plateau(level_w: float, start: int, end: int, base: float = 0.0) -> DaySeries:
    v = np.full(SECONDS_PER_DAY, float(base))
    v[start:end] = level_w
    return DaySeries(v)


def step_series(before: float, after: float, at: int) -> DaySeries:
    v = np.full(SECONDS_PER_DAY, float(before))
    v[at:] = after
    return DaySeries(v)


_ACCEPTANCE_LINES: list[str] = []


class _Criterion:
    def __init__(self, number: int, title: str, limit_s: float | None):
        self.number = number
        self.title = title
        self.limit_s = limit_s
        self.notes: list[str] = []

    def note(self, text: str) -> None:
        self.notes.append(text)

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc, tb):
        elapsed = time.perf_counter() - self._t0
        detail = "; ".join(self.notes)
        late = self.limit_s is not None and elapsed >= self.limit_s
        ok = exc_type is None and not late
        if exc_type is not None:
            detail = f"{detail}; {exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}".lstrip("; ")
        if late:
            detail = f"{detail}; runtime {elapsed:.2f} s over the {self.limit_s} s limit".lstrip("; ")
        status = "PASS" if ok else "FAIL"
        line = f"{status} criterion {self.number:2d} ({self.title}, {elapsed:.2f} s): {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        if exc_type is None and late:
            raise AssertionError(line)
        return False


@pytest.fixture
def criterion():
    def make(number: int, title: str, limit_s: float | None = None) -> _Criterion:
        return _Criterion(number, title, limit_s)

    return make


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[2])):
            terminalreporter.write_line(line)
