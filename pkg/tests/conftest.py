import time
from contextlib import contextmanager

import pytest

_lines = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_lines] = []


@pytest.fixture
def criterion(request):
    """Time a block, print a PASS/FAIL line for it, and fail if it is over the limit."""
    lines = request.config.stash[_lines]

    @contextmanager
    def run(number, title, limit):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            verdict = "PASS" if ok and elapsed < limit else "FAIL"
            line = f"criterion {number:>2} {verdict}  {title}  [{elapsed:.2f} s, limit {limit:g} s]"
            print(line)
            lines.append((number, line))
        assert elapsed < limit, f"took {elapsed:.2f} s, limit {limit} s"

    return run


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_lines, [])
    if lines:
        terminalreporter.write_sep("=", "acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
