"""Acceptance bookkeeping: one PASS/FAIL line per criterion in the terminal summary."""

import time

import pytest

_RESULTS = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_call(item):
    marker = item.get_closest_marker("acceptance")
    start = time.perf_counter()
    outcome = yield
    if marker is None:
        return
    number, title, limit = marker.args
    elapsed = time.perf_counter() - start
    ok = outcome.excinfo is None
    if ok and elapsed >= limit:
        # the runtime bound is part of the criterion
        outcome.force_exception(AssertionError(f"criterion {number} took {elapsed:.2f}s, limit {limit}s"))
        ok = False
    _RESULTS[number] = (ok, title, elapsed, limit)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        ok, title, elapsed, limit = _RESULTS[number]
        status = "PASS" if ok else "FAIL"
        bound = f" (limit {limit:g}s)" if limit != float("inf") else ""
        terminalreporter.write_line(f"{status} criterion {number:2d}: {title} [{elapsed:.2f}s{bound}]")
