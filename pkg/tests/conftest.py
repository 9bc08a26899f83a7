from __future__ import annotations

import contextlib

import pytest

_RESULTS: list[tuple[int, str, bool, str]] = []


@pytest.fixture
def criterion():
    """Record one acceptance criterion; the verdict is printed in the terminal summary."""

    @contextlib.contextmanager
    def record(number: int, title: str):
        notes: list[str] = []
        try:
            yield notes.append
        except BaseException as exc:
            _RESULTS.append((number, title, False, f"{type(exc).__name__}: {exc}".splitlines()[0]))
            print(f"criterion {number}: FAIL {title}")
            raise
        detail = "; ".join(notes)
        _RESULTS.append((number, title, True, detail))
        print(f"criterion {number}: PASS {title}" + (f" ({detail})" if detail else ""))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, ok, detail in sorted(_RESULTS):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
