from collections import defaultdict

import pytest

# criterion number -> list of (label, passed, detail), filled by tests/test_acceptance.py
_RESULTS: dict[int, list[tuple[str, bool, str]]] = defaultdict(list)
_CRITERIA = range(1, 12)


@pytest.fixture
def record():
    def _record(criterion: int, label: str, passed: bool, detail: str) -> bool:
        _RESULTS[criterion].append((label, bool(passed), detail))
        return bool(passed)
    return _record


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in _CRITERIA:
        parts = _RESULTS.get(n)
        if not parts:
            tr.write_line(f"criterion {n:2d}: NOT RUN")
            continue
        verdict = "PASS" if all(ok for _, ok, _ in parts) else "FAIL"
        summary = "; ".join(f"{label} {'ok' if ok else 'FAILED'} ({detail})" for label, ok, detail in parts)
        tr.write_line(f"criterion {n:2d}: {verdict}  {summary}")
