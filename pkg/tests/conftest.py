from collections import defaultdict

import pytest

ACCEPTANCE: dict[int, list[tuple[bool, str]]] = defaultdict(list)


@pytest.fixture
def record():
    """Record a pass/fail result for an acceptance criterion. A criterion
    with several cases passes only if all of them do."""

    def _record(number: int, ok: bool, detail: str) -> None:
        ACCEPTANCE[number].append((bool(ok), detail))

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        results = ACCEPTANCE[number]
        ok = all(r[0] for r in results)
        detail = "; ".join(r[1] for r in results)
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
