import pytest

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line for an acceptance criterion, then assert on it."""

    def record(number, title, ok, elapsed, limit, detail):
        passed = bool(ok) and elapsed < limit
        line = f"{'PASS' if passed else 'FAIL'}  criterion {number:>2}: {title} [{detail}; {elapsed:.2f}s of {limit:g}s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, detail
        assert elapsed < limit, f"took {elapsed:.2f}s, limit {limit:g}s"

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
