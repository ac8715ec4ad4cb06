import pytest

ACCEPTANCE_LINES = []


@pytest.fixture
def verdict():
    """Record one PASS/FAIL line per acceptance criterion."""

    def record(label, passed, detail, elapsed, budget):
        in_time = elapsed < budget
        ok = passed and in_time
        line = f"{'PASS' if ok else 'FAIL'} [{label}] {detail} (runtime {elapsed:.2f}s < {budget:g}s: {in_time})"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
