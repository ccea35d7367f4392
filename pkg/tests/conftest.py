import pytest

_VERDICTS = {}


@pytest.fixture
def criterion(request):
    """Record ``(number, passed, detail)`` and print one PASS/FAIL line."""
    def record(number, checks):
        failed = [name for name, ok, _ in checks if not ok]
        detail = "; ".join(f"{name}={value}" for name, _, value in checks)
        line = f"{'PASS' if not failed else 'FAIL'} criterion {number}: {detail}"
        _VERDICTS[number] = line
        print("\n" + line)
        assert not failed, f"criterion {number} failing checks: {failed}"
    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(_VERDICTS):
            terminalreporter.write_line(_VERDICTS[number])
