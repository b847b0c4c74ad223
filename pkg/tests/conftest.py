import pytest

_VERDICTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_VERDICTS_KEY] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line, then assert the outcome."""
    lines = request.config.stash[_VERDICTS_KEY]

    def _verdict(number: int, title: str, ok: bool, detail: str):
        line = f"[{'PASS' if ok else 'FAIL'}] criterion {number:>2}: {title} ({detail})"
        print(line)
        lines.append(line)
        assert ok, line

    return _verdict


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
