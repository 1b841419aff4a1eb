import pytest

_ACCEPTANCE_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_ACCEPTANCE_KEY] = []


@pytest.fixture
def verdict(request):
    """Record and print one PASS/FAIL line for an acceptance criterion, then assert it."""
    config = request.config
    tr = config.pluginmanager.get_plugin("terminalreporter")

    def _verdict(label: str, passed: bool, detail: str = "") -> None:
        line = f"{'PASS' if passed else 'FAIL'} {label}" + (f" :: {detail}" if detail else "")
        config.stash[_ACCEPTANCE_KEY].append(line)
        if tr is not None:
            tr.write_line("")
            tr.write_line(f"[acceptance] {line}")
        assert passed, line

    return _verdict


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_ACCEPTANCE_KEY, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
