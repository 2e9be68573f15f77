import pytest

from test_acceptance import RESULTS


@pytest.hookimpl(trylast=True)
def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        terminalreporter.write_line(RESULTS[number])
