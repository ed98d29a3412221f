import sys


def pytest_terminal_summary(terminalreporter):
    """Echo the acceptance criterion PASS/FAIL lines after capture ends."""
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "REPORT_LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
