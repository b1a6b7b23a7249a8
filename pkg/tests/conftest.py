from _verdicts import VERDICTS


def pytest_terminal_summary(terminalreporter):
    if VERDICTS:
        terminalreporter.section("acceptance")
        for label in sorted(VERDICTS):
            terminalreporter.write_line(VERDICTS[label])
