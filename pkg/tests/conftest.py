def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS, _line

    if RESULTS:
        terminalreporter.section("acceptance")
        for k in sorted(RESULTS):
            terminalreporter.write_line(_line(k))
