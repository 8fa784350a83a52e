import _builders


def pytest_terminal_summary(terminalreporter):
    if not _builders.ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_builders.ACCEPTANCE):
        ok, detail = _builders.ACCEPTANCE[n]
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if ok else 'FAIL'}  {detail}")
