_CRITERION_LINES = []


def record_criterion(number: int, name: str, ok: bool, detail: str):
    line = f"CRITERION {number:2d} [{name}]: {'PASS' if ok else 'FAIL'} - {detail}"
    _CRITERION_LINES.append((number, line))
    return ok


def pytest_terminal_summary(terminalreporter):
    if not _CRITERION_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(_CRITERION_LINES):
        terminalreporter.write_line(line)
