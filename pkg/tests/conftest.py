# (criterion, passed, detail) rows filled by test_acceptance
CRITERIA = []


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for cid, ok, detail in sorted(CRITERIA, key=lambda r: int(r[0][1:].rstrip("abc") or 0)):
        terminalreporter.write_line(f"{cid:<4} {'PASS' if ok else 'FAIL'}  {detail}")
