"""Test-session plumbing: collects acceptance-criterion outcomes and prints
one pass/fail line per criterion at the end of the run."""

_criteria = {}


def record_criterion(number, description, passed, detail=""):
    _criteria[number] = (description, bool(passed), detail)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        description, passed, detail = _criteria[number]
        verdict = "PASS" if passed else "FAIL"
        line = f"criterion {number}: {verdict} - {description}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
