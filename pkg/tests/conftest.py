import re

_CRITERIA: dict[int, list[tuple[str, str]]] = {}
_NAME = re.compile(r"test_acceptance\.py::test_criterion_(\d+)")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _CRITERIA.setdefault(int(m.group(1)), []).append((report.nodeid.split("::")[-1], report.outcome))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        results = _CRITERIA[number]
        failed = [name for name, outcome in results if outcome != "passed"]
        line = f"criterion {number:2d}: {'FAIL' if failed else 'PASS'}"
        if failed:
            line += f" ({len(results) - len(failed)}/{len(results)} parts pass; failing: {', '.join(failed)})"
        terminalreporter.write_line(line)
