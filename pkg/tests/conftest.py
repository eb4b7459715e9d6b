import pytest

RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion check")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    failed = report.failed or (report.when == "call" and report.skipped)
    if report.when == "call" or failed:
        detail = dict(item.user_properties).get("detail")
        _, ok, details = RESULTS.get(number, (title, True, []))
        if detail and report.when == "call":
            details.append(detail)
        RESULTS[number] = (title, ok and not failed, details)


def pytest_terminal_summary(terminalreporter):
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(RESULTS):
        title, ok, details = RESULTS[number]
        line = f"criterion {number:2d} {'PASS' if ok else 'FAIL'}  {title}"
        if len(details) == 1:
            line += f"  [{details[0]}]"
        elif details:
            line += f"  [{len(details)} checks; " + ", ".join(details) + "]"
        terminalreporter.write_line(line)
