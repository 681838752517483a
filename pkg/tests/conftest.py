import pytest

_results: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion this test checks")


def pytest_runtest_logreport(report):
    marker = getattr(report, "_criterion", None)
    if marker is None:
        return
    n, title = marker
    entry = _results.setdefault(n, {"title": title, "ok": True, "notes": []})
    if report.failed or (report.when == "call" and report.skipped):
        entry["ok"] = False
    if report.when == "call":
        entry["notes"] += [v for k, v in report.user_properties if k == "detail"]


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    # attach the criterion id so the log hook can group by it
    outcome = yield
    m = item.get_closest_marker("criterion")
    if m is not None:
        outcome.get_result()._criterion = (m.args[0], m.args[1])


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_results):
        r = _results[n]
        line = f"criterion {n:2d} {r['title']:<28s} {'PASS' if r['ok'] else 'FAIL'}"
        if r["notes"]:
            line += "  " + "; ".join(r["notes"])
        terminalreporter.write_line(line)
