import pytest

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion id")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "tests": []})
    if rep.when == "call" or rep.failed or rep.skipped:
        if rep.failed or (rep.skipped and not hasattr(rep, "wasxfail")):
            entry["ok"] = False
        if rep.when == "call" or rep.failed:
            entry["tests"].append((item.name, rep.outcome, dict(rep.user_properties)))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        terminalreporter.write_line(f"criterion {n:>2}: {status}  {e['title']}")
        for name, out, props in e["tests"]:
            extra = " ".join(f"{k}={v}" for k, v in props.items())
            terminalreporter.write_line(f"    {name}: {out} {extra}".rstrip())
