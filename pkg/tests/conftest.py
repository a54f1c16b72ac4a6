import pytest

_criteria = {}


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    number, title = marker.args
    entry = _criteria.setdefault(number, {"title": title, "status": "PASS", "detail": []})
    if call.when == "call":
        if call.excinfo is not None:
            skipped = call.excinfo.errisinstance(pytest.skip.Exception)
            if skipped:
                entry["status"] = "SKIP" if entry["status"] == "PASS" else entry["status"]
                entry["detail"].append(str(call.excinfo.value))
            else:
                entry["status"] = "FAIL"
        for key, value in item.user_properties:
            if key == "detail":
                entry["detail"].append(value)
    elif call.when == "setup" and call.excinfo is not None:
        entry["status"] = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        e = _criteria[number]
        detail = "; ".join(e["detail"])
        line = f"AC{number:<2} {e['status']:<4} {e['title']}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)
