CRITERIA = {
    1: "loop Maurer-Cartan equivalence on random wave data",
    2: "wave-equation necessity (phi = xy flagged in degree 1)",
    3: "frame integration fidelity (Clifford torus)",
    4: "flatness of every family member",
    5: "Grassmann membership of curve frames",
    6: "three-involution twists and reality ranges",
    7: "left-invariance and determinism",
    8: "vacuum exactness",
}

_outcomes = {}
_details = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            item.user_properties.append(("criterion", m.args[0]))


def pytest_runtest_logreport(report):
    props = dict(report.user_properties)
    n = props.get("criterion")
    if n is None:
        return
    if report.when == "call" or report.outcome != "passed":
        _outcomes.setdefault(n, []).append(report.outcome == "passed")
    if report.when == "call":
        for key, value in report.user_properties:
            if key == "measured":
                _details.setdefault(n, []).append(value)


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(CRITERIA):
        if n not in _outcomes:
            continue
        ok = all(_outcomes[n])
        tr.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {CRITERIA[n]}")
        for d in _details.get(n, []):
            tr.write_line(f"    {d}")
