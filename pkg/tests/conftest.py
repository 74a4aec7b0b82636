from __future__ import annotations

import pytest

from holmc.hypergraph import Kind, LiftedHypergraph


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(name): headline acceptance criterion")


@pytest.fixture(autouse=True)
def _tag_acceptance(request):
    marker = request.node.get_closest_marker("acceptance")
    if marker is not None:
        request.node.user_properties.append(("criterion", marker.args[0]))
    yield


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed", "error", "xfailed", "xpassed"):
        for rep in terminalreporter.stats.get(outcome, []):
            props = dict(rep.user_properties)
            if "criterion" not in props:
                continue
            if outcome == "passed" and rep.when != "call":
                continue
            status = "PASS" if outcome == "passed" else "FAIL"
            rows.append((rep.nodeid, status, props["criterion"], props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for _, status, name, detail in sorted(rows):
        line = f"{status}  {name}"
        terminalreporter.write_line(f"{line}  [{detail}]" if detail else line)


@pytest.fixture
def triangle() -> LiftedHypergraph:
    return LiftedHypergraph.from_edges(3, [((0, 1), -1.0), ((1, 2), -1.0), ((0, 2), 3.0)])


@pytest.fixture
def lifted_chain() -> LiftedHypergraph:
    return LiftedHypergraph.from_edges(3, [((0, 1), -1.0), ((1, 2), -1.0), ((0, 2), 3.0, Kind.LIFTED)])
