"""Shared fixtures and the acceptance-criteria summary."""

import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from nlbd import bdprocess as bd  # noqa: E402
from nlbd.bernstein import BernsteinFunction  # noqa: E402

CRITERIA = {
    1: "Pearson exactness",
    2: "Orthonormality and duality",
    3: "Eigen-relation",
    4: "Mittag-Leffler",
    5: "Eigenfunction cross-validation",
    6: "Kernel checks",
    7: "Monte Carlo vs spectral",
    8: "Covariance",
    9: "Dependence classification",
    10: "Classical reduction regression",
}

_results: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")


def pytest_runtest_logreport(report):
    crit = dict(report.user_properties).get("criterion")
    if crit is None:
        return
    if report.when == "call" or report.outcome != "passed":
        prev = _results.get(crit, {"passed": True, "ran": False, "seconds": 0.0})
        prev["ran"] = prev["ran"] or report.when == "call"
        prev["passed"] = prev["passed"] and report.outcome == "passed"
        prev["seconds"] += report.duration
        _results[crit] = prev


@pytest.fixture(autouse=True)
def _tag_criterion(request):
    m = request.node.get_closest_marker("criterion")
    if m is not None:
        request.node.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _results:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n, name in CRITERIA.items():
        r = _results.get(n)
        if r is None:
            status = "NOT RUN"
        else:
            status = "PASS" if r["passed"] and r["ran"] else "FAIL"
        secs = f"  ({r['seconds']:.1f} s)" if r else ""
        tr.write_line(f"criterion {n:2d} [{status}] {name}{secs}")


# ---------------------------------------------------------------------------
# fixtures

@pytest.fixture(scope="session")
def families():
    """One representative spec per built-in family."""
    return {
        "immigration-death": bd.make("immigration-death", b=1.5, d=1.0),
        "meixner": bd.make("meixner", b=0.5, d=1.0, beta=2.0),
        "krawtchouk": bd.make("krawtchouk", b=1.0, d=2.0, N=6),
        "hahn": bd.make("hahn", d=1.0, alpha=1, beta=2, N=5),
    }


@pytest.fixture(scope="session")
def subordinators():
    return {
        "stable": BernsteinFunction.stable(0.5),
        "tempered": BernsteinFunction.tempered(0.5, 1.0),
        "gamma": BernsteinFunction.gamma(),
        "geometric": BernsteinFunction.geometric_stable(0.6),
    }


def states_of(spec, xmax=40):
    return np.arange(spec.N + 1) if spec.finite else np.arange(xmax + 1)
