import os

import numpy as np
import pytest
from hypothesis import settings

from vrteleop.kinematics import ArmModel

settings.register_profile("default", deadline=None, max_examples=100)
settings.register_profile("stress", deadline=None, max_examples=1000)
settings.load_profile(os.environ.get("VRTELEOP_HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def model():
    return ArmModel()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_joints(rng, n, model=None, min_bend=0.05):
    """In-limit joint vectors with q2, q4, q6 bounded away from zero."""
    model = model or ArmModel()
    lo, hi = model.lower, model.upper
    q = rng.uniform(lo, hi, size=(n, 7))
    for i in (1, 3, 5):
        small = np.abs(q[:, i]) < min_bend
        q[small, i] = np.where(q[small, i] >= 0, min_bend, -min_bend)
    return q


# -- acceptance reporting: one pass/fail line per criterion ---------------------

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number and title")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None or rep.when not in ("setup", "call"):
        return
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "details": []})
    if rep.failed:
        entry["ok"] = False
    detail = getattr(item, "criterion_detail", None)
    if rep.when == "call" and detail:
        entry["details"].append(detail)


@pytest.fixture
def detail(request):
    """Call with a short measured-value string; it is printed with the criterion line."""
    def record(text: str) -> None:
        request.node.criterion_detail = text
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] else "FAIL"
        extra = f" ({'; '.join(e['details'])})" if e["details"] else ""
        terminalreporter.write_line(f"criterion {n:2d} {status}: {e['title']}{extra}")
