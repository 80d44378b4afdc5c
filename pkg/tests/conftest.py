import math

import numpy as np
import pytest
from hypothesis import settings

from fracwin.core import Trajectory, UniformGrid

settings.register_profile("repo", deadline=None, derandomize=True, print_blob=True)
settings.load_profile("repo")


def sample(fn, h, t_end, t0=0.0):
    """Trajectory of a scalar or vector callable on ``[t0, t_end]``."""
    grid = UniformGrid.spanning(t0, t_end, h)
    return Trajectory(grid, np.array([fn(t) for t in grid.nodes()], dtype=float))


def orders(errors):
    return [math.log2(errors[i] / errors[i + 1]) for i in range(len(errors) - 1)]


# ---------------------------------------------------------------- acceptance summary

_CRITERIA: dict[int, list[tuple[str, str]]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion covered by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "xfail" if hasattr(rep, "wasxfail") and rep.skipped else rep.outcome
        _CRITERIA.setdefault(mark.args[0], []).append((item.name, status))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        parts = _CRITERIA[n]
        bad = [f"{name} {status}" for name, status in parts if status != "passed"]
        verdict = "PASS" if not bad else "FAIL"
        detail = f"{len(parts)} checks" if not bad else "; ".join(bad)
        terminalreporter.write_line(f"criterion {n:2d}: {verdict} ({detail})")
