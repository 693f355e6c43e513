import time
from collections import OrderedDict

import numpy as np
import pytest

from cstirap.hamiltonian import f_stirap, stirap
from cstirap.presets import single_stokes
from cstirap.sweep import AxisSpec, sweep2d

CRITERIA = OrderedDict([
    ("1", "Resonant STIRAP transfer rho33 >= 0.99"),
    ("2", "Unchirped detuning falloff rho33(tau*delta=5) < 0.5 rho33(0)"),
    ("3", "C-STIRAP compensation at delta=+-0.14, alpha=+-1e-3"),
    ("4", "Dark-line ridge on the 81x81 CSTIRAP3 grid"),
    ("5", "Four-level selectivity by chirp sign"),
    ("6", "Avoided-crossing metrology (lambda3, lambda4)"),
    ("7", "Delayed-chirp route to |3> for all chirps"),
    ("8", "F-STIRAP maximum coherence and detuning falloff"),
    ("9", "Single-Gaussian-Stokes F-STIRAP coherence"),
    ("10", "C-F-STIRAP on-line coherence"),
    ("11", "Delay-selected coherence in four-level C-F-STIRAP"),
    ("12", "Oracle and property suite"),
    ("desk-scale", "Trajectory <= 2 s, 81x81 sweep <= 90 s"),
])

_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id): acceptance criterion covered by the test")


def pytest_runtest_logreport(report):
    ids = getattr(report, "criterion_ids", None)
    if not ids:
        return
    if report.when == "call" or report.outcome == "failed":
        for cid in ids:
            _outcomes.setdefault(cid, []).append(report.outcome)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    report.criterion_ids = [m.args[0] for m in item.iter_markers("criterion")]


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid, title in CRITERIA.items():
        results = _outcomes.get(cid)
        if not results:
            status = "NOT RUN"
        elif all(r == "passed" for r in results):
            status = "PASS"
        elif any(r == "failed" for r in results):
            status = "FAIL"
        else:
            status = "SKIP"
        tr.write_line(f"criterion {cid:>10}: {status:7} {title} ({len(results or [])} checks)")


# --- shared 81x81 grids -----------------------------------------------------------------

DELTA_AXIS = AxisSpec.linspace("delta", -0.2, 0.2, 81)
CHIRP_AXIS = AxisSpec.linspace("chirp", -2e-3, 2e-3, 81)

_GRIDS = {}


def _timed_sweep(key, base, observable, x=DELTA_AXIS, y=CHIRP_AXIS):
    if key not in _GRIDS:
        start = time.perf_counter()
        res = sweep2d(base, x, y, observable)
        _GRIDS[key] = (res, time.perf_counter() - start)
    return _GRIDS[key]


@pytest.fixture(scope="session")
def fig4_grid():
    return _timed_sweep("fig4", stirap("CSTIRAP3"), "rho33")


@pytest.fixture(scope="session")
def fig16_grid():
    return _timed_sweep("fig16", f_stirap("CFSTIRAP3"), "abs_rho13")


@pytest.fixture(scope="session")
def fig14_grid():
    x = AxisSpec.linspace("delay", 0.0, 40.0, 81)
    y = AxisSpec.linspace("pump_area", 2.0, 14.0, 81)
    return _timed_sweep("fig14", single_stokes(), "abs_rho13", x, y)


def on_line_mask(res, slope, max_abs_x=None):
    """Cells whose chirp lies within half a grid step of ``slope * delta``."""
    xx, yy = np.meshgrid(res.x.values, res.y.values)
    step = res.y.values[1] - res.y.values[0]
    mask = np.abs(yy - slope * xx) <= 0.5 * step + 1e-15
    if max_abs_x is not None:
        mask &= np.abs(xx) <= max_abs_x + 1e-12
    return mask
