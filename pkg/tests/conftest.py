import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

_acceptance_results = []


def textured(shape, seed=0, scale=2.0):
    """Smoothed random pattern with integer intensities in 0..255."""
    rng = np.random.default_rng(seed)
    img = gaussian_filter(rng.standard_normal(shape), scale)
    img = (img - img.min()) / (img.max() - img.min())
    return np.floor(20 + 215 * img + 0.5)


@pytest.fixture
def texture():
    return textured


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(label): exit criterion, reported in the summary")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    # setup time counts too: shared corpora are built in module fixtures
    if report.when == "setup":
        item._acceptance_setup = report.duration
        if report.outcome == "passed":
            return
    elif report.when != "call":
        return
    duration = report.duration + (getattr(item, "_acceptance_setup", 0.0) if report.when == "call" else 0.0)
    _acceptance_results.append((marker.args[0], report.outcome, duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    status = {"passed": "PASS", "skipped": "SKIP"}
    for label, outcome, duration in _acceptance_results:
        terminalreporter.write_line(f"[{status.get(outcome, 'FAIL')}] {label} ({duration:.1f}s)")
