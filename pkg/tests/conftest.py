import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

_ACCEPTANCE: list[tuple[str, str, str]] = []


def data_dir(name: str):
    """Directory of an externally supplied dataset, or None."""
    root = os.environ.get("HYPERVSA_DATA")
    if not root:
        return None
    path = os.path.join(root, name)
    return path if os.path.isdir(path) else None


@pytest.fixture
def gen():
    return np.random.default_rng(12345)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None or not marker.args:
        return
    label = marker.args[0]
    detail = "; ".join(f"{k}={v}" for k, v in item.user_properties)
    if rep.skipped and rep.when in ("setup", "call"):
        reason = rep.longrepr[-1] if isinstance(rep.longrepr, tuple) else ""
        _ACCEPTANCE.append((label, "SKIP", str(reason).removeprefix("Skipped: ")))
    elif rep.when == "call":
        _ACCEPTANCE.append((label, "PASS" if rep.passed else "FAIL", detail))
    elif rep.when == "setup" and rep.failed:
        _ACCEPTANCE.append((label, "FAIL", "setup error"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for label, status, detail in sorted(_ACCEPTANCE, key=lambda r: r[0]):
        line = f"{status:4s}  {label}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
