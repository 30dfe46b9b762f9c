import numpy as np
import pytest

from riesz_lab.grid import Box
from riesz_lab.weights import Weight


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def line_box():
    return Box(1, 16.0)


@pytest.fixture(scope="session")
def lebesgue(line_box):
    return Weight.constant(line_box, 4096)


@pytest.fixture(scope="session")
def root_weight(line_box):
    return Weight.power(line_box, 4096, -0.5)


def pytest_terminal_summary(terminalreporter):
    rows = []
    for outcome in ("passed", "failed"):
        for rep in terminalreporter.stats.get(outcome, []):
            if getattr(rep, "when", None) != "call":
                continue
            props = dict(rep.user_properties)
            if "criterion" in props:
                rows.append((props["criterion"], rep.passed, props.get("detail", "")))
    if not rows:
        return
    terminalreporter.section("acceptance criteria")
    for num, ok, detail in sorted(rows):
        terminalreporter.write_line(f"criterion {num:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
