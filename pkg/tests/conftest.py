import numpy as np
import pytest

from bhtlab.function_core import SampledFunction


def gaussian(length=16.0, n=512, center=0.0, width=1.0, freq=0.0):
    g = SampledFunction.on_grid(length, n)
    u = (g.x - center) / width
    v = np.exp(-np.pi * u * u)
    if freq:
        v = v * np.exp(2j * np.pi * freq * g.x)
    return g.like(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
