import numpy as np
import pytest
from hypothesis import settings

from plateau.geometry import Box, CircleCurve, sample_curve
from plateau.sheet import init_sheet, parametric_sheet

settings.register_profile("plateau", max_examples=50, deadline=None)
settings.load_profile("plateau")


def annulus(r_in, r_out, M, K, z=0.0):
    def fn(t, th):
        rho = r_in + (r_out - r_in) * t
        return np.stack([rho * np.cos(th), rho * np.sin(th), np.full_like(t, z)], axis=-1)
    return parametric_sheet(fn, M, K)


def cylinder(M, K, radius=1.0, z0=-0.5, z1=0.5):
    ring0 = sample_curve(CircleCurve([0, 0, z0], radius), K)
    ring1 = sample_curve(CircleCurve([0, 0, z1], radius), K)
    return init_sheet(ring0, ring1, M)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit_box():
    return Box([-1.5] * 3, [1.5] * 3)


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdict lines at the end of the run."""
    import sys

    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
