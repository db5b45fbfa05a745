import numpy as np
import pytest

from antgen.core import PointPattern, Window
from antgen.intensity import IntensityField

CITY_WINDOW = Window(0.0, 10.0, 0.0, 10.0)
CITY_PEAK = 16.0


def city_intensity(xy):
    """Gaussian bump over a floor: ~530 expected points on [0, 10]^2."""
    xy = np.asarray(xy, dtype=float).reshape(-1, 2)
    r2 = ((xy - 5.0) ** 2).sum(axis=1)
    return 2.0 + 14.0 * np.exp(-r2 / (2 * 2.0**2))


def grid_field(func, box, m, fixed=True):
    xs = np.linspace(box.a, box.b, m)
    ys = np.linspace(box.c, box.d, m)
    X, Y = np.meshgrid(xs, ys)
    v = func(np.column_stack([X.ravel(), Y.ravel()])).reshape(m, m)
    return IntensityField(box, v, np.full((m, m), fixed))


def city_field(m=101):
    return grid_field(city_intensity, CITY_WINDOW, m)


def constant_field(rho, box, m=5):
    return IntensityField(box, np.full((m, m), float(rho)), np.ones((m, m), bool))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def unit():
    return Window(0.0, 1.0, 0.0, 1.0)


@pytest.fixture
def random_pattern(rng, unit):
    return PointPattern(unit, rng.uniform(0, 1, (10, 2)))


# acceptance criteria register "(label, passed, detail)" here; printed at the end of the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for label, ok, detail in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} {label}: {detail}")
