import math

import numpy as np
import pytest

from canalkit.radius import synth_radius_quadrature
from canalkit.spine import make_builtin_spine, sampled_spine
from canalkit.surface import RadiusFunction, make_canal


def random_spline_spine(seed=42, n=12):
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 2 * np.pi, n)
    pts = np.column_stack([3 * np.cos(t), 3 * np.sin(t), 0.8 * t]) + rng.normal(0, 0.15, (n, 3))
    return sampled_spine(t, pts)


def helix(a=3.0, b=4.0, domain=(0.0, 4.0)):
    return make_builtin_spine("circular_helix", {"a": a, "b": b}, domain=domain)


def build_surfaces():
    """The five regular surfaces used across the suite, by name."""
    hx = helix()
    return {
        "torus": make_canal(make_builtin_spine("circle", {"R": 2.0}), RadiusFunction.constant(0.5)),
        "helix_tube": make_canal(make_builtin_spine("circular_helix", {"a": 3, "b": 4}),
                                 RadiusFunction.constant(0.5)),
        "helix_loc": make_canal(hx, synth_radius_quadrature(hx, math.pi / 2, c=0.1).radius),
        "salkowski": make_canal(make_builtin_spine("salkowski", {"m": 1.0}),
                                RadiusFunction.linear(0.1, 0.3)),
        "random_spline": make_canal(random_spline_spine(), RadiusFunction.sinusoidal(0.2, 0.1)),
    }


@pytest.fixture(scope="session")
def surfaces():
    return build_surfaces()


@pytest.fixture(scope="session")
def torus(surfaces):
    return surfaces["torus"]


@pytest.fixture(scope="session")
def loc_canal(surfaces):
    return surfaces["helix_loc"]


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
