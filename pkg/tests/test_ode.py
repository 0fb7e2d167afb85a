import math

import numpy as np
import pytest

from canalkit.ode import StopIntegration, dopri54


def test_harmonic_oscillator():
    sol = dopri54(lambda t, y: np.array([y[1], -y[0]]), 0.0, [1.0, 0.0], 10.0)
    assert sol.status == "completed"
    assert sol.t[-1] == 10.0
    assert abs(sol.y[-1, 0] - math.cos(10.0)) <= 1e-8
    t = np.linspace(0, 10, 301)
    # cubic Hermite dense output is fourth order between steps
    assert np.abs(sol(t)[:, 0] - np.cos(t)).max() <= 1e-5


def test_backward_integration():
    sol = dopri54(lambda t, y: -2 * y, 1.0, [1.0], 0.0)
    assert sol.y[-1, 0] == pytest.approx(math.exp(2.0), rel=1e-9)
    assert float(sol(np.array(0.5))[0]) == pytest.approx(math.exp(1.0), rel=1e-5)


def test_stop_integration_reason():
    def rhs(t, y):
        if t > 0.5:
            raise StopIntegration("wall")
        return np.array([1.0])

    sol = dopri54(rhs, 0.0, [0.0], 2.0)
    assert sol.status == "wall"
    assert sol.t[-1] <= 0.5 + 1e-9


def test_on_accept_can_stop():
    seen = []

    def cb(t, y, f):
        seen.append(t)
        return "enough" if len(seen) == 3 else None

    sol = dopri54(lambda t, y: y, 0.0, [1.0], 5.0, h_max=0.1, on_accept=cb)
    assert sol.status == "enough" and len(sol.t) == 4


def test_step_limit_and_h_max():
    sol = dopri54(lambda t, y: np.zeros(1), 0.0, [0.0], 1.0, max_steps=5, h_max=0.01)
    assert sol.status == "step-limit"
    assert np.diff(sol.t).max() <= 0.01 + 1e-15


def test_zero_length_interval():
    sol = dopri54(lambda t, y: y, 2.0, [3.0], 2.0)
    assert sol.status == "completed" and sol.y[-1, 0] == 3.0
