"""Dormand-Prince 5(4) integrator with cubic Hermite dense output.

Hand-rolled rather than scipy's ``solve_ivp`` because curvature-line tracing
needs two hooks: a callback after every accepted step (orientation memory)
and a right-hand side that may stop integration by raising
:class:`StopIntegration` (domain exit, singular point, ...).  When that
happens the step is retried at smaller sizes so the path ends close to the
offending boundary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_C = np.array([0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1, 1])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0])
_B4 = np.array([5179 / 57600, 0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_ERR = _B5 - _B4


class StopIntegration(Exception):
    """Raised by a right-hand side to end integration with ``reason``."""

    def __init__(self, reason):
        super().__init__(reason)
        self.reason = reason


@dataclass
class OdeSolution:
    t: np.ndarray
    y: np.ndarray
    f: np.ndarray
    status: str = "completed"
    nfev: int = 0
    extras: list = field(default_factory=list)

    def __call__(self, t):
        """Cubic Hermite interpolation between accepted steps."""
        t = np.asarray(t, dtype=float)
        ts = self.t
        sgn = 1.0 if ts[-1] >= ts[0] else -1.0
        key = sgn * ts
        i = np.clip(np.searchsorted(key, sgn * t, side="right") - 1, 0, max(len(ts) - 2, 0))
        if len(ts) == 1:
            return np.broadcast_to(self.y[0], t.shape + self.y.shape[1:]).copy()
        t0, t1 = ts[i], ts[i + 1]
        h = (t1 - t0)[..., None]
        x = ((t - t0) / (t1 - t0))[..., None]
        y0, y1, f0, f1 = self.y[i], self.y[i + 1], self.f[i], self.f[i + 1]
        h00 = 2 * x ** 3 - 3 * x ** 2 + 1
        h10 = x ** 3 - 2 * x ** 2 + x
        h01 = -2 * x ** 3 + 3 * x ** 2
        h11 = x ** 3 - x ** 2
        return h00 * y0 + h10 * h * f0 + h01 * y1 + h11 * h * f1


def dopri54(fun, t0, y0, t_end, rtol=1e-9, atol=1e-12, h0=None, max_steps=100000,
            h_max=np.inf, on_accept=None, min_step=1e-12):
    """Integrate y' = fun(t, y) from t0 to t_end.

    ``on_accept(t, y, f)`` runs after each accepted step and may return a
    string to stop with that status.  Status is ``"completed"``,
    ``"step-limit"`` or the reason given by a callback/StopIntegration.
    """
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    t = float(t0)
    direction = 1.0 if t_end >= t0 else -1.0
    nfev = 1
    f = np.asarray(fun(t, y), dtype=float)
    ts, ys, fs = [t], [y.copy()], [f.copy()]
    span = abs(t_end - t0)
    if h0 is None:
        scale = atol + rtol * np.abs(y)
        d0 = np.sqrt(np.mean((y / scale) ** 2))
        d1 = np.sqrt(np.mean((f / scale) ** 2))
        h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h0 = min(h0, span) if span > 0 else 0.0
    h = min(abs(h0), h_max)
    status = "completed"
    steps = 0
    while direction * (t_end - t) > 1e-14 * max(1.0, abs(t_end)):
        if steps >= max_steps:
            status = "step-limit"
            break
        h = min(h, abs(t_end - t), h_max)
        try:
            K = np.empty((7, y.size))
            K[0] = f
            for i in range(1, 7):
                yi = y + direction * h * (np.asarray(_A[i]) @ K[:i])
                K[i] = fun(t + direction * h * _C[i], yi)
            nfev += 6
        except StopIntegration as stop:
            if h <= min_step * max(1.0, abs(t)):
                status = stop.reason
                break
            h *= 0.25
            continue
        y_new = y + direction * h * (_B5 @ K)
        err = direction * h * (_ERR @ K)
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        en = float(np.sqrt(np.mean((err / scale) ** 2)))
        if en <= 1.0:
            t = t + direction * h
            y = y_new
            f = K[6]
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            steps += 1
            if on_accept is not None:
                verdict = on_accept(t, y, f)
                if verdict:
                    status = verdict
                    break
            fac = 5.0 if en == 0 else min(5.0, 0.9 * en ** -0.2)
        else:
            fac = max(0.2, 0.9 * en ** -0.2)
        h *= fac
    return OdeSolution(np.array(ts), np.array(ys), np.array(fs), status, nfev)
