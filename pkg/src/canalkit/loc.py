"""Lines of curvature on canal surfaces and generalized tubes.

The s-curve theta = const of a canal surface is a line of curvature exactly
where the residual g tau + h kappa sin(psi) vanishes for all s (psi is the
formula angle of theta, see :meth:`CanalSurface.formula_angle`).  F = g times
that residual, and f vanishes together with F at regular points.

The theta-curves (characteristic circles) are always lines of curvature.
:func:`theta_curve_obstruction` therefore measures whether the (s, theta)
parameter net as a whole fails to be a curvature net.  It does not claim
that a single characteristic circle fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import (EmptyReportError, ParameterDomainError, RegularityError, StartPointError)
from .forms import (UMBILIC_TOL, DEFAULT_STEP, FirstForm, SecondForm, fundamental_forms_numeric,
                    loc_terms, principal_curvatures, principal_directions, surface_jet)
from .ode import StopIntegration, dopri54
from .surface import CanalSurface

SINGULAR_TOL = 1e-9
TWO_PI = 2 * math.pi


def loc_residual(canal: CanalSurface, s, theta):
    """g tau + h kappa sin(psi) at (s, theta)."""
    _, R, _ = loc_terms(canal, s, theta)
    return R


def _theta_grid(n):
    return np.linspace(0.0, TWO_PI, n, endpoint=False)


def _s_grid(canal, n, margin=0.0):
    lo, hi = canal.domain
    if canal.closed_s:
        return np.linspace(lo, hi, n, endpoint=False)
    return np.linspace(lo + margin, hi - margin, n)


# --------------------------------------------------------------------------
# grid report


@dataclass
class LocReport:
    s: np.ndarray
    theta: np.ndarray
    F: np.ndarray
    f: np.ndarray
    residual: np.ndarray
    regular: np.ndarray
    tol: float
    scale_F: float
    scale_f: float
    violations: list
    theorem3_verified: bool
    theta_curves: str
    s_curve_loc_at: list
    max_abs: dict = field(default_factory=dict)

    @property
    def singular_nodes(self):
        i, j = np.nonzero(~self.regular)
        return [(float(self.s[a]), float(self.theta[b])) for a, b in zip(i, j)]

    def summary(self) -> dict:
        return {
            "theorem3": "verified" if self.theorem3_verified else "violated",
            "theorem3_violations": len(self.violations),
            "theta_curves_loc": self.theta_curves,
            "s_curve_loc_at": [float(x) for x in self.s_curve_loc_at],
            "tol": self.tol,
            "scale_F": self.scale_F,
            "scale_f": self.scale_f,
            "max_abs": {k: float(v) for k, v in self.max_abs.items()},
            "n_nodes": int(self.regular.size),
            "n_singular": int(np.count_nonzero(~self.regular)),
        }

    def to_dict(self) -> dict:
        out = self.summary()
        out["singular_nodes"] = self.singular_nodes
        out["violations"] = [list(map(float, v)) for v in self.violations]
        out["s"] = self.s.tolist()
        out["theta"] = self.theta.tolist()
        for name in ("F", "f", "residual"):
            arr = np.where(self.regular, getattr(self, name), np.nan)
            out[name] = [[None if np.isnan(x) else float(x) for x in row] for row in arr]
        out["regular"] = self.regular.tolist()
        return out


def canal_F_f_grid(canal: CanalSurface, s, theta):
    """Closed-form (F, f, residual, regular) on an (s, theta) grid.

    Singular nodes get f = nan instead of an exception.
    """
    S, TH = np.meshgrid(np.asarray(s, float), np.asarray(theta, float), indexing="ij")
    A, R, Q = loc_terms(canal, S, TH)
    fr = canal.spine.frenet(S)
    sc = canal.scalars(S)
    psi = canal.formula_angle(TH)
    den = np.sqrt(A * A + Q * Q)
    regular = (np.abs(A) > SINGULAR_TOL) & (den > 1e-14)
    with np.errstate(invalid="ignore", divide="ignore"):
        f = np.where(regular, (Q * fr.kappa * sc.g * np.sin(psi) - fr.tau * sc.g * A) / den, np.nan)
    return sc.g * R, f, R, regular


def _median_scale(x):
    m = float(np.median(np.abs(x))) if x.size else 0.0
    return m if m > 0 else 1.0


def verify_theorem3(canal: CanalSurface, n_s: int = 128, n_theta: int = 128, tol: float = 1e-6,
                    loc_tol: float = 1e-8) -> LocReport:
    """Check that F and f vanish together on an n_s x n_theta grid.

    A node violates the equivalence when exactly one of |F| <= tol*scale_F and
    |f| <= tol*scale_f holds, with each scale the median over regular nodes.
    """
    s = _s_grid(canal, n_s)
    theta = _theta_grid(n_theta)
    F, f, R, regular = canal_F_f_grid(canal, s, theta)
    if not regular.any():
        raise EmptyReportError("every grid node is singular")
    sF, sf = _median_scale(F[regular]), _median_scale(f[regular])
    zF = np.abs(F) <= tol * sF
    zf = np.abs(f) <= tol * sf
    bad = regular & (zF != zf)
    violations = [(s[i], theta[j], F[i, j], f[i, j]) for i, j in zip(*np.nonzero(bad))]

    g = canal.scalars(s).g
    rel = np.abs(R) / np.maximum(1.0, g)[:, None]
    col_ok = np.all(rel <= loc_tol, axis=0)
    if np.all(col_ok):
        theta_curves = "vacuous (every s-curve is a line of curvature)"
    else:
        theta_curves = "obstructed"
    report = LocReport(s, theta, F, f, R, regular, tol, sF, sf, violations, not violations,
                       theta_curves, [float(t) for t in theta[col_ok]])
    report.max_abs = {"F": np.max(np.abs(F[regular])), "f": np.max(np.abs(f[regular])),
                      "residual": np.max(np.abs(R[regular]))}
    return report


def theta_curve_obstruction(canal: CanalSurface, s0: float, n_theta: int = 720) -> float:
    """max over theta of |g tau + h kappa sin(psi)| at s = s0.

    Zero means the residual vanishes for every theta (tube over a planar
    spine); then every s-curve is a line of curvature near s0.
    """
    if not canal.spine.contains(s0):
        raise ParameterDomainError(f"s0={s0} outside {canal.domain}")
    theta = _theta_grid(n_theta)
    return float(np.max(np.abs(loc_residual(canal, np.full_like(theta, s0), theta))))


# --------------------------------------------------------------------------
# Vessiot ODE


def vessiot_rhs(canal: CanalSurface, s, theta):
    """d theta/ds = -tau - kappa cot(alpha) sin(psi), cot(alpha) = r'/sqrt(1 - r'^2).

    Written for the formula angle psi; since theta and psi differ by a constant
    the same derivative applies to theta.
    """
    fr = canal.spine.frenet(s)
    r1 = canal.radius.derivative(s, 1)
    cot = r1 / np.sqrt(1 - r1 * r1)
    return -fr.tau - fr.kappa * cot * np.sin(canal.formula_angle(theta))


@dataclass
class VessiotPath:
    s: np.ndarray
    theta: np.ndarray
    solution: Callable = field(repr=False)

    def __call__(self, s):
        return self.solution(np.asarray(s, dtype=float))[..., 0]


def vessiot_integrate(canal: CanalSurface, s0: float, theta0: float, s_end: Optional[float] = None,
                      rtol: float = 1e-9, atol: float = 1e-12, max_steps: int = 100000) -> VessiotPath:
    """Integrate the Vessiot ODE from (s0, theta0) to ``s_end`` (default: domain end)."""
    lo, hi = canal.domain
    if s_end is None:
        s_end = hi
    for x in (s0, s_end):
        if not canal.spine.contains(x):
            raise ParameterDomainError(f"s={x} outside {canal.domain}")

    def rhs(s, y):
        r1 = float(canal.radius.derivative(np.asarray(s), 1))
        if not abs(r1) < 1:
            raise StopIntegration(f"|r'| reached 1 at s={s:.9g}")
        return np.array([float(vessiot_rhs(canal, np.asarray(s), np.asarray(y[0])))])

    sol = dopri54(rhs, s0, [theta0], s_end, rtol=rtol, atol=atol, max_steps=max_steps)
    if sol.status != "completed":
        raise RegularityError(f"Vessiot integration stopped: {sol.status}", where=float(sol.t[-1]))
    return VessiotPath(sol.t, sol.y[:, 0], sol)


# --------------------------------------------------------------------------
# principal-direction field and tracing


@dataclass(frozen=True)
class _FieldSample:
    k1: float
    k2: float
    d1: np.ndarray
    d2: np.ndarray
    first: FirstForm
    second: SecondForm
    umbilic: bool


def _field(surface, s, theta, step):
    first, second = fundamental_forms_numeric(surface, s, theta, step=step, strict=False)
    W = first.E * first.G - first.F ** 2
    if not W > 1e-14 * max(1.0, first.E * first.G):
        raise StopIntegration("singular-point")
    k1, k2, _, _ = (float(x) for x in principal_curvatures(first, second))
    umb = abs(k1 - k2) <= UMBILIC_TOL * max(abs(k1), 1.0)
    d1, d2 = principal_directions(first, second, k1, k2)
    return _FieldSample(k1, k2, np.asarray(d1, float), np.asarray(d2, float), first, second, umb)


def _metric_dot(first, a, b):
    return first.E * a[0] * b[0] + first.F * (a[0] * b[1] + a[1] * b[0]) + first.G * a[1] * b[1]


def _is_singular(surface, s, theta):
    if isinstance(surface, CanalSurface):
        return abs(float(surface.regularity_residual(s, theta))) <= SINGULAR_TOL
    return False


@dataclass
class CurvatureLineTrace:
    s: np.ndarray
    theta: np.ndarray
    points: np.ndarray
    k_n: np.ndarray
    sigma: np.ndarray
    family: int
    reason: str
    solution: Callable = field(repr=False, default=None)

    def __len__(self):
        return len(self.s)

    def as_curve(self):
        """Callable t in [0, 1] -> (s, theta) following the dense output."""
        total = self.sigma[-1]

        def curve(t):
            return self.solution(np.asarray(t, dtype=float) * total)

        return curve

    def end_tangent(self):
        return self.solution.f[-1]


def trace_curvature_line(surface, s0: float, theta0: float, family: int = 1, max_steps: int = 2000,
                         max_length: Optional[float] = None, direction=1, step: float = DEFAULT_STEP,
                         rtol: float = 1e-9, atol: float = 1e-11, h_max: Optional[float] = None
                         ) -> CurvatureLineTrace:
    """Follow the principal direction of ``family`` (1: larger k) from (s0, theta0).

    The path is parametrized by surface arc length.  ``direction`` is +1/-1
    (relative to the default orientation with ds >= 0, or dtheta > 0 when ds
    vanishes) or a 2-vector in (s, theta) to align the first step with.
    Reasons: domain-exit, singular-point, umbilic, step-limit, length-limit.
    """
    if family not in (1, 2):
        raise ValueError("family must be 1 or 2")
    lo, hi = surface.domain
    closed = getattr(surface, "closed_s", False)
    margin = 1.01 * step

    def inside(s):
        return closed or (lo + margin <= s <= hi - margin)

    if not inside(s0):
        raise StartPointError(f"start s={s0} not inside the traceable domain")
    if _is_singular(surface, s0, theta0):
        raise StartPointError(f"start ({s0}, {theta0}) is a singular point")
    try:
        start = _field(surface, s0, theta0, step)
    except StopIntegration:
        raise StartPointError(f"start ({s0}, {theta0}) is a singular point") from None
    if start.umbilic:
        raise StartPointError(f"start ({s0}, {theta0}) is an umbilic")

    d = start.d1 if family == 1 else start.d2
    if np.ndim(direction) == 0:
        ref = d[0] if abs(d[0]) > 1e-12 * np.abs(d).max() else d[1]
        d = d * (math.copysign(1.0, ref) * (1.0 if direction >= 0 else -1.0))
    else:
        if _metric_dot(start.first, d, np.asarray(direction, float)) < 0:
            d = -d
    memory = {"dir": d, "k": start.k1 if family == 1 else start.k2}
    kn = [memory["k"]]

    def rhs(_, y):
        s, th = float(y[0]), float(y[1])
        if not inside(s):
            raise StopIntegration("domain-exit")
        if _is_singular(surface, s, th):
            raise StopIntegration("singular-point")
        smp = _field(surface, s, th, step)
        if smp.umbilic:
            raise StopIntegration("umbilic")
        v = smp.d1 if family == 1 else smp.d2
        if _metric_dot(smp.first, v, memory["dir"]) < 0:
            v = -v
        return v

    def on_accept(_, y, f):
        memory["dir"] = f
        smp = _field(surface, float(y[0]), float(y[1]), step)
        kn.append(smp.k1 if family == 1 else smp.k2)
        return None

    t_end = max_length if max_length is not None else 1e9
    sol = dopri54(rhs, 0.0, [s0, theta0], t_end, rtol=rtol, atol=atol, max_steps=max_steps,
                  h_max=np.inf if h_max is None else h_max, on_accept=on_accept, min_step=1e-9)
    reason = sol.status
    if reason == "completed":
        reason = "length-limit"
    s, th = sol.y[:, 0], sol.y[:, 1]
    pts = surface.point(s, th)
    return CurvatureLineTrace(s, th, pts, np.array(kn), sol.t, family, reason, sol)


# --------------------------------------------------------------------------
# line-of-curvature test for arbitrary parameter curves


@dataclass
class LocCheck:
    is_loc: bool
    max_residual: float
    residuals: np.ndarray
    flagged: list

    def __bool__(self):
        return self.is_loc


def _shape_apply(first, second, v):
    """S v in parameter coordinates, S = I^-1 II."""
    E, F, G = first.E, first.F, first.G
    e, f, g = second.e, second.f, second.g_II
    W = E * G - F * F
    a = (G * e - F * f) * v[0] + (G * f - F * g) * v[1]
    b = (E * f - F * e) * v[0] + (E * g - F * f) * v[1]
    return np.array([a, b]) / W


def is_line_of_curvature(surface, curve: Callable, tol: float = 1e-4, n_samples: int = 200,
                         t_range=(0.0, 1.0), step: float = DEFAULT_STEP) -> LocCheck:
    """Collinearity of S(T) and T along ``curve``: t -> (s, theta).

    Residual at a sample is |S(T) x T| / (|T|^2 |k1 - k2|), the sine of the
    angle between T and the nearest principal direction (exact for small
    angles).  Dividing by |S(T)| instead blows up where the normal curvature
    crosses zero.  Singular and umbilic samples are flagged and excluded.
    """
    t = np.linspace(t_range[0], t_range[1], n_samples)
    ht = 1e-6 * (t_range[1] - t_range[0])
    res, flagged = [], []
    for ti in t:
        p = np.asarray(curve(ti), float)
        ta, tb = max(ti - ht, t_range[0]), min(ti + ht, t_range[1])
        tangent = (np.asarray(curve(tb), float) - np.asarray(curve(ta), float)) / (tb - ta)
        s, th = float(p[0]), float(p[1])
        if _is_singular(surface, s, th):
            flagged.append((float(ti), "singular-point"))
            continue
        jet = surface_jet(surface, s, th, step=step, strict=False)
        if np.any(np.isnan(jet.normal)):
            flagged.append((float(ti), "singular-point"))
            continue
        first = FirstForm(jet.Ks @ jet.Ks, jet.Ks @ jet.Kt, jet.Kt @ jet.Kt)
        second = SecondForm(jet.normal @ jet.Kss, jet.normal @ jet.Kst, jet.normal @ jet.Ktt)
        k1, k2, _, _ = (float(x) for x in principal_curvatures(first, second))
        if abs(k1 - k2) <= UMBILIC_TOL * max(abs(k1), 1.0):
            flagged.append((float(ti), "umbilic"))
            continue
        Sv = _shape_apply(first, second, tangent)
        T3 = tangent[0] * jet.Ks + tangent[1] * jet.Kt
        S3 = Sv[0] * jet.Ks + Sv[1] * jet.Kt
        nT = np.linalg.norm(T3)
        res.append(float(np.linalg.norm(np.cross(S3, T3)) / (nT * nT * abs(k1 - k2))))
    res = np.asarray(res)
    if res.size == 0:
        raise EmptyReportError("every sample was singular or umbilic")
    mx = float(res.max())
    return LocCheck(mx <= tol, mx, res, flagged)


def s_curve(canal_or_surface, theta: float, s_range=None):
    """Parameter curve t -> (s, theta) with s sweeping ``s_range``."""
    lo, hi = s_range if s_range is not None else canal_or_surface.domain

    def c(t):
        return np.array([lo + (hi - lo) * t, theta])

    return c


def theta_curve(s0: float, theta_range=(0.0, TWO_PI)):
    a, b = theta_range

    def c(t):
        return np.array([s0, a + (b - a) * t])

    return c
