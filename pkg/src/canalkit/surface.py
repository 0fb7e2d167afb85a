"""Canal surfaces, tubes and generalized tubes over a spine curve.

A canal surface is evaluated as::

    K(s, theta) = C(s) - h(s) T(s) -/+ g(s) (cos(theta) N(s) + sin(theta) B(s))
    h = r r',   g = r sqrt(1 - r'^2)

The closed-form invariants in :mod:`canalkit.forms` are written for the ``+``
sign.  On the ``minus`` branch (the default) they are evaluated at the shifted
angle ``theta + pi``, which lands on the same surface point; see
:meth:`CanalSurface.formula_angle`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import interpolate

from ._numerics import fd5, gl_integrate
from .errors import PositivityError, ProfileError, RegularityError
from .spine import SpineCurve

BRANCHES = ("minus", "plus")
PRECONDITION_SAMPLES = 512


@dataclass(frozen=True, eq=False)
class RadiusFunction:
    """r(s) with its first two derivatives.

    ``d2r`` is needed only by the closed forms (through h' and g').
    """

    form: str
    r: Callable = field(repr=False)
    dr: Callable = field(repr=False)
    d2r: Callable = field(repr=False)
    params: Mapping = field(default_factory=dict)
    domain: Optional[tuple] = None

    def __call__(self, s):
        return self.r(np.asarray(s, dtype=float))

    def derivative(self, s, order=1):
        s = np.asarray(s, dtype=float)
        return self.dr(s) if order == 1 else self.d2r(s)

    @classmethod
    def constant(cls, c):
        c = float(c)
        return cls("constant", lambda s: np.full_like(s, c), np.zeros_like, np.zeros_like,
                   MappingProxyType({"c": c}))

    @classmethod
    def linear(cls, a, c):
        a, c = float(a), float(c)
        return cls("linear", lambda s: a * s + c, lambda s: np.full_like(s, a), np.zeros_like,
                   MappingProxyType({"a": a, "c": c}))

    @classmethod
    def sinusoidal(cls, c, amplitude, omega=1.0, phase=0.0):
        c, A, w, p = float(c), float(amplitude), float(omega), float(phase)
        return cls("sinusoidal",
                   lambda s: c + A * np.sin(w * s + p),
                   lambda s: A * w * np.cos(w * s + p),
                   lambda s: -A * w * w * np.sin(w * s + p),
                   MappingProxyType({"c": c, "amplitude": A, "omega": w, "phase": p}))

    @classmethod
    def sampled(cls, s, r):
        """Quintic (or cubic, for < 6 samples) interpolant of tabulated radii."""
        s = np.asarray(s, dtype=float)
        r = np.asarray(r, dtype=float)
        if s.ndim != 1 or s.shape != r.shape or s.size < 4 or np.any(np.diff(s) <= 0):
            raise ValueError("sampled radius needs >= 4 increasing (s, r) pairs")
        spl = interpolate.make_interp_spline(s, r, k=5 if s.size >= 6 else 3)
        d1, d2 = spl.derivative(1), spl.derivative(2)
        return cls("user_sampled", spl, d1, d2, MappingProxyType({"n_points": int(s.size)}),
                   (float(s[0]), float(s[-1])))

    @classmethod
    def from_integrand(cls, integrand, domain, s_ref, c, form="quadrature_table",
                       params=None, n_table=256):
        """r(s) = c + integral of ``integrand`` from ``s_ref`` to s.

        The cumulative table is built once; off-node values add a 20-point
        Gauss-Legendre tail so r is smooth to roundoff.  r' is the integrand
        itself and r'' a 5-point difference of it.
        """
        from ._numerics import adaptive_gl

        lo, hi = map(float, domain)
        nodes = np.linspace(lo, hi, n_table + 1)
        tol = 1e-13 * max(1.0, hi - lo)
        cells = [adaptive_gl(integrand, a, b, tol) for a, b in zip(nodes[:-1], nodes[1:])]
        cum = np.concatenate([[0.0], np.cumsum(cells)])

        def prim(s):
            i = np.clip(np.searchsorted(nodes, s, side="right") - 1, 0, n_table - 1)
            return cum[i] + gl_integrate(integrand, nodes[i], s)

        base = float(prim(np.asarray(float(s_ref))))
        h2 = 1e-3 * max(1.0, hi - lo) / 8
        p = {"s_ref": float(s_ref), "c": float(c), "n_table": n_table}
        p.update(params or {})
        return cls(form,
                   lambda s: c + prim(s) - base,
                   lambda s: integrand(np.asarray(s, dtype=float)),
                   lambda s: fd5(integrand, s, h2, 1),
                   MappingProxyType(p), (lo, hi))


def radius_from_dict(doc: Mapping) -> RadiusFunction:
    form = doc.get("form")
    p = doc.get("params", {})
    if form == "constant":
        return RadiusFunction.constant(p["c"] if "c" in p else p["r"])
    if form == "linear":
        return RadiusFunction.linear(p["a"], p["c"])
    if form == "sinusoidal":
        return RadiusFunction.sinusoidal(p["c"], p["amplitude"], p.get("omega", 1.0), p.get("phase", 0.0))
    if form == "user_sampled":
        rows = np.asarray(doc["rows"], dtype=float)
        return RadiusFunction.sampled(rows[:, 0], rows[:, 1])
    raise ValueError(f"radius form {form!r} needs a spine; use the radius module")


@dataclass(frozen=True)
class CanalScalars:
    r: np.ndarray
    r1: np.ndarray
    r2: np.ndarray
    h: np.ndarray
    g: np.ndarray
    h1: np.ndarray
    g1: np.ndarray


@dataclass(frozen=True, eq=False)
class CanalSurface:
    spine: SpineCurve
    radius: RadiusFunction
    branch: str = "minus"

    @property
    def domain(self):
        return self.spine.domain

    @property
    def sign(self) -> float:
        return -1.0 if self.branch == "minus" else 1.0

    @property
    def closed_s(self) -> bool:
        return self.spine.closed

    def formula_angle(self, theta):
        """Angle at which the ``+``-branch formulas describe this surface point."""
        theta = np.asarray(theta, dtype=float)
        return theta if self.branch == "plus" else theta + math.pi

    def branch_angle(self, psi):
        """Inverse of :meth:`formula_angle`, wrapped to [0, 2 pi)."""
        psi = np.asarray(psi, dtype=float)
        return np.mod(psi if self.branch == "plus" else psi - math.pi, 2 * math.pi)

    def scalars(self, s) -> CanalScalars:
        s = np.asarray(s, dtype=float)
        r, r1, r2 = self.radius(s), self.radius.derivative(s, 1), self.radius.derivative(s, 2)
        q = np.sqrt(1 - r1 * r1)
        h = r * r1
        g = r * q
        return CanalScalars(r, r1, r2, h, g, r1 * r1 + r * r2, r1 * q - r * r1 * r2 / q)

    def point(self, s, theta):
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        fr = self.spine.frenet(s)
        sc = self.scalars(s)
        C = self.spine.position(s)
        ring = np.cos(theta)[..., None] * fr.N + np.sin(theta)[..., None] * fr.B
        return C - sc.h[..., None] * fr.T + self.sign * sc.g[..., None] * ring

    def regularity_residual(self, s, theta):
        """kappa g cos(psi) + h' - 1; zero exactly on the singular locus."""
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        kappa = self.spine.frenet(s).kappa
        sc = self.scalars(s)
        return kappa * sc.g * np.cos(self.formula_angle(theta)) + sc.h1 - 1


def _precondition_grid(domain):
    lo, hi = domain
    return np.linspace(lo, hi, PRECONDITION_SAMPLES)


def make_canal(spine: SpineCurve, radius: RadiusFunction, sign_branch: str = "minus") -> CanalSurface:
    """Canal surface of ``radius`` spheres along ``spine``.

    Checks r > 0 and |r'| < 1 on a 512-point grid including the endpoints.
    The check is not exhaustive.
    """
    if sign_branch not in BRANCHES:
        raise ValueError(f"sign_branch must be one of {BRANCHES}")
    s = _precondition_grid(spine.domain)
    r = radius(s)
    if np.any(~(r > 0)):
        i = int(np.argmin(np.where(np.isnan(r), -np.inf, r)))
        raise PositivityError(f"radius {r[i]:.6g} <= 0 at s={s[i]:.6g}", where=float(s[i]))
    r1 = radius.derivative(s, 1)
    if np.any(~(np.abs(r1) < 1)):
        i = int(np.argmax(np.where(np.isnan(r1), np.inf, np.abs(r1))))
        raise RegularityError(f"|r'| = {abs(r1[i]):.6g} >= 1 at s={s[i]:.6g}", where=float(s[i]))
    return CanalSurface(spine, radius, sign_branch)


def eval_canal_point(canal: CanalSurface, s, theta):
    return canal.point(s, theta)


@dataclass(frozen=True)
class RegularityCheck:
    regular: bool
    residual: float
    covanish_residual: Optional[float] = None


def is_regular_at(canal: CanalSurface, s, theta, tol=1e-9) -> RegularityCheck:
    """Regular unless |kappa g cos(psi) + h' - 1| <= tol.

    At a singular hit the co-vanishing quantity g' - h kappa cos(psi) is
    reported as well (it must vanish there too).
    """
    res = float(canal.regularity_residual(s, theta))
    if abs(res) > tol:
        return RegularityCheck(True, res)
    kappa = float(canal.spine.frenet(np.asarray(float(s))).kappa)
    sc = canal.scalars(np.asarray(float(s)))
    co = float(sc.g1 - sc.h * kappa * np.cos(canal.formula_angle(float(theta))))
    return RegularityCheck(False, res, co)


# --------------------------------------------------------------------------
# generalized tubes


@dataclass(frozen=True, eq=False)
class Profile:
    """Cross-section radius u(theta) with derivatives."""

    u: Callable = field(repr=False)
    du: Callable = field(repr=False)
    d2u: Callable = field(repr=False)
    params: Mapping = field(default_factory=dict)

    def __call__(self, theta):
        return self.u(np.asarray(theta, dtype=float))

    @classmethod
    def fourier(cls, a0, cos=(), sin=()):
        """u = a0 + sum a_k cos(k theta) + b_k sin(k theta), k = 1, 2, ..."""
        a = np.asarray(cos, dtype=float)
        b = np.asarray(sin, dtype=float)
        ka = np.arange(1, a.size + 1)
        kb = np.arange(1, b.size + 1)

        def series(theta, order):
            th = np.asarray(theta, dtype=float)[..., None]
            out = np.zeros(np.shape(theta))
            if a.size:
                shift = order * math.pi / 2
                out = out + np.sum(a * ka ** order * np.cos(ka * th + shift), axis=-1)
            if b.size:
                shift = order * math.pi / 2
                out = out + np.sum(b * kb ** order * np.sin(kb * th + shift), axis=-1)
            return out + (a0 if order == 0 else 0.0)

        return cls(lambda t: series(t, 0), lambda t: series(t, 1), lambda t: series(t, 2),
                   MappingProxyType({"a0": float(a0), "cos": tuple(a), "sin": tuple(b)}))

    @classmethod
    def from_callable(cls, u, du=None, d2u=None):
        h1, h2 = 1e-5, 1e-3
        du = du or (lambda t: fd5(u, t, h1, 1))
        d2u = d2u or (lambda t: fd5(u, t, h2, 2))
        return cls(u, du, d2u)


def profile_from_dict(doc: Mapping) -> Profile:
    if doc.get("form") == "constant":
        return Profile.fourier(float(doc["params"]["u"]))
    if doc.get("form") == "fourier":
        p = doc["params"]
        return Profile.fourier(p["a0"], p.get("cos", ()), p.get("sin", ()))
    raise ValueError(f"unknown profile form {doc.get('form')!r}")


@dataclass(frozen=True, eq=False)
class GeneralizedTube:
    spine: SpineCurve
    profile: Profile

    @property
    def domain(self):
        return self.spine.domain

    @property
    def closed_s(self) -> bool:
        return self.spine.closed

    def point(self, s, theta):
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        fr = self.spine.frenet(s)
        u = self.profile(theta)[..., None]
        ring = np.cos(theta)[..., None] * fr.N + np.sin(theta)[..., None] * fr.B
        return self.spine.position(s) + u * ring


def make_generalized_tube(spine: SpineCurve, u_profile: Profile) -> GeneralizedTube:
    """Generalized tube X = Gamma + u(theta)(cos theta N + sin theta B)."""
    th = np.linspace(0.0, 2 * math.pi, 1025)
    u = u_profile(th)
    if np.any(~(u > 0)):
        raise ProfileError(f"profile must be positive, min u = {np.nanmin(u):.6g}")
    if abs(u[0] - u[-1]) > 1e-12 * max(1.0, abs(u[0])):
        raise ProfileError(f"profile not periodic: u(0)={u[0]:.12g}, u(2pi)={u[-1]:.12g}")
    return GeneralizedTube(spine, u_profile)


def eval_gt_point(gt: GeneralizedTube, s, theta):
    return gt.point(s, theta)


@dataclass(frozen=True, eq=False)
class ParametricSurface:
    """Any (s, theta) -> R^3 map; used for oracle tests of the forms module."""

    func: Callable
    domain: tuple
    closed_s: bool = False

    def point(self, s, theta):
        s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
        return self.func(s, theta)
