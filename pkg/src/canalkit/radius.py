"""Radius functions whose s-parameter curves are lines of curvature.

For a fixed angle theta* the s-curve is a line of curvature when

    tau sqrt(1 - r'^2) + kappa r' sin(psi) = 0,

which gives r' = tau / sqrt(tau^2 + kappa^2 sin^2 theta*).  Signed tau is
used, so r increases wherever tau > 0.  Substituting back forces
sin(psi) = -|sin theta*|, which picks two angles per branch (one when
|sin theta*| = 1).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Optional

import numpy as np
from scipy import optimize

from .errors import (DegenerateIntegrandError, ParameterDomainError, PositivityError,
                     UnsupportedAngleError)
from .loc import loc_residual
from .spine import SpineCurve
from .surface import BRANCHES, CanalSurface, RadiusFunction

MIN_RADIUS = 0.05
GRID = 512


@dataclass
class SynthesisResult:
    radius: RadiusFunction
    theta_star: float
    valid_thetas: list
    domain: Optional[tuple]
    c: float
    residual_max: float
    every_theta: bool = False
    branch: str = "minus"
    slope: Optional[float] = None
    extras: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "theta_star": self.theta_star,
            "form": self.radius.form,
            "valid_thetas": "all" if self.every_theta else [float(t) for t in self.valid_thetas],
            "domain": None if self.domain is None else [float(x) for x in self.domain],
            "c": self.c,
            "residual_max": self.residual_max,
            "branch": self.branch,
        }
        if self.slope is not None:
            out["slope_or_table"] = {"slope": self.slope}
        else:
            out["slope_or_table"] = {"table": "radius.csv"}
        out.update(self.extras)
        return out

    def table(self, n=GRID):
        """(s, r, r') rows on a uniform grid over the spine domain."""
        lo, hi = self.radius.domain if self.radius.domain else self.extras["spine_domain"]
        s = np.linspace(lo, hi, n)
        return np.column_stack([s, self.radius(s), self.radius.derivative(s, 1)])


def valid_thetas(theta_star: float, branch: str = "minus") -> list:
    """Branch angles theta with sin(psi) = -|sin theta*|."""
    a = math.asin(min(1.0, abs(math.sin(theta_star))))
    psis = (-a, math.pi + a)
    shift = 0.0 if branch == "plus" else -math.pi
    out = []
    for p in sorted(math.fmod(p + shift + 4 * math.pi, 2 * math.pi) for p in psis):
        p = 0.0 if p > 2 * math.pi - 1e-12 else p
        if not any(abs(p - q) < 1e-12 for q in out):
            out.append(p)
    return sorted(out)


def _valid_run(s, ok):
    """Longest contiguous run of ``ok`` grid points, as an (s0, s1) interval."""
    best, start, best_len = None, None, 0
    for i, v in enumerate(list(ok) + [False]):
        if v and start is None:
            start = i
        elif not v and start is not None:
            if i - start > best_len:
                best, best_len = (float(s[start]), float(s[i - 1])), i - start
            start = None
    return best


def _residual_max(spine, radius, thetas, branch, every_theta):
    canal = CanalSurface(spine, radius, branch)
    lo, hi = spine.domain
    s = np.linspace(lo, hi, GRID)
    if every_theta:
        thetas = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    vals = [np.max(np.abs(loc_residual(canal, s, np.full_like(s, t)))) for t in thetas]
    return float(max(vals)) if vals else 0.0


def synth_radius_quadrature(spine: SpineCurve, theta_star: float, c: Optional[float] = None,
                            s_ref: Optional[float] = None, branch: str = "minus",
                            n_table: int = 256) -> SynthesisResult:
    """r(s) = c + int_{s_ref}^{s} tau / sqrt(tau^2 + kappa^2 sin^2 theta*) ds.

    ``s_ref`` defaults to 0 when it lies in the spine domain, else the start.
    Without ``c`` the constant is chosen so that min r = 0.05.
    """
    if branch not in BRANCHES:
        raise ValueError(f"branch must be one of {BRANCHES}")
    lo, hi = spine.domain
    if s_ref is None:
        s_ref = 0.0 if lo <= 0.0 <= hi else lo
    sin2 = math.sin(theta_star) ** 2
    grid = np.linspace(lo, hi, GRID)
    fr = spine.frenet(grid)
    den = fr.tau ** 2 + fr.kappa ** 2 * sin2
    if np.any(den <= 1e-24):
        i = int(np.argmin(den))
        raise DegenerateIntegrandError(
            f"tau^2 + kappa^2 sin^2(theta*) vanishes at s={grid[i]:.6g}")
    planar = bool(np.all(np.abs(fr.tau) <= 1e-12 * np.maximum(1.0, fr.kappa)))

    def integrand(s):
        f = spine.frenet(s)
        return f.tau / np.sqrt(f.tau ** 2 + f.kappa ** 2 * sin2)

    params = {"theta_star": float(theta_star), "spine": spine.kind}
    if planar:
        c0 = MIN_RADIUS if c is None else float(c)
        radius = RadiusFunction.constant(c0)
        prim_min = 0.0
    else:
        probe = RadiusFunction.from_integrand(integrand, (lo, hi), s_ref, 0.0, params=params,
                                              n_table=n_table)
        vals = probe(grid)
        i = int(np.argmin(vals))
        near = optimize.minimize_scalar(lambda x: float(probe(np.asarray(x))), method="bounded",
                                        bounds=(grid[max(i - 1, 0)], grid[min(i + 1, GRID - 1)]),
                                        options={"xatol": 1e-12})
        prim_min = min(float(vals[i]), float(near.fun))
        c0 = MIN_RADIUS - prim_min if c is None else float(c)
        radius = RadiusFunction.from_integrand(integrand, (lo, hi), s_ref, c0, params=params,
                                               n_table=n_table)
    r = radius(grid)
    if np.any(r <= 0):
        i = int(np.argmin(r))
        raise PositivityError(
            f"constant c={c0:.6g} too small: r={r[i]:.6g} at s={grid[i]:.6g} "
            f"(need c > {-prim_min:.6g})", where=float(grid[i]))
    r1 = radius.derivative(grid, 1)
    domain = _valid_run(grid, (r > 0) & (np.abs(r1) < 1))
    if domain is not None and domain != (lo, hi) and np.all(np.abs(r1) < 1):
        domain = (lo, hi)
    thetas = valid_thetas(theta_star, branch)
    res = _residual_max(spine, radius, thetas, branch, planar)
    return SynthesisResult(radius, float(theta_star), thetas, domain, float(c0), res,
                           every_theta=planar, branch=branch,
                           extras={"s_ref": float(s_ref), "spine_domain": [lo, hi]})


def _linear(slope, c, form, params):
    rad = RadiusFunction.linear(slope, c)
    p = dict(rad.params)
    p.update(params)
    p["regular"] = bool(abs(slope) < 1)
    object.__setattr__(rad, "params", MappingProxyType(p))
    object.__setattr__(rad, "form", form)
    if not abs(slope) < 1:
        warnings.warn(f"slope {slope:.6g} reaches |r'| = 1: the canal surface is not regular",
                      RuntimeWarning, stacklevel=3)
    return rad


def synth_radius_general_helix(phi: float, theta_star: float, c: float) -> RadiusFunction:
    """Linear radius a s + c with a = 1 / sqrt(1 + cot^2(phi) sin^2(theta*))."""
    if not 0 < phi < math.pi / 2:
        raise ParameterDomainError(f"phi must lie in (0, pi/2), got {phi}")
    a = 1.0 / math.sqrt(1.0 + math.sin(theta_star) ** 2 / math.tan(phi) ** 2)
    return _linear(a, c, "linear", {"phi": float(phi), "theta_star": float(theta_star)})


def synth_radius_circular_helix(a: float, b: float, theta_star: float, c: float) -> RadiusFunction:
    """Linear radius with slope b / sqrt(b^2 + a^2 sin^2(theta*))."""
    if not a > 0:
        raise ParameterDomainError(f"helix a must be positive, got {a}")
    if b == 0:
        raise ParameterDomainError("helix b must be non-zero")
    slope = b / math.sqrt(b * b + (a * math.sin(theta_star)) ** 2)
    return _linear(slope, c, "linear",
                   {"helix_a": float(a), "helix_b": float(b), "theta_star": float(theta_star)})


def synth_radius_salkowski(phi: float, theta_star: float, c: float = 0.0,
                           domain: Optional[tuple] = None) -> RadiusFunction:
    """r(s) = sqrt(cos^2 t s^2 + sin^2 t tan^2 phi) / cos^2 t + c, t = theta*.

    ``domain`` defaults to |m s| <= 0.9 with m = cot(phi).
    """
    if not 0 < phi < math.pi / 2:
        raise ParameterDomainError(f"phi must lie in (0, pi/2), got {phi}")
    c2 = math.cos(theta_star) ** 2
    if c2 < 1e-14:
        raise UnsupportedAngleError(
            "closed form divides by cos^2(theta*); use synth_radius_quadrature at theta* = +-pi/2")
    m = 1.0 / math.tan(phi)
    lo, hi = (-0.9 / m, 0.9 / m) if domain is None else map(float, domain)
    if max(abs(lo), abs(hi)) * m >= 1:
        raise ParameterDomainError(f"domain ({lo}, {hi}) violates |m s| < 1 for m={m:.6g}")
    k = math.sin(theta_star) ** 2 * math.tan(phi) ** 2

    def q(s):
        return c2 * s * s + k

    return RadiusFunction(
        "salkowski_closed",
        lambda s: np.sqrt(q(s)) / c2 + c,
        lambda s: s / np.sqrt(q(s)),
        lambda s: k / q(s) ** 1.5,
        MappingProxyType({"phi": float(phi), "m": m, "theta_star": float(theta_star), "c": float(c)}),
        (lo, hi))


@dataclass
class TorsionBoundReport:
    loc_holds: bool
    sin_psi: Optional[float]
    r_increasing: bool
    bound_holds: bool
    r_prime_below_inv_sqrt2: bool
    max_abs_tau_over_kappa: float
    max_r_prime: float

    @property
    def claimed_implication_holds(self) -> bool:
        """loc and increasing imply |tau| < kappa."""
        return not (self.loc_holds and self.r_increasing) or self.bound_holds

    @property
    def restricted_implication_holds(self) -> bool:
        """Same implication with the extra hypothesis r' < 1/sqrt(2)."""
        return (not (self.loc_holds and self.r_increasing and self.r_prime_below_inv_sqrt2)
                or self.bound_holds)

    def to_dict(self) -> dict:
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        d["claimed_implication_holds"] = self.claimed_implication_holds
        d["restricted_implication_holds"] = self.restricted_implication_holds
        return d


def check_torsion_bound(spine: SpineCurve, radius: RadiusFunction, grid: int = 256,
                        tol: float = 1e-9) -> TorsionBoundReport:
    """Evaluate the torsion-bound predicates on a grid.

    loc_holds: some fixed angle satisfies tau sqrt(1-r'^2) + kappa r' sin(psi) = 0
    at every grid node; ``sin_psi`` is that angle's sine (None if any works).
    """
    lo, hi = spine.domain
    s = np.linspace(lo, hi, grid)
    fr = spine.frenet(s)
    r1 = radius.derivative(s, 1)
    num = -fr.tau * np.sqrt(np.maximum(1 - r1 * r1, 0.0))
    den = fr.kappa * r1
    zero_den = np.abs(den) <= tol
    sin_psi = None
    if np.any(zero_den & (np.abs(num) > tol)):
        loc = False
    elif np.all(zero_den):
        loc = True
    else:
        x = num[~zero_den] / den[~zero_den]
        loc = bool(np.ptp(x) <= tol * max(1.0, np.max(np.abs(x))) and np.max(np.abs(x)) <= 1 + tol)
        sin_psi = float(np.mean(x)) if loc else None
    ratio = np.abs(fr.tau) / fr.kappa
    return TorsionBoundReport(
        loc_holds=bool(loc),
        sin_psi=sin_psi,
        r_increasing=bool(np.all(r1 > 0)),
        bound_holds=bool(np.all(ratio < 1)),
        r_prime_below_inv_sqrt2=bool(np.all(r1 < 1 / math.sqrt(2))),
        max_abs_tau_over_kappa=float(np.max(ratio)),
        max_r_prime=float(np.max(r1)),
    )
