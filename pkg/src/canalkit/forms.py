"""First and second fundamental forms: closed forms and finite-difference oracles.

Closed forms exist for E, F, G, the unit normal, the mixed coefficient f and
the area element ||K_s x K_theta||^2 of a canal surface, and for F and f of a
generalized tube.  e and g_II are numeric only.  Closed forms are valid at
regular points only.

Notation inside this module, with psi the formula angle (see
:meth:`CanalSurface.formula_angle`)::

    A = kappa g cos(psi) + h' - 1      (vanishes on the singular locus)
    R = g tau + h kappa sin(psi)       (line-of-curvature residual)
    Q = g' - h kappa cos(psi)
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import MetricDegenerateError, ParameterDomainError, SingularPointError
from .surface import CanalSurface, GeneralizedTube

UMBILIC_TOL = 1e-8
DEFAULT_STEP = 1e-3


@dataclass(frozen=True)
class FirstForm:
    E: np.ndarray
    F: np.ndarray
    G: np.ndarray

    @property
    def det(self):
        return self.E * self.G - self.F ** 2


@dataclass(frozen=True)
class SecondForm:
    e: np.ndarray
    f: np.ndarray
    g_II: np.ndarray


def _canal_terms(canal: CanalSurface, s, theta):
    s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
    fr = canal.spine.frenet(s)
    sc = canal.scalars(s)
    psi = canal.formula_angle(theta)
    c, sn = np.cos(psi), np.sin(psi)
    k, t = fr.kappa, fr.tau
    A = k * sc.g * c + sc.h1 - 1
    R = sc.g * t + sc.h * k * sn
    Q = sc.g1 - sc.h * k * c
    return fr, sc, psi, A, R, Q


def first_form_closed(canal: CanalSurface, s, theta) -> FirstForm:
    _, sc, _, A, R, Q = _canal_terms(canal, s, theta)
    return FirstForm(A ** 2 + R ** 2 + Q ** 2, sc.g * R, sc.g ** 2)


def cross_norm_sq_closed(canal: CanalSurface, s, theta):
    """||K_s x K_theta||^2 = g^2 (A^2 + Q^2); the R^2 term cancels."""
    _, sc, _, A, _, Q = _canal_terms(canal, s, theta)
    return sc.g ** 2 * (A ** 2 + Q ** 2)


def _check_regular(den, what):
    if np.any(~(den > 1e-14)):
        raise SingularPointError(f"{what}: singular point (A^2 + Q^2 = {np.min(den ** 2):.3e})")


def unit_normal_closed(canal: CanalSurface, s, theta):
    """N = (Q T + A (cos psi N + sin psi B)) / sqrt(A^2 + Q^2).

    This equals K_s x K_theta normalized, which points toward the spine.
    """
    fr, _, psi, A, _, Q = _canal_terms(canal, s, theta)
    den = np.sqrt(A ** 2 + Q ** 2)
    _check_regular(den, "unit normal")
    ring = np.cos(psi)[..., None] * fr.N + np.sin(psi)[..., None] * fr.B
    return (Q[..., None] * fr.T + A[..., None] * ring) / den[..., None]


def second_form_f_closed(canal: CanalSurface, s, theta):
    fr, sc, psi, A, _, Q = _canal_terms(canal, s, theta)
    den = np.sqrt(A ** 2 + Q ** 2)
    _check_regular(den, "mixed coefficient f")
    return (Q * fr.kappa * sc.g * np.sin(psi) - fr.tau * sc.g * A) / den


def loc_terms(canal: CanalSurface, s, theta):
    """(A, R, Q) at (s, theta); exposed for the loc module."""
    _, _, _, A, R, Q = _canal_terms(canal, s, theta)
    return A, R, Q


# --------------------------------------------------------------------------
# generalized tube


def _gt_terms(gt: GeneralizedTube, s, theta):
    s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
    fr = gt.spine.frenet(s)
    u, du = gt.profile(theta), gt.profile.du(theta)
    c, sn = np.cos(theta), np.sin(theta)
    a = 1 - fr.kappa * u * c
    norm = np.sqrt((u * du * fr.tau) ** 2 + a ** 2 * (u ** 2 + du ** 2))
    return fr, u, du, c, sn, a, norm


def gt_F_f_closed(gt: GeneralizedTube, s, theta):
    """(F, f) of a generalized tube.

    f uses the normal X_theta x X_s, the opposite of the K_s x K_theta
    convention of the numeric oracle.
    """
    fr, u, du, c, sn, a, norm = _gt_terms(gt, s, theta)
    if np.any(~(norm > 1e-14)):
        raise SingularPointError("generalized tube normal vanishes")
    F = u ** 2 * fr.tau
    bracket = fr.kappa * u * du * (u * sn - du * c) - a * (u ** 2 + du ** 2)
    return F, fr.tau * bracket / norm


def gt_normal_closed(gt: GeneralizedTube, s, theta):
    fr, u, du, c, sn, a, norm = _gt_terms(gt, s, theta)
    if np.any(~(norm > 1e-14)):
        raise SingularPointError("generalized tube normal vanishes")
    n = ((u * du * fr.tau)[..., None] * fr.T
         + (a * (du * sn + u * c))[..., None] * fr.N
         + (a * (u * sn - du * c))[..., None] * fr.B)
    return n / norm[..., None]


# --------------------------------------------------------------------------
# numeric jets


@dataclass(frozen=True)
class SurfaceJet:
    point: np.ndarray
    Ks: np.ndarray
    Kt: np.ndarray
    Kss: np.ndarray
    Kst: np.ndarray
    Ktt: np.ndarray
    normal: np.ndarray
    cross_norm: np.ndarray


_OFFSETS = np.array([(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
                    dtype=float)


def _central(P, h):
    p0, ps, ms, pt, mt, pp, pm, mp, mm = P
    return ((ps - ms) / (2 * h), (pt - mt) / (2 * h), (ps - 2 * p0 + ms) / h ** 2,
            (pp - pm - mp + mm) / (4 * h * h), (pt - 2 * p0 + mt) / h ** 2)


def surface_jet(surface, s, theta, step=DEFAULT_STEP, strict=True) -> SurfaceJet:
    """Central-difference jet with one level of Richardson extrapolation.

    ``surface`` is anything with ``point(s, theta)`` and ``domain``.  With
    ``strict`` the (s, theta) nodes must lie at least 2*step inside the s
    domain (unless the spine is closed).  The normal is K_s x K_theta
    normalized; it is NaN where the cross product vanishes.
    """
    s, theta = np.broadcast_arrays(np.asarray(s, dtype=float), np.asarray(theta, dtype=float))
    if strict and not getattr(surface, "closed_s", False):
        lo, hi = surface.domain
        if np.any((s < lo + 2 * step * 0.999) | (s > hi - 2 * step * 0.999)):
            raise ParameterDomainError("finite-difference stencil leaves the s domain")
    levels = []
    for h in (step, step / 2):
        off = _OFFSETS * h
        ss = s[None, ...] + off[:, 0].reshape((-1,) + (1,) * s.ndim)
        tt = theta[None, ...] + off[:, 1].reshape((-1,) + (1,) * s.ndim)
        P = surface.point(ss, tt)
        levels.append((P[0], _central(P, h)))
    p0 = levels[0][0]
    coarse, fine = levels[0][1], levels[1][1]
    Ks, Kt, Kss, Kst, Ktt = ((4 * b - a) / 3 for a, b in zip(coarse, fine))
    cr = np.cross(Ks, Kt)
    crn = np.linalg.norm(cr, axis=-1)
    scale = np.linalg.norm(Ks, axis=-1) * np.linalg.norm(Kt, axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        normal = np.where((crn > 1e-12 * scale)[..., None], cr / crn[..., None], np.nan)
    return SurfaceJet(p0, Ks, Kt, Kss, Kst, Ktt, normal, crn)


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def fundamental_forms_numeric(surface, s, theta, step=DEFAULT_STEP, strict=True,
                              on_singular="raise"):
    """(FirstForm, SecondForm) from finite-difference jets."""
    jet = surface_jet(surface, s, theta, step, strict)
    if on_singular == "raise" and np.any(np.isnan(jet.normal)):
        raise SingularPointError("K_s x K_theta vanishes")
    first = FirstForm(_dot(jet.Ks, jet.Ks), _dot(jet.Ks, jet.Kt), _dot(jet.Kt, jet.Kt))
    second = SecondForm(_dot(jet.normal, jet.Kss), _dot(jet.normal, jet.Kst),
                        _dot(jet.normal, jet.Ktt))
    return first, second


# --------------------------------------------------------------------------
# shape operator


@dataclass(frozen=True)
class ShapeOperatorAt:
    """Shape operator in the (d/ds, d/dtheta) basis.

    Directions are given in parameter coordinates, normalized to unit length
    in the first fundamental form.  At umbilics they are the parameter
    directions and ``umbilic`` is set.
    """

    matrix: np.ndarray
    k1: float
    k2: float
    dir1: np.ndarray
    dir2: np.ndarray
    gaussian: float
    mean: float
    umbilic: bool


def principal_curvatures(first: FirstForm, second: SecondForm):
    """Vectorized (k1, k2, K, H) with k1 >= k2."""
    E, F, G = first.E, first.F, first.G
    e, f, g = second.e, second.f, second.g_II
    W = E * G - F ** 2
    K = (e * g - f * f) / W
    H = (e * G - 2 * f * F + g * E) / (2 * W)
    # half the eigenvalue gap from the matrix entries; H^2 - K cancels badly near umbilics
    a, b = (e * G - f * F) / W, (f * G - g * F) / W
    c, d = (f * E - e * F) / W, (g * E - f * F) / W
    disc = 0.5 * np.sqrt(np.maximum((a - d) ** 2 + 4 * b * c, 0.0))
    return H + disc, H - disc, K, H


def _null_direction(E, F, G, e, f, g, k):
    r1 = np.stack([f - k * F, -(e - k * E)], axis=-1)
    r2 = np.stack([g - k * G, -(f - k * F)], axis=-1)
    use1 = (np.linalg.norm(r1, axis=-1) >= np.linalg.norm(r2, axis=-1))[..., None]
    v = np.where(use1, r1, r2)
    n2 = E * v[..., 0] ** 2 + 2 * F * v[..., 0] * v[..., 1] + G * v[..., 1] ** 2
    return v / np.sqrt(n2)[..., None]


def principal_directions(first: FirstForm, second: SecondForm, k1, k2):
    """Unit principal directions (parameter coordinates) for k1 and k2."""
    E, F, G = first.E, first.F, first.G
    e, f, g = second.e, second.f, second.g_II
    return (_null_direction(E, F, G, e, f, g, k1), _null_direction(E, F, G, e, f, g, k2))


def shape_operator(first: FirstForm, second: SecondForm, det_tol=1e-14) -> ShapeOperatorAt:
    E, F, G = (float(x) for x in (first.E, first.F, first.G))
    e, f, g = (float(x) for x in (second.e, second.f, second.g_II))
    W = E * G - F * F
    if not W > det_tol * max(1.0, E * G):
        raise MetricDegenerateError(f"EG - F^2 = {W:.3e}")
    M = np.array([[e * G - f * F, f * G - g * F], [f * E - e * F, g * E - f * F]]) / W
    k1, k2, K, H = (float(x) for x in principal_curvatures(first, second))
    umbilic = abs(k1 - k2) <= UMBILIC_TOL * max(abs(k1), 1.0)
    if umbilic:
        d1 = np.array([1 / math.sqrt(E), 0.0])
        d2 = np.array([0.0, 1 / math.sqrt(G)])
    else:
        d1, d2 = principal_directions(first, second, k1, k2)
    return ShapeOperatorAt(M, k1, k2, np.asarray(d1), np.asarray(d2), K, H, umbilic)
