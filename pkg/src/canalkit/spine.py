"""Spine curves, arc-length reparametrization and the Frenet apparatus.

Every :class:`SpineCurve` is unit-speed: its ``jet`` returns the position and
the first three derivatives with respect to arc length ``s``.  Built-in kinds
have closed-form jets; sampled data and raw callables go through
:func:`arclength_reparametrize`.

All evaluation is vectorized: ``s`` may be any array shape and vector results
carry a trailing axis of length 3.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np
from scipy import interpolate, optimize

from ._numerics import adaptive_gl, fd5, gl_integrate
from .errors import ParameterDomainError, RegularityError, VanishingCurvatureError

KAPPA_TOL = 1e-9
KINDS = ("circle", "line", "circular_helix", "general_helix_like", "salkowski", "sampled")


@dataclass(frozen=True)
class FrenetFrame:
    T: np.ndarray
    N: np.ndarray
    B: np.ndarray
    kappa: np.ndarray
    tau: np.ndarray


@dataclass(frozen=True, eq=False)
class SpineCurve:
    """A unit-speed space curve on the closed interval ``domain``.

    ``jet_fn(s)`` returns ``(C, C', C'', C''')``.  ``frame_fn`` overrides the
    Frenet frame for kinds where it is fixed by convention (the line).
    """

    kind: str
    params: Mapping
    domain: tuple
    jet_fn: Callable = field(repr=False)
    closed: bool = False
    frame_fn: Optional[Callable] = field(default=None, repr=False)

    @property
    def length(self) -> float:
        return self.domain[1] - self.domain[0]

    def jet(self, s):
        return self.jet_fn(np.asarray(s, dtype=float))

    def position(self, s):
        return self.jet(s)[0]

    def contains(self, s, slack=1e-12) -> bool:
        s = np.asarray(s, dtype=float)
        if self.closed:
            return True
        lo, hi = self.domain
        pad = slack * max(1.0, abs(lo), abs(hi))
        return bool(np.all((s >= lo - pad) & (s <= hi + pad)))

    def frenet(self, s, kappa_tol=KAPPA_TOL) -> FrenetFrame:
        s = np.asarray(s, dtype=float)
        if self.frame_fn is not None:
            return self.frame_fn(s)
        _, d1, d2, d3 = self.jet(s)
        speed = np.linalg.norm(d1, axis=-1)
        T = d1 / speed[..., None]
        cr = np.cross(d1, d2)
        crn = np.linalg.norm(cr, axis=-1)
        kappa = crn / speed ** 3
        bad = kappa < kappa_tol
        if np.any(bad):
            where = s[bad].ravel()[0] if s.ndim else float(s)
            raise VanishingCurvatureError(
                f"curvature {np.min(kappa):.3e} below {kappa_tol:g} at s={where:.6g}; frame undefined")
        B = cr / crn[..., None]
        N = np.cross(B, T)
        tau = np.einsum("...i,...i->...", cr, d3) / crn ** 2
        return FrenetFrame(T, N, B, kappa, tau)

    def curvature(self, s):
        return self.frenet(s).kappa

    def torsion(self, s):
        return self.frenet(s).tau


def eval_frenet(curve: SpineCurve, s, kappa_tol=KAPPA_TOL) -> FrenetFrame:
    """Frenet frame (T, N, B, kappa, tau) of ``curve`` at arc length ``s``."""
    if not curve.contains(s):
        raise ParameterDomainError(f"s={s} outside spine domain {curve.domain}")
    return curve.frenet(s, kappa_tol)


# --------------------------------------------------------------------------
# built-in kinds


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _circle(R, domain):
    if not R > 0:
        raise ParameterDomainError(f"circle radius must be positive, got {R}")

    def jet(s):
        u = s / R
        c, sn, z = np.cos(u), np.sin(u), np.zeros_like(s)
        return (_stack(R * c, R * sn, z), _stack(-sn, c, z),
                _stack(-c / R, -sn / R, z), _stack(sn / R ** 2, -c / R ** 2, z))

    def frame(s):
        u = s / R
        c, sn, z = np.cos(u), np.sin(u), np.zeros_like(s)
        one = np.ones_like(s)
        return FrenetFrame(_stack(-sn, c, z), _stack(-c, -sn, z), _stack(z, z, one),
                           np.full_like(s, 1.0 / R), np.zeros_like(s))

    closed = domain is None
    dom = (0.0, 2 * math.pi * R) if domain is None else domain
    return SpineCurve("circle", {"R": R}, dom, jet, closed=closed, frame_fn=frame)


def _line(point, direction, normal, domain):
    p = np.asarray(point, dtype=float)
    u = np.asarray(direction, dtype=float)
    if p.shape != (3,) or u.shape != (3,) or not np.linalg.norm(u) > 0:
        raise ParameterDomainError("line needs a 3D point and a non-zero 3D direction")
    u = u / np.linalg.norm(u)
    if normal is None:
        trial = np.array([0.0, 0.0, 1.0]) if abs(u[2]) < 0.9 else np.array([1.0, 0.0, 0.0])
    else:
        trial = np.asarray(normal, dtype=float)
    n = trial - np.dot(trial, u) * u
    if not np.linalg.norm(n) > 1e-12:
        raise ParameterDomainError("line normal must not be parallel to its direction")
    n = n / np.linalg.norm(n)
    b = np.cross(u, n)

    def jet(s):
        z = np.zeros(s.shape + (3,))
        return p + s[..., None] * u, np.broadcast_to(u, z.shape).copy(), z, z.copy()

    def frame(s):
        shp = s.shape + (3,)
        zero = np.zeros_like(s)
        return FrenetFrame(np.broadcast_to(u, shp).copy(), np.broadcast_to(n, shp).copy(),
                           np.broadcast_to(b, shp).copy(), zero, zero.copy())

    dom = (0.0, 1.0) if domain is None else domain
    return SpineCurve("line", {"point": tuple(p), "direction": tuple(u), "normal": tuple(n)},
                      dom, jet, frame_fn=frame)


def _circular_helix(a, b, domain):
    if not a > 0:
        raise ParameterDomainError(f"helix radius a must be positive, got {a}")
    d = math.hypot(a, b)
    kappa, tau = a / d ** 2, b / d ** 2

    def jet(s):
        u = s / d
        c, sn = np.cos(u), np.sin(u)
        z = np.zeros_like(s)
        return (_stack(a * c, a * sn, b * u), _stack(-a * sn / d, a * c / d, z + b / d),
                _stack(-a * c / d ** 2, -a * sn / d ** 2, z),
                _stack(a * sn / d ** 3, -a * c / d ** 3, z))

    def frame(s):
        u = s / d
        c, sn = np.cos(u), np.sin(u)
        z = np.zeros_like(s)
        T = _stack(-a * sn / d, a * c / d, z + b / d)
        N = _stack(-c, -sn, z)
        B = _stack(b * sn / d, -b * c / d, z + a / d)
        return FrenetFrame(T, N, B, np.full_like(s, kappa), np.full_like(s, tau))

    dom = (0.0, 2 * math.pi * d) if domain is None else domain
    return SpineCurve("circular_helix", {"a": a, "b": b, "d": d}, dom, jet, frame_fn=frame)


def _general_helix(phi, b, domain):
    # Conical helix: cos(phi) * (log spiral) + s sin(phi) e_z; tau/kappa = tan(phi).
    if not 0 < phi < math.pi / 2:
        raise ParameterDomainError(f"general helix angle must lie in (0, pi/2), got {phi}")
    if not b > 0:
        raise ParameterDomainError(f"spiral rate b must be positive, got {b}")
    dom = (1.0, 3.0) if domain is None else domain
    if not dom[0] > 0:
        raise ParameterDomainError("general helix domain must have s > 0")
    cs = b / math.sqrt(1 + b * b)
    p = 1 + 1j / b
    cp, sp = math.cos(phi), math.sin(phi)

    def jet(s):
        w = cs * s
        zs = [w ** p, p * cs * w ** (p - 1), p * (p - 1) * cs ** 2 * w ** (p - 2),
              p * (p - 1) * (p - 2) * cs ** 3 * w ** (p - 3)]
        zero = np.zeros_like(s)
        out = []
        for k, z in enumerate(zs):
            height = sp * s if k == 0 else (zero + sp if k == 1 else zero)
            out.append(_stack(cp * z.real, cp * z.imag, height))
        return tuple(out)

    return SpineCurve("general_helix_like", {"phi": phi, "b": b}, dom, jet)


def _salkowski(m, domain):
    if not m > 0:
        raise ParameterDomainError(f"salkowski m must be positive, got {m}")
    dom = (-0.9 / m, 0.9 / m) if domain is None else domain
    if max(abs(dom[0]), abs(dom[1])) * m >= 1:
        raise ParameterDomainError(f"salkowski domain {dom} violates |m s| < 1 for m={m}")
    w = math.sqrt(1 + m * m)
    k = w / m

    def sin_int(om, x):
        return x if om == 0 else np.sin(om * x) / om

    def cos_int(om, x):
        return np.zeros_like(x) if om == 0 else 2 * np.sin(0.5 * om * x) ** 2 / om

    def frame_x(x):
        c, sn = np.cos(x), np.sin(x)
        ca, sa = np.cos(k * x), np.sin(k * x)
        T = _stack((w * c * ca + m * sn * sa) / w, (w * c * sa - m * sn * ca) / w, sn / w)
        N = _stack(-sa / w, ca / w, np.full_like(x, m / w))
        return T, N, np.cross(T, N)

    def jet(s):
        x = np.arcsin(m * s)
        X = (0.5 * sin_int(k, x) + 0.25 * sin_int(k + 2, x) + 0.25 * sin_int(k - 2, x)) / m \
            + (sin_int(k - 2, x) - sin_int(k + 2, x)) / (4 * w)
        Y = (0.5 * cos_int(k, x) + 0.25 * cos_int(k + 2, x) + 0.25 * cos_int(k - 2, x)) / m \
            - (cos_int(k + 2, x) - cos_int(k - 2, x)) / (4 * w)
        Z = np.sin(x) ** 2 / (2 * m * w)
        T, N, B = frame_x(x)
        tau = np.tan(x)[..., None]
        return _stack(X, Y, Z), T, N, -T + tau * B

    def frame(s):
        x = np.arcsin(m * s)
        T, N, B = frame_x(x)
        return FrenetFrame(T, N, B, np.ones_like(s), np.tan(x))

    return SpineCurve("salkowski", {"m": m, "phi": math.atan(1 / m)}, dom, jet, frame_fn=frame)


def make_builtin_spine(kind: str, params: Mapping, domain=None) -> SpineCurve:
    """Construct a built-in unit-speed spine.

    kinds and parameters::

        circle              R
        line                point, direction, [normal]
        circular_helix      a, b           C(s) = (a cos(s/d), a sin(s/d), b s/d)
        general_helix_like  phi, [b=1]     conical helix, tau/kappa = tan(phi)
        salkowski           m | phi        kappa = 1, tau = tan(arcsin(m s)), m = cot(phi)
    """
    params = dict(params)
    if domain is not None:
        domain = (float(domain[0]), float(domain[1]))
        if not domain[1] > domain[0]:
            raise ParameterDomainError(f"empty domain {domain}")
    try:
        if kind == "circle":
            curve = _circle(float(params["R"]), domain)
        elif kind == "line":
            curve = _line(params.get("point", (0, 0, 0)), params.get("direction", (0, 0, 1)),
                          params.get("normal"), domain)
        elif kind == "circular_helix":
            curve = _circular_helix(float(params["a"]), float(params["b"]), domain)
        elif kind == "general_helix_like":
            curve = _general_helix(float(params["phi"]), float(params.get("b", 1.0)), domain)
        elif kind == "salkowski":
            m = float(params["m"]) if "m" in params else 1.0 / math.tan(float(params["phi"]))
            curve = _salkowski(m, domain)
        else:
            raise ParameterDomainError(f"unknown spine kind {kind!r}")
    except KeyError as exc:
        raise ParameterDomainError(f"spine kind {kind!r} missing parameter {exc}") from None
    object.__setattr__(curve, "params", MappingProxyType(dict(curve.params)))
    return curve


# --------------------------------------------------------------------------
# raw curves and arc-length reparametrization


@dataclass(frozen=True, eq=False)
class RawCurve:
    """A regular curve C(t) on ``domain`` with optional derivative callables.

    All callables take an array of t and return ``t.shape + (3,)``.  Missing
    derivatives fall back to 5-point central differences.
    """

    func: Callable
    domain: tuple
    d1: Optional[Callable] = None
    d2: Optional[Callable] = None
    d3: Optional[Callable] = None
    label: str = "raw"

    def _step(self, order):
        base = max(1e-5, 1e-6 * (self.domain[1] - self.domain[0]))
        return base * (1.0, 100.0, 300.0)[order - 1]

    def derivative(self, t, order):
        fn = (self.d1, self.d2, self.d3)[order - 1]
        if fn is not None:
            return np.asarray(fn(t), dtype=float)
        return fd5(self.func, t, self._step(order), order)

    def speed(self, t):
        return np.linalg.norm(self.derivative(np.asarray(t, dtype=float), 1), axis=-1)


def _check_regular(raw: RawCurve, n=4097):
    t0, t1 = raw.domain
    ts = np.linspace(t0, t1, n)
    v = raw.speed(ts)
    scale = float(np.median(v))
    i = int(np.argmin(v))
    lo, hi = ts[max(i - 1, 0)], ts[min(i + 1, n - 1)]
    res = optimize.minimize_scalar(lambda t: float(raw.speed(np.array(t))), bounds=(lo, hi),
                                   method="bounded", options={"xatol": 1e-12})
    t_min, v_min = (res.x, res.fun) if res.fun < v[i] else (ts[i], v[i])
    if not scale > 0 or v_min <= 1e-8 * scale:
        raise RegularityError(f"singular parametrization: |C'(t)| = {v_min:.3e} at t={t_min:.6g}",
                              where=float(t_min))


def arclength_reparametrize(raw: RawCurve, s0=None, n_table=256, kind="sampled",
                            params=None) -> SpineCurve:
    """Return the unit-speed reparametrization of ``raw``.

    s runs from ``s0`` (default: the raw domain start) to ``s0 + length``.
    The t(s) inverse uses a monotone cubic (PCHIP) guess polished by Newton
    steps on a Gauss-Legendre arc-length tail, so speed is 1 to ~1e-12.
    """
    _check_regular(raw)
    t0, t1 = map(float, raw.domain)
    s0 = t0 if s0 is None else float(s0)
    tn = np.linspace(t0, t1, n_table + 1)
    tol = 1e-13 * max(1.0, t1 - t0)
    seg = [adaptive_gl(raw.speed, a, b, tol) for a, b in zip(tn[:-1], tn[1:])]
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    length = cum[-1]
    guess = interpolate.PchipInterpolator(cum, tn)

    def arc(t):
        i = np.clip(np.searchsorted(tn, t, side="right") - 1, 0, n_table - 1)
        return cum[i] + gl_integrate(raw.speed, tn[i], t)

    def t_of_s(s):
        target = s - s0
        t = guess(np.clip(target, 0.0, length))
        # extrapolate linearly beyond the ends (finite-difference stencils)
        t = np.where(target < 0, t0 + target / raw.speed(np.array(t0)), t)
        t = np.where(target > length, t1 + (target - length) / raw.speed(np.array(t1)), t)
        inside = (target >= 0) & (target <= length)
        for _ in range(8):
            dt = np.where(inside, (arc(t) - target) / raw.speed(t), 0.0)
            t = t - dt
            if np.all(np.abs(dt) <= 1e-15 * max(1.0, abs(t1))):
                break
        return t

    def jet(s):
        t = t_of_s(s)
        D1, D2, D3 = (raw.derivative(t, k) for k in (1, 2, 3))
        dot = lambda a, b: np.einsum("...i,...i->...", a, b)
        v = np.linalg.norm(D1, axis=-1)
        v1 = dot(D1, D2) / v
        v2 = (dot(D2, D2) + dot(D1, D3)) / v - dot(D1, D2) * v1 / v ** 2
        t1 = 1 / v
        t2 = -v1 / v ** 3
        t3 = (-v2 / v ** 3 + 3 * v1 ** 2 / v ** 4) / v
        t1, t2, t3 = t1[..., None], t2[..., None], t3[..., None]
        return (np.asarray(raw.func(t), dtype=float), D1 * t1, D2 * t1 ** 2 + D1 * t2,
                D3 * t1 ** 3 + 3 * D2 * t1 * t2 + D1 * t3)

    p = {"source": raw.label, "raw_domain": (t0, t1)}
    if params:
        p.update(params)
    curve = SpineCurve(kind, MappingProxyType(p), (s0, s0 + length), jet)
    object.__setattr__(curve, "t_of_s", t_of_s)
    return curve


def sampled_spine(t, points) -> SpineCurve:
    """Spine through sample rows: quintic interpolating spline, then arc length."""
    t = np.asarray(t, dtype=float)
    pts = np.asarray(points, dtype=float)
    if t.ndim != 1 or pts.shape != (t.size, 3):
        raise ParameterDomainError("sampled spine needs rows of [t, x, y, z]")
    if t.size < 4 or np.any(np.diff(t) <= 0):
        raise ParameterDomainError("sampled spine needs >= 4 rows with increasing t")
    k = 5 if t.size >= 6 else 3
    spl = interpolate.make_interp_spline(t, pts, k=k)
    ders = [spl.derivative(j) for j in (1, 2, 3)]
    raw = RawCurve(spl, (t[0], t[-1]), *ders, label="samples")
    return arclength_reparametrize(raw, s0=0.0, kind="sampled", params={"n_points": int(t.size)})


def load_samples_csv(text: str):
    """Parse ``t,x,y,z`` CSV text (header row required) into (t, xyz) arrays."""
    reader = csv.reader(io.StringIO(text))
    header = [h.strip() for h in next(reader)]
    if header != ["t", "x", "y", "z"]:
        raise ParameterDomainError(f"sample CSV header must be t,x,y,z, got {','.join(header)}")
    rows = np.array([[float(v) for v in row] for row in reader if row], dtype=float)
    return rows[:, 0], rows[:, 1:4]


def spine_from_dict(doc: Mapping, base_dir=None) -> SpineCurve:
    """Build a spine from ``{"kind", "params", "domain"}`` (plus ``rows``/``csv``)."""
    kind = doc.get("kind")
    if kind == "sampled":
        if "rows" in doc:
            rows = np.asarray(doc["rows"], dtype=float)
            if rows.ndim != 2 or rows.shape[1] != 4:
                raise ParameterDomainError("sampled rows must be [t, x, y, z]")
            return sampled_spine(rows[:, 0], rows[:, 1:])
        if "csv" in doc:
            from pathlib import Path

            path = Path(doc["csv"])
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return sampled_spine(*load_samples_csv(path.read_text()))
        raise ParameterDomainError("sampled spine needs 'rows' or 'csv'")
    return make_builtin_spine(kind, doc.get("params", {}), doc.get("domain"))


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class SpineClass:
    kind: str
    phi: Optional[float]
    kappa_range: tuple
    tau_range: tuple


def classify_spine(curve: SpineCurve, grid: int = 256, tol: float = 1e-6) -> SpineClass:
    """Classify as planar / circular_helix / general_helix / generic.

    Tolerances are relative to the largest curvature on the grid.
    """
    lo, hi = curve.domain
    s = np.linspace(lo, hi, grid, endpoint=not curve.closed)
    fr = curve.frenet(s)
    k, t = fr.kappa, fr.tau
    scale = float(np.max(np.abs(k)))
    rng = (float(k.min()), float(k.max())), (float(t.min()), float(t.max()))
    if np.max(np.abs(t)) < tol * scale:
        return SpineClass("planar", None, *rng)
    ratio = t / k
    phi = float(np.arctan(np.mean(ratio)))
    k_const = np.ptp(k) <= tol * scale
    t_const = np.ptp(t) <= tol * scale
    if k_const and t_const:
        return SpineClass("circular_helix", phi, *rng)
    if np.ptp(ratio) <= tol * max(1.0, float(np.max(np.abs(ratio)))):
        return SpineClass("general_helix", phi, *rng)
    return SpineClass("generic", None, *rng)
