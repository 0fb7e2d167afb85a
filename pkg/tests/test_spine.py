import math

import numpy as np
import pytest

from canalkit.errors import ParameterDomainError, RegularityError, VanishingCurvatureError
from canalkit.spine import (RawCurve, arclength_reparametrize, classify_spine, eval_frenet,
                            load_samples_csv, make_builtin_spine, sampled_spine, spine_from_dict)

from conftest import helix, random_spline_spine


def _fd(fun, s, h=1e-5):
    return (fun(s + h) - fun(s - h)) / (2 * h)


BUILTINS = [
    ("circle", {"R": 2.0}, None),
    ("circular_helix", {"a": 3.0, "b": 4.0}, None),
    ("general_helix_like", {"phi": 0.6}, None),
    ("salkowski", {"m": 1.0}, (-0.9, 0.9)),
]


@pytest.mark.parametrize("kind,params,domain", BUILTINS)
def test_builtin_unit_speed_and_frame(kind, params, domain):
    c = make_builtin_spine(kind, params, domain)
    lo, hi = c.domain
    s = np.linspace(lo + 0.01, hi - 0.01, 101)
    _, d1, _, _ = c.jet(s)
    assert np.allclose(np.linalg.norm(d1, axis=1), 1, atol=1e-12)
    fr = c.frenet(s)
    for v in (fr.T, fr.N, fr.B):
        assert np.allclose(np.linalg.norm(v, axis=1), 1, atol=1e-10)
    assert np.abs(np.einsum("ij,ij->i", fr.T, fr.N)).max() < 1e-10
    assert np.allclose(np.cross(fr.T, fr.N), fr.B, atol=1e-12)


@pytest.mark.parametrize("kind,params,domain", BUILTINS)
def test_frenet_serret_residual(kind, params, domain):
    c = make_builtin_spine(kind, params, domain)
    lo, hi = c.domain
    s = np.linspace(lo + 0.01, hi - 0.01, 64)
    fr = c.frenet(s)
    k, t = fr.kappa[:, None], fr.tau[:, None]
    dT = _fd(lambda x: c.frenet(x).T, s)
    dN = _fd(lambda x: c.frenet(x).N, s)
    dB = _fd(lambda x: c.frenet(x).B, s)
    assert np.abs(dT - k * fr.N).max() <= 1e-6
    assert np.abs(dN + k * fr.T - t * fr.B).max() <= 1e-6
    assert np.abs(dB + t * fr.N).max() <= 1e-6


def test_helix_curvature_torsion():
    fr = eval_frenet(helix(), 1.3)
    assert fr.kappa == pytest.approx(0.12, abs=1e-12)
    assert fr.tau == pytest.approx(0.16, abs=1e-12)


def test_circle_domain_and_curvature():
    c = make_builtin_spine("circle", {"R": 2.0})
    assert c.domain == pytest.approx((0.0, 4 * math.pi))
    assert c.closed
    fr = eval_frenet(c, 0.7)
    assert fr.kappa == pytest.approx(0.5)
    assert fr.tau == pytest.approx(0.0, abs=1e-14)


def test_salkowski_curvature_torsion():
    fr = eval_frenet(make_builtin_spine("salkowski", {"m": 1.0}, (-0.9, 0.9)), 0.5)
    assert fr.kappa == pytest.approx(1.0, abs=1e-12)
    assert fr.tau == pytest.approx(1 / math.sqrt(3), abs=1e-12)


def test_salkowski_domain_limit():
    with pytest.raises(ParameterDomainError):
        make_builtin_spine("salkowski", {"m": 1.0}, (-1.1, 1.1))


@pytest.mark.parametrize("kind,params", [("circle", {"R": -1}), ("circular_helix", {"a": 0, "b": 1}),
                                         ("nonsense", {}), ("circle", {})])
def test_invalid_parameters(kind, params):
    with pytest.raises(ParameterDomainError):
        make_builtin_spine(kind, params)


def test_eval_frenet_outside_domain():
    with pytest.raises(ParameterDomainError):
        eval_frenet(helix(), 5.0)


def test_line_has_no_frenet_curvature():
    line = make_builtin_spine("line", {"direction": (0, 0, 1)}, (0, 1))
    fr = eval_frenet(line, 0.5)
    assert fr.kappa == 0 and fr.tau == 0


def test_vanishing_curvature_raises():
    raw = RawCurve(lambda t: np.stack([t, 0 * t, 0 * t], -1), (0.0, 1.0),
                   lambda t: np.stack([1 + 0 * t, 0 * t, 0 * t], -1),
                   lambda t: np.zeros(np.shape(t) + (3,)),
                   lambda t: np.zeros(np.shape(t) + (3,)))
    c = arclength_reparametrize(raw)
    with pytest.raises(VanishingCurvatureError):
        c.frenet(0.5)


def _raw_helix(a=3.0, b=4.0):
    return RawCurve(
        lambda t: np.stack([a * np.cos(t), a * np.sin(t), b * t], -1), (0.0, 2 * math.pi),
        lambda t: np.stack([-a * np.sin(t), a * np.cos(t), b + 0 * t], -1),
        lambda t: np.stack([-a * np.cos(t), -a * np.sin(t), 0 * t], -1),
        lambda t: np.stack([a * np.sin(t), -a * np.cos(t), 0 * t], -1))


def test_reparametrize_raw_helix_length_and_speed():
    c = arclength_reparametrize(_raw_helix())
    assert c.length == pytest.approx(10 * math.pi, abs=1e-10)
    s = np.linspace(0, c.length, 333)
    assert np.abs(np.linalg.norm(c.jet(s)[1], axis=1) - 1).max() < 1e-8
    assert np.allclose(c.t_of_s(s), s / 5, atol=1e-10)
    fr = c.frenet(s[1:-1])
    assert np.abs(fr.kappa - 0.12).max() <= 1e-8
    assert np.abs(fr.tau - 0.16).max() <= 1e-8


def test_reparametrize_raw_helix_without_derivatives():
    raw = _raw_helix()
    c = arclength_reparametrize(RawCurve(raw.func, raw.domain))
    assert c.length == pytest.approx(10 * math.pi, rel=1e-8)


def test_reparametrize_is_identity_on_unit_speed_input():
    d = 5.0
    raw = RawCurve(lambda s: np.stack([3 * np.cos(s / d), 3 * np.sin(s / d), 4 * s / d], -1), (0.0, 10.0),
                   lambda s: np.stack([-0.6 * np.sin(s / d), 0.6 * np.cos(s / d), 0.8 + 0 * s], -1),
                   lambda s: np.stack([-0.12 * np.cos(s / d), -0.12 * np.sin(s / d), 0 * s], -1),
                   lambda s: np.stack([0.024 * np.sin(s / d), -0.024 * np.cos(s / d), 0 * s], -1))
    c = arclength_reparametrize(raw, s0=0.0)
    s = np.linspace(0, 10, 77)
    assert np.abs(c.position(s) - raw.func(s)).max() <= 1e-10


def test_cusp_is_rejected():
    raw = RawCurve(lambda t: np.stack([t ** 3, t ** 2, 0 * t], -1), (-1.0, 1.0),
                   lambda t: np.stack([3 * t ** 2, 2 * t, 0 * t], -1))
    with pytest.raises(RegularityError) as info:
        arclength_reparametrize(raw)
    assert abs(info.value.where) < 1e-3


def test_sampled_spine_tracks_analytic_helix():
    t = np.linspace(0, 2 * math.pi, 200)
    pts = np.column_stack([3 * np.cos(t), 3 * np.sin(t), 4 * t])
    c = sampled_spine(t, pts)
    assert c.length == pytest.approx(10 * math.pi, rel=1e-8)
    s = np.linspace(1, c.length - 1, 50)
    fr = c.frenet(s)
    assert np.abs(fr.kappa - 0.12).max() < 1e-5
    assert np.abs(fr.tau - 0.16).max() < 1e-4


def test_random_spline_spine_is_unit_speed():
    c = random_spline_spine()
    s = np.linspace(*c.domain, 500)
    assert np.abs(np.linalg.norm(c.jet(s)[1], axis=1) - 1).max() < 1e-8


@pytest.mark.parametrize("kind,params,domain,expected", [
    ("circle", {"R": 2.0}, None, "planar"),
    ("circular_helix", {"a": 3.0, "b": 4.0}, None, "circular_helix"),
    ("general_helix_like", {"phi": 0.6}, None, "general_helix"),
    ("salkowski", {"m": 1.0}, (-0.9, 0.9), "generic"),
])
def test_classify(kind, params, domain, expected):
    cls = classify_spine(make_builtin_spine(kind, params, domain))
    assert cls.kind == expected
    if expected == "circular_helix":
        assert cls.phi == pytest.approx(math.atan(4 / 3))
    if expected == "general_helix":
        assert cls.phi == pytest.approx(0.6)


def test_spine_from_dict_and_csv(tmp_path):
    c = spine_from_dict({"kind": "circular_helix", "params": {"a": 3, "b": 4}, "domain": [0, 2]})
    assert c.domain == (0.0, 2.0)
    t = np.linspace(0, 3, 12)
    text = "t,x,y,z\n" + "\n".join(f"{a},{np.cos(a)},{np.sin(a)},{0.5 * a}" for a in t) + "\n"
    (tmp_path / "pts.csv").write_text(text)
    c2 = spine_from_dict({"kind": "sampled", "csv": "pts.csv"}, base_dir=tmp_path)
    tt, xyz = load_samples_csv(text)
    assert xyz.shape == (12, 3)
    assert c2.kind == "sampled"
    with pytest.raises(ParameterDomainError):
        load_samples_csv("a,b,c\n1,2,3\n")
