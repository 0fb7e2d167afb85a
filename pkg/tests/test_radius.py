import math
import warnings

import numpy as np
import pytest

from canalkit.errors import (DegenerateIntegrandError, ParameterDomainError, PositivityError,
                             UnsupportedAngleError)
from canalkit.loc import loc_residual
from canalkit.radius import (MIN_RADIUS, check_torsion_bound, synth_radius_circular_helix,
                             synth_radius_general_helix, synth_radius_quadrature, synth_radius_salkowski,
                             valid_thetas)
from canalkit.spine import make_builtin_spine
from canalkit.surface import RadiusFunction, make_canal

from conftest import helix

HALF_PI = math.pi / 2


def test_valid_thetas_branches():
    assert valid_thetas(HALF_PI, "minus") == [pytest.approx(HALF_PI)]
    assert valid_thetas(HALF_PI, "plus") == [pytest.approx(3 * HALF_PI)]
    got = valid_thetas(math.pi / 3, "plus")
    assert got == [pytest.approx(4 * math.pi / 3), pytest.approx(5 * math.pi / 3)]


def test_quadrature_helix_slope():
    res = synth_radius_quadrature(helix(), HALF_PI, c=0.1, s_ref=0.0)
    s = np.linspace(0, 4, 41)
    assert np.abs(res.radius.derivative(s, 1) - 0.8).max() <= 1e-15
    assert np.abs(res.radius(s) - (0.8 * s + 0.1)).max() <= 1e-12
    assert res.residual_max <= 1e-8
    assert res.domain == (0.0, 4.0)


def test_quadrature_residual_along_valid_thetas():
    res = synth_radius_quadrature(helix(), math.pi / 5, c=0.2, branch="plus")
    c = make_canal(helix(), res.radius, "plus")
    s = np.linspace(0, 4, 200)
    g = c.scalars(s).g
    for th in res.valid_thetas:
        assert (np.abs(loc_residual(c, s, th)) / np.maximum(1, g)).max() <= 1e-8
        # unsquared condition tau sqrt(1 - r'^2) + kappa r' sin(psi) = 0
        r1 = res.radius.derivative(s, 1)
        fr = c.spine.frenet(s)
        un = fr.tau * np.sqrt(1 - r1 ** 2) + fr.kappa * r1 * np.sin(c.formula_angle(th))
        assert np.abs(un).max() <= 1e-9


def test_quadrature_planar_spine_constant():
    res = synth_radius_quadrature(make_builtin_spine("circle", {"R": 2.0}), 1.0, c=0.4)
    s = np.linspace(0, 4 * math.pi, 9)
    assert np.allclose(res.radius(s), 0.4)
    assert res.every_theta and res.to_dict()["valid_thetas"] == "all"


def test_quadrature_default_c_gives_min_radius():
    sp = make_builtin_spine("salkowski", {"m": 1.0})
    res = synth_radius_quadrature(sp, math.pi / 3)
    s = np.linspace(*sp.domain, 2001)
    assert res.radius(s).min() == pytest.approx(MIN_RADIUS, abs=1e-9)


def test_quadrature_errors():
    with pytest.raises(DegenerateIntegrandError):
        synth_radius_quadrature(make_builtin_spine("line", {}, (0, 1)), 1.0, c=0.1)
    with pytest.raises(PositivityError):
        synth_radius_quadrature(helix(), HALF_PI, c=-0.5, s_ref=0.0)


def test_derivative_consistency():
    res = synth_radius_quadrature(make_builtin_spine("salkowski", {"m": 1.0}), 0.7, c=1.0)
    h = 1e-5
    s = np.linspace(-0.8, 0.8, 33)
    fd = (res.radius(s + h) - res.radius(s - h)) / (2 * h)
    assert np.abs(fd - res.radius.derivative(s, 1)).max() <= 1e-6


def test_general_helix_slope():
    r = synth_radius_general_helix(math.pi / 4, HALF_PI, 0.1)
    assert r.params["a"] == pytest.approx(1 / math.sqrt(2), abs=1e-15)
    q = synth_radius_quadrature(helix(1.0, 1.0), HALF_PI, c=0.1, s_ref=0.0)
    s = np.linspace(0, 4, 17)
    assert np.abs(q.radius(s) - r(s)).max() <= 1e-9


def test_general_helix_spine_agrees():
    sp = make_builtin_spine("general_helix_like", {"phi": 0.6, "b": 1.0}, (1, 3))
    r = synth_radius_general_helix(0.6, 1.1, 0.2)
    q = synth_radius_quadrature(sp, 1.1, c=float(r(1.0)), s_ref=1.0)
    s = np.linspace(1, 3, 13)
    assert np.abs(q.radius(s) - r(s)).max() <= 1e-9


def test_slope_one_flagged():
    with pytest.warns(RuntimeWarning):
        r = synth_radius_general_helix(0.5, 0.0, 0.1)
    assert r.params["a"] == 1.0 and r.params["regular"] is False
    with pytest.warns(RuntimeWarning):
        r = synth_radius_circular_helix(3, 4, 0.0, 0.1)
    assert r.params["regular"] is False


def test_general_helix_domain_error():
    with pytest.raises(ParameterDomainError):
        synth_radius_general_helix(HALF_PI, 1.0, 0.1)


def test_circular_helix_slopes():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert synth_radius_circular_helix(3, 4, HALF_PI, 0.1).params["a"] == pytest.approx(0.8, abs=1e-15)
        r = synth_radius_circular_helix(3, 4, math.pi / 6, 0.1)
    assert r.params["a"] == pytest.approx(4 / math.sqrt(18.25), abs=1e-15)
    assert r.params["a"] == pytest.approx(0.93633, abs=1e-5)
    q = synth_radius_quadrature(helix(), math.pi / 6, c=0.1, s_ref=0.0)
    s = np.linspace(0, 4, 17)
    assert np.abs(q.radius(s) - r(s)).max() <= 1e-9
    with pytest.raises(ParameterDomainError):
        synth_radius_circular_helix(0, 4, 1.0, 0.1)


def test_salkowski_closed_form_values():
    r = synth_radius_salkowski(math.pi / 4, math.pi / 3, 0.0)
    s = np.linspace(-0.9, 0.9, 19)
    assert np.allclose(r(s), 2 * np.sqrt(s * s + 3), atol=1e-14)
    assert float(r(0.0)) == pytest.approx(3.4641, abs=1e-4)
    assert float(r.derivative(0.0)) == 0.0
    assert float(r.derivative(0.5)) == pytest.approx(0.5547, abs=1e-4)


def test_salkowski_matches_quadrature():
    sp = make_builtin_spine("salkowski", {"m": 1.0}, (-0.9, 0.9))
    closed = synth_radius_salkowski(math.pi / 4, math.pi / 3, 0.0)
    q = synth_radius_quadrature(sp, math.pi / 3, c=2 * math.sqrt(3), s_ref=0.0)
    s = np.linspace(-0.9, 0.9, 181)
    assert np.abs(closed(s) - q.radius(s)).max() <= 1e-8
    assert np.abs(closed.derivative(s, 2) - q.radius.derivative(s, 2)).max() <= 1e-6


def test_salkowski_unsupported_angle():
    with pytest.raises(UnsupportedAngleError):
        synth_radius_salkowski(math.pi / 4, HALF_PI)
    with pytest.raises(ParameterDomainError):
        synth_radius_salkowski(math.pi / 4, 0.5, domain=(-1.2, 0.5))


def test_torsion_bound_anomaly():
    rep = check_torsion_bound(helix(3, 4), synth_radius_circular_helix(3, 4, HALF_PI, 0.1))
    assert rep.loc_holds and rep.r_increasing
    assert not rep.bound_holds and not rep.r_prime_below_inv_sqrt2
    assert rep.max_abs_tau_over_kappa == pytest.approx(4 / 3)
    assert not rep.claimed_implication_holds
    assert rep.restricted_implication_holds


def test_torsion_bound_positive_case():
    rep = check_torsion_bound(helix(4, 3), synth_radius_circular_helix(4, 3, HALF_PI, 0.1))
    assert rep.loc_holds and rep.r_increasing and rep.bound_holds and rep.r_prime_below_inv_sqrt2
    assert rep.max_r_prime == pytest.approx(0.6)
    assert rep.claimed_implication_holds and rep.restricted_implication_holds


def test_torsion_bound_planar():
    rep = check_torsion_bound(make_builtin_spine("circle", {"R": 2.0}), RadiusFunction.constant(0.3))
    assert rep.bound_holds and rep.loc_holds and rep.sin_psi is None
    assert rep.to_dict()["claimed_implication_holds"] is True


def test_torsion_bound_non_loc_radius():
    rep = check_torsion_bound(helix(), RadiusFunction.sinusoidal(0.5, 0.1))
    assert not rep.loc_holds
