import math

import numpy as np
import pytest

from canalkit.loc import trace_curvature_line
from canalkit.mesh import (POLYLINE_HEADER, area, euler_characteristic, export_obj, export_polyline_csv,
                           is_closed, obj_text, parse_obj, tessellate)
from canalkit.spine import make_builtin_spine
from canalkit.surface import Profile, RadiusFunction, eval_canal_point, make_canal, make_generalized_tube


def test_torus_mesh_topology(torus):
    m = tessellate(torus, 24, 16)
    assert m.vertices.shape == (24 * 16, 3) and m.faces.shape == (24 * 16, 4)
    assert is_closed(m) and euler_characteristic(m) == 0
    assert m.regular.all() and not m.degenerate_faces.any()


def test_vertices_are_surface_points(loc_canal):
    m = tessellate(loc_canal, 9, 12)
    assert np.array_equal(m.vertices, eval_canal_point(loc_canal, m.s, m.theta))
    # open in s, closed in theta
    assert len(m.faces) == 8 * 12 and not is_closed(m)


def test_torus_area_converges(torus):
    exact = 4 * math.pi ** 2 * 2.0 * 0.5
    errs = [abs(area(tessellate(torus, n, n)) - exact) / exact for n in (32, 64, 128)]
    assert errs[0] > errs[1] > errs[2]
    assert errs[2] <= 1e-3


def test_mesh_gaussian_and_normals(torus):
    m = tessellate(torus, 16, 8)
    th = m.theta
    expected = np.cos(th) / (0.5 * (2 + 0.5 * np.cos(th)))
    assert np.abs(m.gaussian - expected).max() <= 1e-6
    assert np.allclose(np.linalg.norm(m.normals, axis=1), 1.0)


def test_singular_vertices_flagged():
    c = make_canal(make_builtin_spine("circle", {"R": 1.0}), RadiusFunction.constant(1.0))
    m = tessellate(c, 8, 4)   # theta = pi is the singular circle
    assert (~m.regular).sum() == 8
    assert np.isnan(m.normals[~m.regular]).all()
    assert m.degenerate_faces.sum() == 16
    text = obj_text(m)
    assert text.count("# singular") == 16
    assert "nan" not in text


def test_threads_do_not_change_output(surfaces):
    c = surfaces["random_spline"]
    a = obj_text(tessellate(c, 20, 10, threads=1))
    b = obj_text(tessellate(c, 20, 10, threads=4))
    assert a == b


def test_minimal_obj_layout(tmp_path):
    c = make_canal(make_builtin_spine("line", {}, (0, 1)), RadiusFunction.constant(0.5))
    m = tessellate(c, 2, 3)
    path = tmp_path / "m.obj"
    export_obj(m, path)
    lines = path.read_text().splitlines()
    assert sum(ln.startswith("v ") for ln in lines) == 6
    assert sum(ln.startswith("vn ") for ln in lines) == 6
    faces = [ln for ln in lines if ln.startswith("f ")]
    assert faces[0] == "f 1//1 4//4 5//5 2//2" and len(faces) == 3
    assert "-0.000000000" not in path.read_text()


def test_obj_round_trip(tmp_path, surfaces):
    m = tessellate(surfaces["salkowski"], 12, 9)
    path = tmp_path / "s.obj"
    export_obj(m, path)
    v, vn, f = parse_obj(path)
    assert np.abs(v - m.vertices).max() <= 5e-10
    assert np.abs(vn - m.normals).max() <= 5e-10
    assert np.array_equal(f, m.faces)


def test_generalized_tube_mesh():
    gt = make_generalized_tube(make_builtin_spine("circle", {"R": 5.0}), Profile.fourier(2.0, [0.3]))
    m = tessellate(gt, 32, 16)
    assert is_closed(m) and euler_characteristic(m) == 0
    assert m.regular.all()


def test_bad_grid():
    c = make_canal(make_builtin_spine("line", {}, (0, 1)), RadiusFunction.constant(0.5))
    with pytest.raises(ValueError):
        tessellate(c, 1, 8)


def test_polyline_csv(tmp_path, torus):
    tr = trace_curvature_line(torus, 1.0, 0.3, family=1, max_length=0.5)
    path = tmp_path / "t.csv"
    export_polyline_csv(tr, path)
    rows = path.read_text().splitlines()
    assert rows[0] == POLYLINE_HEADER
    assert len(rows) == len(tr) + 1
    first = [float(x) for x in rows[1].split(",")]
    assert first[0] == 0 and first[1] == pytest.approx(1.0) and first[6] == pytest.approx(2.0, abs=1e-6)
