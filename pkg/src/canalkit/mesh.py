"""Quad tessellation of canal surfaces and generalized tubes, OBJ/CSV export."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ._io import atomic_write_text
from .forms import FirstForm, SecondForm, loc_terms, principal_curvatures, surface_jet
from .loc import SINGULAR_TOL
from .surface import CanalSurface


@dataclass(frozen=True, eq=False)
class QuadMesh:
    vertices: np.ndarray      # (V, 3)
    normals: np.ndarray       # (V, 3), NaN at singular vertices
    faces: np.ndarray         # (F, 4) zero-based, s-major
    s: np.ndarray             # (V,)
    theta: np.ndarray         # (V,)
    regular: np.ndarray       # (V,) bool
    gaussian: np.ndarray      # (V,)
    shape: tuple              # (n_s, n_theta)

    @property
    def degenerate_faces(self):
        return ~np.all(self.regular[self.faces], axis=1)


def _closed_normals(canal, S, TH):
    A, _, Q = loc_terms(canal, S, TH)
    fr = canal.spine.frenet(S)
    psi = canal.formula_angle(TH)
    den = np.sqrt(A * A + Q * Q)
    regular = np.abs(canal.regularity_residual(S, TH)) > SINGULAR_TOL
    ring = np.cos(psi)[..., None] * fr.N + np.sin(psi)[..., None] * fr.B
    with np.errstate(invalid="ignore", divide="ignore"):
        n = (Q[..., None] * fr.T + A[..., None] * ring) / den[..., None]
    n[~regular] = np.nan
    return n, regular


def _dot(a, b):
    return np.einsum("...i,...i->...", a, b)


def _evaluate_rows(surface, S, TH, step):
    P = surface.point(S, TH)
    jet = surface_jet(surface, S, TH, step=step, strict=False)
    first = FirstForm(_dot(jet.Ks, jet.Ks), _dot(jet.Ks, jet.Kt), _dot(jet.Kt, jet.Kt))
    second = SecondForm(_dot(jet.normal, jet.Kss), _dot(jet.normal, jet.Kst), _dot(jet.normal, jet.Ktt))
    with np.errstate(invalid="ignore", divide="ignore"):
        K = principal_curvatures(first, second)[2]
    if isinstance(surface, CanalSurface):
        n, regular = _closed_normals(surface, S, TH)
    else:
        n = jet.normal
        regular = np.all(np.isfinite(n), axis=-1)
    K = np.where(regular, K, np.nan)
    return P, n, regular, K


def tessellate(surface, n_s: int, n_theta: int, wrap_theta: bool = True, wrap_s=None,
               threads: int = 1, step: float = 1e-3) -> QuadMesh:
    """Evaluate ``surface`` on an n_s x n_theta parameter grid.

    Vertices are ``surface.point`` at the grid nodes, s-major.  With
    ``wrap_theta`` the theta grid omits 2 pi and faces close around; s wraps
    likewise when the spine is closed (``wrap_s`` defaults to that).
    Singular vertices are flagged and keep their index.
    """
    if n_s < 2 or n_theta < 3:
        raise ValueError("need n_s >= 2 and n_theta >= 3")
    lo, hi = surface.domain
    if wrap_s is None:
        wrap_s = bool(getattr(surface, "closed_s", False))
    s = np.linspace(lo, hi, n_s, endpoint=not wrap_s)
    theta = np.linspace(0.0, 2 * math.pi, n_theta, endpoint=not wrap_theta)
    S, TH = np.meshgrid(s, theta, indexing="ij")

    chunks = np.array_split(np.arange(n_s), max(1, min(int(threads), n_s)))
    if len(chunks) > 1:
        with ThreadPoolExecutor(len(chunks)) as pool:
            parts = list(pool.map(lambda rows: _evaluate_rows(surface, S[rows], TH[rows], step),
                                  chunks))
    else:
        parts = [_evaluate_rows(surface, S, TH, step)]
    P, n, regular, K = (np.concatenate([p[k] for p in parts], axis=0) for k in range(4))

    idx = np.arange(n_s * n_theta).reshape(n_s, n_theta)
    i_max = n_s if wrap_s else n_s - 1
    j_max = n_theta if wrap_theta else n_theta - 1
    faces = []
    for i in range(i_max):
        i1 = (i + 1) % n_s
        for j in range(j_max):
            j1 = (j + 1) % n_theta
            faces.append((idx[i, j], idx[i1, j], idx[i1, j1], idx[i, j1]))
    return QuadMesh(P.reshape(-1, 3), n.reshape(-1, 3), np.asarray(faces, dtype=np.int64).reshape(-1, 4),
                    S.ravel(), TH.ravel(), regular.ravel(), K.ravel(), (n_s, n_theta))


def area(mesh: QuadMesh) -> float:
    """Sum of quad vector areas 0.5 |d1 x d2| over all faces."""
    v = mesh.vertices[mesh.faces]
    cr = np.cross(v[:, 2] - v[:, 0], v[:, 3] - v[:, 1])
    return float(0.5 * np.linalg.norm(cr, axis=1).sum())


def edges(mesh: QuadMesh):
    """Unique undirected edges and how many faces use each."""
    f = mesh.faces
    e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 3]], f[:, [3, 0]]])
    e = np.sort(e, axis=1)
    return np.unique(e, axis=0, return_counts=True)


def euler_characteristic(mesh: QuadMesh) -> int:
    uniq, _ = edges(mesh)
    return int(len(mesh.vertices) - len(uniq) + len(mesh.faces))


def is_closed(mesh: QuadMesh) -> bool:
    """Every edge shared by exactly two faces."""
    _, counts = edges(mesh)
    return bool(np.all(counts == 2))


# --------------------------------------------------------------------------
# export


def _clean(a):
    """Zero entries below the 9-decimal quantum so no '-0.000000000' appears."""
    return np.where(np.abs(a) < 5e-10, 0.0, a)


def _fmt_vec(prefix, v):
    return f"{prefix} {v[0]:.9f} {v[1]:.9f} {v[2]:.9f}"


def obj_text(mesh: QuadMesh) -> str:
    lines = ["# canalkit quad mesh",
             f"# grid {mesh.shape[0]} x {mesh.shape[1]}, {len(mesh.vertices)} vertices, "
             f"{len(mesh.faces)} faces"]
    lines += [_fmt_vec("v", p) for p in _clean(mesh.vertices)]
    normals = _clean(np.where(np.isfinite(mesh.normals), mesh.normals, 0.0))
    lines += [_fmt_vec("vn", n) for n in normals]
    degenerate = mesh.degenerate_faces
    for face, bad in zip(mesh.faces + 1, degenerate):
        if bad:
            lines.append("# singular")
        lines.append("f " + " ".join(f"{k}//{k}" for k in face))
    return "\n".join(lines) + "\n"


def export_obj(mesh: QuadMesh, path) -> str:
    return atomic_write_text(path, obj_text(mesh))


def parse_obj(path):
    """(vertices, normals, faces) from an OBJ written by :func:`export_obj`."""
    v, vn, f = [], [], []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts or parts[0].startswith("#"):
                continue
            if parts[0] == "v":
                v.append([float(x) for x in parts[1:4]])
            elif parts[0] == "vn":
                vn.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                f.append([int(x.split("/")[0]) - 1 for x in parts[1:]])
    return np.array(v), np.array(vn), np.array(f, dtype=np.int64)


POLYLINE_HEADER = "step,s,theta,x,y,z,k_n"


def polyline_text(trace) -> str:
    """CSV rows step, s, theta, x, y, z, k_n for anything with those arrays."""
    k = np.asarray(getattr(trace, "k_n", np.full(len(trace.s), np.nan)), dtype=float)
    rows = [POLYLINE_HEADER]
    for i, (s, th, p, kn) in enumerate(zip(trace.s, trace.theta, trace.points, k)):
        rows.append(f"{i},{s:.9g},{th:.9g},{p[0]:.9g},{p[1]:.9g},{p[2]:.9g},{kn:.9g}")
    return "\n".join(rows) + "\n"


def export_polyline_csv(trace, path) -> str:
    return atomic_write_text(path, polyline_text(trace))
