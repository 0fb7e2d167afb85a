"""Scene JSON: schema validation and construction of surfaces from a config."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import jsonschema

from .radius import synth_radius_quadrature, synth_radius_salkowski
from .spine import SpineCurve, spine_from_dict
from .surface import (RadiusFunction, make_canal, make_generalized_tube, profile_from_dict,
                      radius_from_dict)

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}

SCENE_SCHEMA = {
    "type": "object",
    "required": ["spine"],
    "properties": {
        "spine": {
            "type": "object",
            "required": ["kind"],
            "properties": {
                "kind": {"enum": ["circle", "line", "circular_helix", "general_helix_like",
                                  "salkowski", "sampled"]},
                "params": {"type": "object"},
                "domain": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2},
                "rows": {"type": "array",
                         "items": {"type": "array", "items": _NUM, "minItems": 4, "maxItems": 4}},
                "csv": {"type": "string"},
            },
            "additionalProperties": False,
        },
        "radius": {
            "type": "object",
            "required": ["form"],
            "properties": {
                "form": {"enum": ["constant", "linear", "sinusoidal", "user_sampled",
                                  "quadrature_table", "salkowski_closed"]},
                "params": {"type": "object"},
                "rows": {"type": "array",
                         "items": {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}},
            },
            "additionalProperties": False,
        },
        "profile": {
            "type": "object",
            "required": ["form", "params"],
            "properties": {"form": {"enum": ["constant", "fourier"]}, "params": {"type": "object"}},
            "additionalProperties": False,
        },
        "branch": {"enum": ["minus", "plus"]},
        "grid": {
            "type": "object",
            "properties": {"n_s": {"type": "integer", "minimum": 2},
                           "n_theta": {"type": "integer", "minimum": 3}},
            "additionalProperties": False,
        },
        "tol": {"type": "number", "exclusiveMinimum": 0},
        "synth": {
            "type": "object",
            "required": ["theta_star"],
            "properties": {
                "method": {"enum": ["quadrature", "circular_helix", "general_helix", "salkowski"]},
                "theta_star": _NUM,
                "c": _NUM,
                "s_ref": _NUM,
            },
            "additionalProperties": False,
        },
        "trace": {
            "type": "object",
            "properties": {
                "mode": {"enum": ["vessiot", "curvature_line"]},
                "s0": _NUM,
                "theta0": _NUM,
                "s_end": _NUM,
                "family": {"enum": [1, 2]},
                "max_steps": _POS_INT,
                "max_length": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "samples": _POS_INT,
    },
    "not": {"required": ["radius", "profile"]},
    "additionalProperties": False,
}


class SceneError(ValueError):
    """Invalid scene document (CLI exit code 2)."""


@dataclass
class Scene:
    doc: dict
    base_dir: Optional[Path] = None
    spine: SpineCurve = field(init=False, repr=False)

    def __post_init__(self):
        self.spine = spine_from_dict(self.doc["spine"], self.base_dir)

    @property
    def branch(self) -> str:
        return self.doc.get("branch", "minus")

    @property
    def is_tube(self) -> bool:
        return "profile" in self.doc

    def grid(self, n_s=None, n_theta=None):
        g = self.doc.get("grid", {})
        return int(n_s or g.get("n_s", 64)), int(n_theta or g.get("n_theta", 64))

    def tol(self, override=None) -> float:
        return float(override or self.doc.get("tol", 1e-6))

    def radius(self) -> RadiusFunction:
        doc = self.doc.get("radius")
        if doc is None:
            raise SceneError("scene has no 'radius'")
        form, p = doc["form"], doc.get("params", {})
        if form == "quadrature_table":
            return synth_radius_quadrature(self.spine, float(p["theta_star"]), p.get("c"),
                                           p.get("s_ref"), self.branch).radius
        if form == "salkowski_closed":
            return synth_radius_salkowski(float(p["phi"]), float(p["theta_star"]),
                                          float(p.get("c", 0.0)), self.spine.domain)
        return radius_from_dict(doc)

    def surface(self):
        """The canal surface, or the generalized tube when a profile is given."""
        if self.is_tube:
            return make_generalized_tube(self.spine, profile_from_dict(self.doc["profile"]))
        return make_canal(self.spine, self.radius(), self.branch)


def parse_scene_text(text: str, base_dir=None) -> Scene:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SceneError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        jsonschema.validate(doc, SCENE_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise SceneError(f"scene schema error at {where}: {exc.message}") from None
    try:
        return Scene(doc, base_dir)
    except (KeyError, TypeError) as exc:
        raise SceneError(f"invalid spine block: {exc}") from None


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise SceneError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_scene_text(text, path.parent)
