"""JSON model files.

Layout (``version`` 1)::

    {
      "format": "rbfpu-model",
      "version": 1,
      "kernel": "imq" | "matern2",
      "dim": M,
      "cover": {"per_axis": n_c, "spacing": s, "baseline_radius": delta},
      "transform": {"offset": [...], "scale": [...]} | null,
      "provenance": {...},
      "warnings": [...],
      "nodes": [[x_1 ... x_M], ...],           # unit-cube coordinates
      "values": [...],
      "subdomains": [
        {"center": [...], "delta": ..., "epsilon": ..., "delta_min": ... | null,
         "score": ... | null, "members": [i, ...], "coefficients": [...], "note": ""},
        ...
      ]
    }

Floats are written with ``repr`` precision, so a load reproduces the model
bit for bit.
"""

from __future__ import annotations

import json

import numpy as np

from .datasets import DomainTransform
from .errors import ModelFormatError
from .geometry import grid_cover
from .pu import LocalInterpolant, PUModel

FORMAT = "rbfpu-model"
VERSION = 1


def _opt(v):
    return None if v is None else float(v)


def model_to_dict(model: PUModel) -> dict:
    return {
        "format": FORMAT,
        "version": VERSION,
        "kernel": model.tag,
        "dim": model.dim,
        "cover": {
            "per_axis": model.cover.per_axis,
            "spacing": model.cover.spacing,
            "baseline_radius": model.cover.baseline_radius,
        },
        "transform": None if model.transform is None else model.transform.to_dict(),
        "provenance": model.provenance,
        "warnings": list(model.warnings),
        "nodes": model.nodes.tolist(),
        "values": model.values.tolist(),
        "subdomains": [
            {
                "center": s.center.tolist(),
                "delta": s.delta,
                "epsilon": s.epsilon,
                "delta_min": _opt(s.delta_min),
                "score": _opt(s.score),
                "members": s.member_indices.tolist(),
                "coefficients": s.coefficients.tolist(),
                "note": s.note,
            }
            for s in model.subdomains
        ],
    }


def model_from_dict(d: dict) -> PUModel:
    if d.get("format") != FORMAT:
        raise ModelFormatError(f"not an rbfpu model file (format={d.get('format')!r})")
    if d.get("version") != VERSION:
        raise ModelFormatError(f"unsupported model schema version {d.get('version')!r}; this build reads version {VERSION}")
    try:
        dim = int(d["dim"])
        nodes = np.array(d["nodes"], dtype=float).reshape(-1, dim)
        values = np.array(d["values"], dtype=float)
        cover = grid_cover(int(d["cover"]["per_axis"]), dim)
        subs = []
        for s in d["subdomains"]:
            members = np.array(s["members"], dtype=int)
            sub = LocalInterpolant(
                np.array(s["center"], dtype=float),
                float(s["delta"]),
                float(s["epsilon"]),
                members,
                np.array(s["coefficients"], dtype=float),
                nodes[members],
                delta_min=s.get("delta_min"),
                score=s.get("score"),
                note=s.get("note", ""),
            )
            subs.append(sub)
        transform = d.get("transform")
        transform = None if transform is None else DomainTransform.from_dict(transform)
        return PUModel(d["kernel"], dim, cover, subs, nodes, values, d.get("provenance", {}),
                       transform, list(d.get("warnings", [])))
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise ModelFormatError(f"malformed model file: {exc}") from exc


def save_model(model: PUModel, path):
    with open(path, "w") as fh:
        json.dump(model_to_dict(model), fh)


def load_model(path) -> PUModel:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except OSError as exc:
        raise ModelFormatError(f"cannot read model {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise ModelFormatError(f"{path}: top level must be an object")
    return model_from_dict(d)
