"""File formats: JSON spaces and distributions, CSV tables, Bloch triples.

Space file::

    {"points": [{"id": "a", "coords": [0.0]}, ...],
     "metric": "explicit" | "euclidean" | "twosheet",
     "matrix": [[...]]}                       # explicit only

A ``twosheet`` file stores the grid parameters instead of its (large)
distance matrix: ``{"metric": "twosheet", "base": <space object>,
"norm_DI": r, "fiber_points": m, "higgs": [..] | null, "reach": r | null}``.

Distribution file: ``{"space": "<path or id>", "weights": [...]}``. Weights
may be numbers or ``"p/q"`` strings; any string weight makes the whole
vector exact.
"""
import csv
import json
import os
from fractions import Fraction

import numpy as np

from .core import Distribution, FiniteMetricSpace, Point, TwoSheetSpace, TwoSheetState, build_two_sheet
from .errors import ParameterError, ShapeError
from .ncgeom import BlochState

__all__ = [
    "space_to_dict",
    "space_from_dict",
    "load_space",
    "save_space",
    "load_distribution",
    "save_distribution",
    "load_weights",
    "load_twosheet_state",
    "load_higgs_csv",
    "load_bloch",
]


def _json_num(x):
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else int(x)
    return float(x)


def space_to_dict(space):
    if isinstance(space, TwoSheetSpace):
        return {
            "metric": "twosheet",
            "base": space_to_dict(space.base),
            "norm_DI": space.norm_DI,
            "fiber_points": space.fiber_points,
            "higgs": None if np.all(space.profile == space.norm_DI) else space.profile.tolist(),
            "reach": space.reach,
        }
    pts = []
    for p in space.points:
        d = {"id": p.id}
        if p.coords is not None:
            d["coords"] = [float(c) for c in p.coords]
        pts.append(d)
    D = space.dist
    return {
        "points": pts,
        "metric": "explicit",
        "matrix": [[_json_num(x) for x in row] for row in D],
    }


def space_from_dict(obj, validate=True):
    kind = obj.get("metric", "explicit")
    if kind == "twosheet":
        base = space_from_dict(obj["base"], validate)
        return build_two_sheet(base, obj["norm_DI"], int(obj["fiber_points"]), obj.get("higgs"), obj.get("reach"))
    try:
        pts = [Point(str(p["id"]), None if p.get("coords") is None else tuple(float(c) for c in p["coords"])) for p in obj["points"]]
    except (KeyError, TypeError) as exc:
        raise ParameterError(f"malformed points list: {exc}") from None
    if kind == "euclidean":
        if any(p.coords is None for p in pts):
            raise ParameterError("euclidean metric needs coords on every point")
        X = np.array([p.coords for p in pts])
        D = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
        return FiniteMetricSpace(pts, D, validate=False)
    if kind != "explicit":
        raise ParameterError(f"unknown metric kind {kind!r}")
    rows = obj.get("matrix")
    if rows is None:
        raise ParameterError("explicit metric needs a matrix")
    exact = any(isinstance(x, str) for row in rows for x in row)
    if exact:
        D = np.array([[Fraction(x) for x in row] for row in rows], dtype=object)
    else:
        D = np.array(rows, dtype=np.float64)
    if D.ndim != 2:
        raise ShapeError("matrix must be a list of equal-length rows")
    return FiniteMetricSpace(pts, D, validate=validate)


def load_space(path, validate=True):
    with open(path) as fh:
        return space_from_dict(json.load(fh), validate)


def save_space(space, path):
    with open(path, "w") as fh:
        json.dump(space_to_dict(space), fh, indent=1)
        fh.write("\n")


def _weights(raw):
    if any(isinstance(x, str) for x in raw):
        return np.array([Fraction(x) for x in raw], dtype=object)
    return np.array(raw, dtype=np.float64)


def load_weights(path):
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, list):
        return _weights(obj), None
    return _weights(obj["weights"]), obj.get("space")


def load_distribution(path, space=None):
    """Read a distribution; ``space`` overrides the file's ``space`` entry.

    A relative space path is resolved against the distribution file.
    """
    w, ref = load_weights(path)
    if space is None:
        if ref is None:
            raise ParameterError(f"{path}: no space given")
        sp = ref if os.path.isabs(ref) else os.path.join(os.path.dirname(os.path.abspath(path)), ref)
        space = load_space(sp)
    return Distribution(space, w)


def save_distribution(d, path, space_ref=""):
    with open(path, "w") as fh:
        json.dump({"space": space_ref, "weights": [_json_num(x) for x in d.weights]}, fh)
        fh.write("\n")


def load_twosheet_state(path):
    """``{"mu": [...], "nu": [...]}`` weight vectors on the two sheets."""
    with open(path) as fh:
        obj = json.load(fh)
    return TwoSheetState(_weights(obj["mu"]), _weights(obj["nu"]))


def load_higgs_csv(path, base):
    """Per-point profile from ``point_id,value`` rows, ordered as ``base``."""
    vals = {}
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if len(row) < 2 or row[0].strip().startswith("#"):
                continue
            try:
                vals[row[0].strip()] = float(row[1])
            except ValueError:
                continue  # header
    missing = [pid for pid in base.ids if pid not in vals]
    if missing:
        raise ParameterError(f"{path}: no profile value for {missing[:5]}")
    return np.array([vals[pid] for pid in base.ids])


def load_bloch(path):
    """List of Bloch states from JSON ``[[x, y, z], ...]`` or ``{"states": ...}``."""
    with open(path) as fh:
        obj = json.load(fh)
    if isinstance(obj, dict):
        obj = obj["states"]
    out = []
    for t in obj:
        if isinstance(t, dict):
            out.append(BlochState(float(t["x"]), float(t["y"]), float(t["z"])))
        else:
            if len(t) != 3:
                raise ShapeError("Bloch states are [x, y, z] triples")
            out.append(BlochState(*(float(c) for c in t)))
    return out


def parse_bloch(text):
    """``"x,y,z"`` -> BlochState (CLI helper)."""
    parts = [float(s) for s in text.split(",")]
    if len(parts) != 3:
        raise ShapeError(f"expected x,y,z, got {text!r}")
    return BlochState(*parts)

