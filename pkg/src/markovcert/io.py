"""JSON file formats: ``qstate-v1`` states, RDM bundles, plans and epsilons.

Floats are written with Python's shortest round-trip repr, so every double
survives a write/read cycle bit for bit.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .errors import ValidationError
from .markov import ShieldPlan
from .state import (
    DEFAULT_TOL,
    DensityMatrix,
    StateVector,
    SystemLayout,
    Tolerances,
    check_density_matrix,
    project_to_density,
    to_density,
)

STATE_FORMAT = "qstate-v1"
BUNDLE_FORMAT = "qstate-bundle-v1"


def load_json(path) -> dict:
    """Parse a JSON file; syntax errors surface as ValidationError."""
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"{path}: malformed JSON ({exc})") from exc


def dump_json(obj, path=None) -> str:
    text = json.dumps(obj, indent=1, allow_nan=False)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def _pairs(a: np.ndarray) -> list[list[float]]:
    flat = np.asarray(a, dtype=np.complex128).ravel()
    return [[float(z.real), float(z.imag)] for z in flat]


def state_to_dict(state) -> dict:
    if isinstance(state, StateVector):
        kind, data = "pure", state.amplitudes
    else:
        kind, data = "density", state.data
    return {
        "format": STATE_FORMAT,
        "kind": kind,
        "labels": list(state.layout.labels),
        "dims": list(state.layout.dims),
        "sites": list(state.sites.sites),
        "data": _pairs(data),
    }


def state_from_dict(d: Mapping, *, repair: bool = False, tol: Tolerances = DEFAULT_TOL) -> DensityMatrix:
    """Build a DensityMatrix from a ``qstate-v1`` object.

    Inputs outside tolerance are rejected unless ``repair`` routes them
    through :func:`project_to_density`. Pure states are returned as their
    projector.
    """
    if not isinstance(d, Mapping) or d.get("format") != STATE_FORMAT:
        raise ValidationError(f"expected format {STATE_FORMAT!r}")
    try:
        dims = [int(x) for x in d["dims"]]
        labels = d.get("labels")
        sites = d.get("sites")
        layout = SystemLayout.from_dims(dims, labels, sites=sites)
        raw = np.array([complex(float(re), float(im)) for re, im in d["data"]], dtype=np.complex128)
        kind = d["kind"]
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise
        raise ValidationError(f"malformed {STATE_FORMAT} object: {exc}") from exc
    dim = layout.total_dim
    if kind == "density":
        if raw.size != dim * dim:
            raise ValidationError(f"density data has {raw.size} entries, expected {dim * dim}")
        m = raw.reshape(dim, dim)
        if repair:
            return project_to_density(m, layout, sites)
        check_density_matrix(m, tol)
        return DensityMatrix(m, layout, sites, check=False)
    if kind == "pure":
        if raw.size != dim:
            raise ValidationError(f"pure data has {raw.size} amplitudes, expected {dim}")
        if repair:
            norm = np.linalg.norm(raw)
            if norm == 0:
                raise ValidationError("zero state vector")
            raw = raw / norm
        return to_density(StateVector(raw, layout, sites))
    raise ValidationError(f"unknown state kind {kind!r}")


def bundle_to_dict(states: Iterable[DensityMatrix]) -> dict:
    return {"format": BUNDLE_FORMAT, "states": [state_to_dict(s) for s in states]}


def bundle_from_dict(d: Mapping, *, repair: bool = False, tol: Tolerances = DEFAULT_TOL) -> list[DensityMatrix]:
    if isinstance(d, Mapping) and d.get("format") == STATE_FORMAT:
        return [state_from_dict(d, repair=repair, tol=tol)]
    if not isinstance(d, Mapping) or d.get("format") != BUNDLE_FORMAT:
        raise ValidationError(f"expected format {BUNDLE_FORMAT!r}")
    states = d.get("states")
    if not isinstance(states, list):
        raise ValidationError("bundle has no 'states' list")
    return [state_from_dict(s, repair=repair, tol=tol) for s in states]


def read_state(path, **kw) -> DensityMatrix:
    return state_from_dict(load_json(path), **kw)


def write_state(state, path) -> None:
    dump_json(state_to_dict(state), path)


def read_bundle(path, **kw) -> list[DensityMatrix]:
    return bundle_from_dict(load_json(path), **kw)


def write_bundle(states, path) -> None:
    dump_json(bundle_to_dict(states), path)


def read_plan(path) -> ShieldPlan:
    return ShieldPlan.from_dict(load_json(path))


def read_epsilons(path) -> dict[int, float]:
    """``{"epsilons": {"<site>": eps}}`` or ``{"epsilons": [{"site": k, "epsilon": e}]}``."""
    d = load_json(path)
    raw = d.get("epsilons", d) if isinstance(d, Mapping) else d
    try:
        if isinstance(raw, Mapping):
            return {int(k): float(v) for k, v in raw.items()}
        return {int(e["site"]): float(e["epsilon"]) for e in raw}
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed epsilon file: {exc}") from exc
