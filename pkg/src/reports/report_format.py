"""Shared formatting for CSV/JSON artifacts: float spelling, hex floats and nested measures."""

import math
from typing import Any, Dict, List, Sequence

import numpy as np

from ldpnet.domain.measures import AtomMeasure, NestedEmpiricalMeasure

SCHEMA_VERSION = 1


def csv_float(value: float) -> str:
    """Shortest round-trip spelling of a float; non-finite values as inf, -inf, nan."""
    return repr(float(value))


def json_float(value: float) -> Any:
    value = float(value)
    return value if math.isfinite(value) else repr(value)


def versioned(payload: Dict[str, Any]) -> Dict[str, Any]:
    return {"schema_version": SCHEMA_VERSION, **payload}


def hex_vector(values: Sequence[float]) -> List[str]:
    return [float(v).hex() for v in np.asarray(values, dtype=float).reshape(-1)]


def unhex_vector(values: Sequence[str]) -> np.ndarray:
    return np.array([float.fromhex(v) for v in values], dtype=float)


def nested_measure_payload(nu) -> Dict[str, Any]:
    """JSON document of a nested empirical measure, bit-exact through hex floats."""
    atoms = []
    for point, weight, sub in zip(nu.points, nu.weights, nu.subs):
        atoms.append(
            {
                "point": hex_vector(point),
                "weight": float(weight).hex(),
                "sub": [{"point": hex_vector(p), "weight": float(w).hex()} for p, w in zip(sub.points, sub.weights)],
            }
        )
    return versioned({"kind": "nested_empirical_measure", "dimension": int(nu.points.shape[1]), "atoms": atoms})


def nested_measure_from_payload(payload: Dict[str, Any]):
    """Rebuild a NestedEmpiricalMeasure (without provenance) from ``nested_measure_payload``."""
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {payload.get('schema_version')!r}")
    atoms = payload["atoms"]
    points = np.stack([unhex_vector(a["point"]) for a in atoms])
    weights = unhex_vector([a["weight"] for a in atoms])
    subs = tuple(
        AtomMeasure(np.stack([unhex_vector(s["point"]) for s in a["sub"]]), unhex_vector([s["weight"] for s in a["sub"]]))
        for a in atoms
    )
    return NestedEmpiricalMeasure(points, subs, weights)
