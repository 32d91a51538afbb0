"""Structured check reports and deterministic JSON/hash serialization."""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from .grids import Path, TimeGrid

__all__ = ["IdentityReport", "canonical_json", "content_hash", "grid_payload"]


def grid_payload(grid: TimeGrid) -> dict:
    return {"dt": grid.dt, "n_steps": grid.n_steps}


@dataclass
class IdentityReport:
    """Residual report for a pathwise identity check.

    ``components`` holds the named term paths whose combination is the
    checked identity; they are written out as CSV artifacts when the
    report is serialized by the experiment runner.
    """

    identity_name: str
    grid: TimeGrid
    sup_residual: float
    l2_residual: float
    tolerance: float | None = None
    passed: bool | None = None
    components: dict[str, Path] = field(default_factory=dict, repr=False)
    extra: dict[str, Any] = field(default_factory=dict)

    def to_payload(self, csv_refs: Mapping[str, str] | None = None) -> dict:
        refs = csv_refs or {}
        return {
            "identity_name": self.identity_name,
            "grid": grid_payload(self.grid),
            "sup_residual": self.sup_residual,
            "l2_residual": self.l2_residual,
            "pass": self.passed,
            "tolerance": self.tolerance,
            "components": [
                {"name": name, "csv_ref": refs.get(name)} for name in sorted(self.components)
            ],
            **({"extra": _plain(self.extra)} if self.extra else {}),
        }


def residual_norms(residual: np.ndarray, dt: float) -> tuple[float, float]:
    """(sup, integral-L2) norms of a residual path."""
    sup = float(np.max(np.abs(residual)))
    l2 = float(math.sqrt(dt * float(np.sum(residual * residual))))
    return sup, l2


def _plain(obj: Any) -> Any:
    """Recursively coerce numpy scalars/arrays into JSON-safe values."""
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return repr(obj)
    return obj


def canonical_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, shortest-round-trip floats."""
    return json.dumps(_plain(obj), sort_keys=True, separators=(",", ":"), allow_nan=False)


def content_hash(obj: Any) -> str:
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()
