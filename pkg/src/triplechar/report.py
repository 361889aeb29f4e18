from __future__ import annotations

import math
from fractions import Fraction
from dataclasses import dataclass, field

import numpy as np


def jsonable(v):
    if isinstance(v, dict):
        return {k: jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return jsonable(v.tolist())
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, Fraction):
        v = float(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


@dataclass
class ConditionReport:
    """Outcome of a grid check. ``holds`` is always ``margin >= 0``."""

    name: str
    margin: float
    constants: dict = field(default_factory=dict)
    worst_point: dict | None = None
    details: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return bool(self.margin >= 0)

    def to_dict(self) -> dict:
        return jsonable({
            "name": self.name,
            "holds": self.holds,
            "margin": self.margin,
            "constants": self.constants,
            "worst_point": self.worst_point,
            "details": self.details,
        })


def point_dict(t, x, xi) -> dict:
    return {
        "t": float(t),
        "x": [float(v) for v in np.atleast_1d(x)],
        "xi": [float(v) for v in np.atleast_1d(xi)],
    }
