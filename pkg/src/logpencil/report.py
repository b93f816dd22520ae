"""Deterministic JSON encoding for reports."""

from __future__ import annotations

import json
from fractions import Fraction

import numpy as np

from . import __version__


def encode(obj):
    """Convert report payloads into plain JSON values.

    Complex numbers become ``{"re", "im"}``, Fractions become ``"p/q"``
    strings, arrays become nested lists.
    """
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return encode(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return encode(obj.to_dict())
    return str(obj)


def dumps(report: dict) -> str:
    return json.dumps(encode(report), sort_keys=True, indent=2) + "\n"


def metadata(command: str, seed: int, **extra) -> dict:
    meta = {"command": command, "seed": seed, "version": __version__}
    meta.update(extra)
    return meta
