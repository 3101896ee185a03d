"""Deterministic JSON rendering shared by the CLI and the experiment reports."""

from __future__ import annotations

import dataclasses
import json
import math
from typing import Any

import numpy as np

SIG_DIGITS = 10


def clean(obj: Any) -> Any:
    """Recursively convert to JSON-ready values.

    Floats are rounded to ``SIG_DIGITS`` significant digits so diffs stay
    stable; non-finite floats become the strings ``"inf"``, ``"-inf"``,
    ``"nan"``; numpy scalars and arrays become Python values.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return clean(dataclasses.asdict(obj))
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [clean(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def dumps(obj: Any) -> str:
    """Canonical JSON text: cleaned values, sorted keys, two-space indent."""
    return json.dumps(clean(obj), sort_keys=True, indent=2)
