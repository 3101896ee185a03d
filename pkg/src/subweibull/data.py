"""Sample containers and CSV ingestion."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .errors import InputError


@dataclass(frozen=True)
class SampleBatch:
    """Read-only observations: a 1-D vector of scalars or a 2-D array of row vectors."""

    values: np.ndarray

    def __post_init__(self):
        arr = np.array(self.values, dtype=float)
        if arr.ndim not in (1, 2) or arr.size == 0:
            raise InputError("samples must be a nonempty vector or matrix")
        if not np.all(np.isfinite(arr)):
            raise InputError("samples must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def is_vector_rows(self) -> bool:
        return self.values.ndim == 2

    def scalars(self) -> np.ndarray:
        if self.values.ndim == 2:
            if self.values.shape[1] != 1:
                raise InputError("expected scalar observations, got row vectors")
            return self.values[:, 0]
        return self.values


def as_array(samples) -> np.ndarray:
    """Coerce a SampleBatch or array-like into a validated 1-D float array."""
    if isinstance(samples, SampleBatch):
        return samples.scalars()
    return SampleBatch(np.asarray(samples, dtype=float).ravel()).values


def parse_csv_text(text: str) -> SampleBatch:
    """Parse one value per line, or comma/whitespace separated row vectors."""
    rows = []
    for lineno, line in enumerate(io.StringIO(text), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f for f in next(csv.reader([line.replace("\t", ",").replace(" ", ","),]))
                  if f.strip()]
        try:
            rows.append([float(f) for f in fields])
        except ValueError as exc:
            raise InputError(f"malformed CSV at line {lineno}: {line!r}") from exc
    if not rows:
        raise InputError("no data rows found")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise InputError("rows have unequal lengths")
    arr = np.asarray(rows, dtype=float)
    return SampleBatch(arr[:, 0] if arr.shape[1] == 1 else arr)


def load_csv(path: Union[str, Path]) -> SampleBatch:
    p = Path(path)
    if not p.is_file():
        raise InputError(f"file not found: {p}")
    return parse_csv_text(p.read_text())
