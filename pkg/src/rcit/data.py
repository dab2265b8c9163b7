"""Sample matrices with named columns and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from rcit.exceptions import InvalidInputError


@dataclass(frozen=True)
class DataMatrix:
    """An ``(n, p)`` float matrix with one name per column."""

    values: np.ndarray
    column_names: tuple[str, ...]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        if vals.ndim != 2:
            raise InvalidInputError("values must be 2-D")
        if len(self.column_names) != vals.shape[1]:
            raise InvalidInputError("one column name per column required")
        if len(set(self.column_names)) != len(self.column_names):
            raise InvalidInputError("column names must be unique")
        if not np.all(np.isfinite(vals)):
            raise InvalidInputError("values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "column_names", tuple(str(c) for c in self.column_names))

    @classmethod
    def from_array(cls, values, column_names=None, prefix: str = "V") -> "DataMatrix":
        vals = np.asarray(values, dtype=float)
        if vals.ndim == 1:
            vals = vals[:, None]
        names = column_names or [f"{prefix}{i + 1}" for i in range(vals.shape[1])]
        return cls(vals, tuple(names))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)

    def columns(self, names) -> np.ndarray:
        missing = [nm for nm in names if nm not in self.column_names]
        if missing:
            raise InvalidInputError(f"unknown columns: {', '.join(missing)}")
        idx = [self.column_names.index(nm) for nm in names]
        return self.values[:, idx]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.column_names)
            for row in self.values:
                w.writerow([repr(float(v)) for v in row])

    @classmethod
    def read_csv(cls, path) -> "DataMatrix":
        """Comma-separated, header required, all cells parsed as floats."""
        path = Path(path)
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise InvalidInputError(f"{path}: empty file") from None
            rows = []
            for line_no, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != len(header):
                    raise InvalidInputError(
                        f"{path}: row {line_no} has {len(row)} fields, header has {len(header)}")
                parsed = []
                for col, cell in zip(header, row):
                    try:
                        parsed.append(float(cell))
                    except ValueError:
                        raise InvalidInputError(
                            f"{path}: row {line_no}, column {col!r}: cannot parse {cell!r}") from None
                rows.append(parsed)
        values = np.array(rows, dtype=float).reshape(len(rows), len(header))
        if not np.all(np.isfinite(values)):
            bad = np.argwhere(~np.isfinite(values))[0]
            raise InvalidInputError(
                f"{path}: row {bad[0] + 2}, column {header[bad[1]]!r}: non-finite value")
        return cls(values, tuple(h.strip() for h in header))
