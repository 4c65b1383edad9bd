"""
Observation datasets and headerless CSV ingestion.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from ..kernel import KernelSpec

LOG = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Dataset:
    """n observations; first b coordinates real, remaining ones nonnegative counts."""
    values: np.ndarray
    b: int

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        if values.ndim != 2 or values.shape[0] == 0:
            raise ValueError(f"dataset must be a nonempty (n, d) array, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("dataset values must be finite")
        counts = values[:, self.b:]
        if np.any(counts < 0) or np.any(counts != np.floor(counts)):
            raise ValueError("count coordinates must be nonnegative integers")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_array(cls, values, kernel: KernelSpec) -> "Dataset":
        return cls(values=kernel.check_observations(values), b=kernel.b)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]

    def check_kernel(self, kernel: KernelSpec) -> None:
        if self.d != kernel.d or self.b != kernel.b:
            raise ValueError(f"dataset (d={self.d}, b={self.b}) does not match kernel (d={kernel.d}, b={kernel.b})")

    def concat(self, other: "Dataset") -> "Dataset":
        if other.d != self.d or other.b != self.b:
            raise ValueError("cannot concatenate datasets of different shape")
        return Dataset(values=np.vstack([self.values, other.values]), b=self.b)

    def to_frame(self) -> pd.DataFrame:
        df = pd.DataFrame(self.values)
        for col in range(self.b, self.d):
            df[col] = df[col].astype(np.int64)
        return df

    def to_csv(self, path: Union[str, Path]) -> None:
        self.to_frame().to_csv(path, header=False, index=False, float_format="%.17g")

    @classmethod
    def from_csv(cls, path: Union[str, Path], kernel: KernelSpec) -> "Dataset":
        """
        Read a headerless CSV with one observation per row.

        Rows that do not parse (wrong column count, non-numeric value, or a
        count column that is not a nonnegative integer) are rejected with
        their 1-based line number.
        """
        path = Path(path)
        try:
            raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skip_blank_lines=False)
        except pd.errors.EmptyDataError as e:
            raise ValueError(f"{path}: no observations") from e
        except pd.errors.ParserError as e:
            raise ValueError(f"{path}: {e}") from e

        if raw.shape[1] != kernel.d:
            raise ValueError(f"{path}: expected {kernel.d} columns, found {raw.shape[1]}")

        rows = []
        for index, record in enumerate(raw.itertuples(index=False, name=None)):
            line = index + 1
            cells = [str(c).strip() for c in record]
            if all(c == "" for c in cells):
                continue
            try:
                row = [float(c) for c in cells]
            except ValueError as e:
                raise ValueError(f"{path}:{line}: non-numeric value in row {cells}") from e
            if not all(np.isfinite(row)):
                raise ValueError(f"{path}:{line}: non-finite value in row {cells}")
            for col in range(kernel.b, kernel.d):
                if row[col] < 0 or not float(row[col]).is_integer():
                    raise ValueError(f"{path}:{line}: count column {col} must be a nonnegative integer, got {cells[col]!r}")
            rows.append(row)

        if not rows:
            raise ValueError(f"{path}: no observations")
        LOG.debug(f"📊 Loaded {len(rows)} observations from {path}")
        return cls(values=np.array(rows), b=kernel.b)
