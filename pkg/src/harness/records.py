"""
Study records and their JSONL store.
Tracks finished cells so interrupted studies resume where they stopped.
"""

import json
import logging
import math
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple, Union

import pandas as pd

from ..kernel import SCHEMA_VERSION

LOG = logging.getLogger(__name__)

SCOPE = "divergence evidenced via submodel family"

CellKey = Tuple[str, float, int, int, int]


@dataclass
class RateRecord:
    """One (n, rep[, K or T]) cell of a study."""
    study: str
    n: int
    n_index: int
    rep: int
    seed: int
    metrics: Dict[str, float] = field(default_factory=dict)
    certified: bool = True
    ok: bool = True
    error: Optional[str] = None
    param_name: Optional[str] = None
    param: Optional[float] = None
    g0_atoms: int = 0
    c_tol: float = 0.0
    scope: str = SCOPE

    @property
    def key(self) -> CellKey:
        return (self.study, self.param if self.param is not None else 0.0, self.n, self.rep, self.seed)

    @property
    def usable(self) -> bool:
        """Finished, certified and with every metric finite."""
        return self.ok and self.certified and all(math.isfinite(v) for v in self.metrics.values())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "v": SCHEMA_VERSION,
            "study": self.study,
            "n": self.n,
            "n_index": self.n_index,
            "rep": self.rep,
            "seed": self.seed,
            "metrics": self.metrics,
            "certified": self.certified,
            "ok": self.ok,
            "error": self.error,
            "param_name": self.param_name,
            "param": self.param,
            "g0_atoms": self.g0_atoms,
            "c_tol": self.c_tol,
            "scope": self.scope,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "RateRecord":
        version = data.get("v")
        if version != SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema version {version}")
        fields = {k: v for k, v in data.items() if k != "v"}
        try:
            return cls(**fields)
        except TypeError as e:
            raise ValueError(f"malformed record: {e}") from e


class RecordStore:
    """
    Append-only JSONL file of RateRecords.

    Appends go through one lock so concurrent cells never interleave lines;
    reading returns records in canonical (study, param, n, rep, seed) order.
    Keys carry the derived seed, so a study rerun under another base seed
    adds new cells instead of resuming the old ones.
    """

    def __init__(self, path: Optional[Union[str, Path]] = None):
        self.path = Path(path) if path else None
        self._lock = threading.Lock()
        self._records: Dict[CellKey, RateRecord] = {}
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self) -> None:
        with open(self.path, "r", encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = RateRecord.from_dict(json.loads(line))
                except (json.JSONDecodeError, ValueError) as e:
                    raise ValueError(f"{self.path}:{lineno}: {e}") from e
                self._records[record.key] = record
        LOG.info(f"📂 Loaded {len(self._records)} existing records from {self.path}")

    def keys(self) -> Set[CellKey]:
        with self._lock:
            return set(self._records)

    def __contains__(self, key: CellKey) -> bool:
        with self._lock:
            return key in self._records

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)

    def append(self, record: RateRecord) -> None:
        """Write one record (thread-safe)."""
        with self._lock:
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with open(self.path, "a", encoding="utf-8") as f:
                    f.write(json.dumps(record.to_dict(), sort_keys=True) + "\n")
                    f.flush()
            self._records[record.key] = record

    def records(self, study: Optional[str] = None) -> List[RateRecord]:
        """All records in canonical order."""
        with self._lock:
            out = [r for r in self._records.values() if study is None or r.study == study]
        return sorted(out, key=lambda r: r.key)

    def to_frame(self) -> pd.DataFrame:
        """One row per (record, metric)."""
        return records_frame(self.records())


def records_frame(records: Iterable[RateRecord]) -> pd.DataFrame:
    rows = []
    for r in records:
        base = {
            "study": r.study,
            "n": r.n,
            "rep": r.rep,
            "seed": r.seed,
            "param_name": r.param_name,
            "param": r.param,
            "certified": r.certified,
            "ok": r.ok,
        }
        for name, value in r.metrics.items():
            rows.append({**base, "metric": name, "value": value})
    return pd.DataFrame(rows, columns=["study", "n", "rep", "seed", "param_name", "param", "certified", "ok", "metric", "value"])


def load_records(path: Union[str, Path]) -> List[RateRecord]:
    """Records of a JSONL file in canonical order."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"records file not found: {path}")
    return RecordStore(path).records()
