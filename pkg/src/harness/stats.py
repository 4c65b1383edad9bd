"""
Summaries of study records: log-log rate slopes, chi-square QQ checks and CSV tables.
"""

import logging
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.special import gammainc
from scipy.stats import chi2

from ..config import settings
from ..utils.helpers import make_rng
from .records import RateRecord

LOG = logging.getLogger(__name__)

QQ_MIN_SAMPLES = 200
DECILES = tuple(q / 10 for q in range(1, 10))


def _label(record: RateRecord, metric: str) -> str:
    if record.param_name is None:
        return metric
    return f"{metric}@{record.param_name}={record.param:g}"


def _cells(records: Iterable[RateRecord], metric: str) -> Dict[int, np.ndarray]:
    """Usable values of one metric grouped by n."""
    cells: Dict[int, List[float]] = {}
    for r in records:
        if r.usable and metric in r.metrics:
            cells.setdefault(r.n, []).append(r.metrics[metric])
    return {n: np.asarray(v, dtype=float) for n, v in sorted(cells.items())}


@dataclass(frozen=True)
class SlopeFit:
    """OLS slope of log statistic against log n with a bootstrap interval."""
    metric: str
    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_values: Tuple[int, ...]
    cell_values: Tuple[float, ...]

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _ols_slope(log_n: np.ndarray, log_s: np.ndarray) -> Tuple[float, float]:
    slope, intercept = np.polyfit(log_n, log_s, 1)
    return float(slope), float(intercept)


def fit_slope(
    records: Sequence[RateRecord],
    metric: str,
    statistic: Callable[[np.ndarray], float] = np.median,
    resamples: Optional[int] = None,
    seed: Optional[int] = None
) -> SlopeFit:
    """
    Least-squares slope of log statistic(metric | n) against log n.

    The interval resamples replications within each n cell (percentile
    bootstrap, fixed seed).

    Raises:
        ValueError: fewer than 3 distinct n values, or a cell statistic is
            nonpositive (the offending cells are listed)
    """
    resamples = settings.bootstrap_resamples if resamples is None else resamples
    seed = settings.bootstrap_seed if seed is None else seed
    cells = _cells(records, metric)
    if len(cells) < 3:
        raise ValueError(f"slope of '{metric}' needs at least 3 distinct n values, got {len(cells)}")

    n_values = np.array(list(cells), dtype=float)
    stats = np.array([statistic(v) for v in cells.values()])
    bad = [f"n={int(n)}: {s:.6g}" for n, s in zip(n_values, stats) if not s > 0]
    if bad:
        raise ValueError(f"cannot take log of nonpositive '{metric}' statistics: {'; '.join(bad)}")

    log_n = np.log(n_values)
    slope, intercept = _ols_slope(log_n, np.log(stats))

    rng = make_rng(seed)
    boot = []
    for _ in range(resamples):
        resampled = np.array([statistic(rng.choice(v, size=v.size, replace=True)) for v in cells.values()])
        if np.all(resampled > 0):
            boot.append(_ols_slope(log_n, np.log(resampled))[0])
    if boot:
        ci_low, ci_high = (float(q) for q in np.quantile(boot, [0.025, 0.975]))
    else:
        ci_low = ci_high = slope

    LOG.info(f"📈 Slope of {metric}: {slope:.4f} [{ci_low:.4f}, {ci_high:.4f}] over n={[int(n) for n in n_values]}")
    return SlopeFit(
        metric=metric,
        slope=slope,
        intercept=intercept,
        ci_low=ci_low,
        ci_high=ci_high,
        n_values=tuple(int(n) for n in n_values),
        cell_values=tuple(float(s) for s in stats),
    )


@dataclass(frozen=True, eq=False)
class QQResult:
    """Kolmogorov distance to chi^2(K) and the decile table."""
    K: int
    ks: float
    size: int
    table: pd.DataFrame

    def to_dict(self) -> Dict[str, Any]:
        return {"K": self.K, "ks": self.ks, "size": self.size, "deciles": self.table.to_dict(orient="records")}


def chisq_cdf(x: np.ndarray, K: int) -> np.ndarray:
    """chi^2(K) CDF as the regularized lower incomplete gamma P(K/2, x/2)."""
    x = np.asarray(x, dtype=float)
    return np.where(x > 0, gammainc(0.5 * K, 0.5 * np.maximum(x, 0.0)), 0.0)


def qq_against_chisq(samples: Sequence[float], K: int) -> QQResult:
    """
    Compare samples with the chi^2(K) law.

    Returns:
        QQResult with sup |F_n - F| and the 9 deciles (empirical vs chi^2(K))

    Raises:
        ValueError: fewer than 200 samples, K < 1 or non-finite samples
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size < QQ_MIN_SAMPLES:
        raise ValueError(f"QQ check needs at least {QQ_MIN_SAMPLES} samples, got {x.size}")
    if K < 1:
        raise ValueError(f"degrees of freedom must be positive, got {K}")
    if not np.all(np.isfinite(x)):
        raise ValueError("samples must be finite")

    F = chisq_cdf(x, K)
    m = x.size
    upper = np.arange(1, m + 1) / m - F
    lower = F - np.arange(0, m) / m
    ks = float(max(upper.max(), lower.max()))

    table = pd.DataFrame({
        "q": DECILES,
        "empirical": np.quantile(x, DECILES),
        "chisq": chi2.ppf(DECILES, K),
    })
    return QQResult(K=K, ks=ks, size=m, table=table)


def summarize(
    records: Sequence[RateRecord],
    metrics: Optional[Sequence[str]] = None,
    path: Optional[Union[str, Path]] = None
) -> pd.DataFrame:
    """
    Per-n median and quartiles of each metric over usable records.

    Columns: n, metric, median, q25, q75 (metric names carry the K or T of
    parameterized studies). Written as CSV when a path is given.
    """
    groups: Dict[Tuple[str, int], List[float]] = {}
    order: List[str] = []
    for r in records:
        if not r.usable:
            continue
        for name, value in r.metrics.items():
            if metrics is not None and name not in metrics:
                continue
            label = _label(r, name)
            if label not in order:
                order.append(label)
            groups.setdefault((label, r.n), []).append(value)

    rows = []
    for label in order:
        for (lab, n), values in sorted(groups.items(), key=lambda kv: kv[0][1]):
            if lab != label:
                continue
            q25, median, q75 = np.quantile(values, [0.25, 0.5, 0.75])
            rows.append({"n": n, "metric": label, "median": median, "q25": q25, "q75": q75})
    frame = pd.DataFrame(rows, columns=["n", "metric", "median", "q25", "q75"])
    if path is not None:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False, float_format="%.17g")
        LOG.info(f"📁 Summary saved to {path}")
    return frame


def lrt_quantiles(records: Sequence[RateRecord], q: Sequence[float] = (0.5, 0.9, 0.95)) -> pd.DataFrame:
    """Upper quantiles of L_n per n (and per K or T when present)."""
    groups: Dict[Tuple[Optional[float], int], List[float]] = {}
    for r in records:
        if r.usable and "lrt" in r.metrics:
            groups.setdefault((r.param, r.n), []).append(r.metrics["lrt"])
    rows = []
    for (param, n), values in sorted(groups.items(), key=lambda kv: (kv[0][0] or 0.0, kv[0][1])):
        row = {"n": n, "param": param, "reps": len(values)}
        for level, value in zip(q, np.quantile(values, q)):
            row[f"q{level:g}"] = value
        rows.append(row)
    return pd.DataFrame(rows)
