"""
Study runner.
Executes seeded Monte Carlo cells (sample -> fit -> metrics) with detailed logging.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from ..analysis.asy import asy_gap
from ..analysis.demixing import wasserstein1
from ..config import settings
from ..data.dataset import Dataset
from ..density.bayes import posterior_mean_mse
from ..density.divergence import chi_square
from ..density.functionals import Functional, plugin_functional
from ..mixing import OrthoBasis, as_discrete, orthonormal_basis, sample
from ..npmle.likelihood import in_Gn, lrt
from ..npmle.solver import solve
from ..npmle.submodel import attach_gram, solve_submodel
from ..utils.helpers import derive_seed
from .experiment import ExperimentConfig
from .records import RateRecord, RecordStore

LOG = logging.getLogger(__name__)

Cell = Tuple[int, int, Optional[float]]

SUBMODEL_METRICS = ("lrt", "nchisq")


@dataclass
class StudyResult:
    """Container for the records a study run produced or found on disk."""
    config: ExperimentConfig
    records: List[RateRecord] = field(default_factory=list)
    new_cells: int = 0
    skipped_cells: int = 0
    failed_cells: int = 0

    @property
    def uncertified(self) -> int:
        return sum(1 for r in self.records if r.ok and not r.certified)

    def summary(self) -> str:
        """Generate summary string."""
        return f"""
================================================================================
                            STUDY SUMMARY
================================================================================
Study:            {self.config.describe()}
Records:          {len(self.records)}
New Cells:        {self.new_cells}
Resumed Cells:    {self.skipped_cells}
Failed Cells:     {self.failed_cells}
Non-certified:    {self.uncertified}
================================================================================
"""


class StudyRunner:
    """
    Runs one ExperimentConfig, skipping cells already present in the store.
    """

    def __init__(self, cfg: ExperimentConfig, store: Optional[RecordStore] = None, threads: Optional[int] = None):
        self.cfg = cfg
        self.store = store or RecordStore()
        self.threads = threads or cfg.threads
        self._g0 = as_discrete(cfg.g0, settings.uniform_atoms)
        self._bases: Dict[int, OrthoBasis] = {}

    # -- cells ---------------------------------------------------------

    def _cells(self) -> List[Cell]:
        cfg = self.cfg
        if cfg.kind == "submodel_qq":
            params = [float(k) for k in cfg.K]
        elif cfg.kind == "hartigan":
            params = list(cfg.T)
        else:
            params = [None]
        return [
            (n_idx, rep, param)
            for param in params
            for n_idx in range(len(cfg.n_grid))
            for rep in range(cfg.reps)
        ]

    def _param_name(self) -> Optional[str]:
        return {"submodel_qq": "K", "hartigan": "T"}.get(self.cfg.kind)

    def _record(self, n_idx: int, rep: int, param: Optional[float]) -> RateRecord:
        cfg = self.cfg
        return RateRecord(
            study=cfg.kind,
            n=cfg.n_grid[n_idx],
            n_index=n_idx,
            rep=rep,
            seed=derive_seed(cfg.seed, n_idx, rep),
            param_name=self._param_name(),
            param=param,
            g0_atoms=self._g0.support_size,
            c_tol=cfg.c_tol,
        )

    def _data(self, record: RateRecord) -> Dataset:
        return sample(self.cfg.g0, self.cfg.kernel, record.n, record.seed)

    # -- metric pipelines ----------------------------------------------

    def _rate_metrics(self, record: RateRecord, data: Dataset) -> None:
        cfg, kernel, g0 = self.cfg, self.cfg.kernel, self._g0
        g_hat, cert = solve(data, kernel, cfg.solver, seed=record.seed)
        record.certified = cert.certified
        n = data.n
        wanted = set(cfg.metrics)
        m = record.metrics

        if "nchisq" in wanted:
            m["nchisq"] = n * chi_square(g_hat, g0, kernel, cfg.quadrature).chi_square
        if "lrt" in wanted:
            m["lrt"] = lrt(g_hat, g0, data, kernel)
        if "w1" in wanted:
            m["w1"] = wasserstein1(g_hat, g0)
        if "post_mse" in wanted:
            m["post_mse"] = posterior_mean_mse(g_hat, g0, kernel, cfg.quadrature)
        if "loglik_margin" in wanted:
            m["loglik_margin"] = in_Gn(g_hat, g0, data, cfg.c_tol, kernel).margin
        if "support_size" in wanted:
            m["support_size"] = float(g_hat.support_size)
        if "asy_gap" in wanted:
            m["asy_gap"] = asy_gap(data, g_hat, g0, kernel, cfg.quadrature)
        if "functional_err_mean" in wanted:
            h = Functional.mean()
            diff = plugin_functional(g_hat, kernel, h, cfg.quadrature) - plugin_functional(g0, kernel, h, cfg.quadrature)
            m["functional_err_mean"] = math.sqrt(n) * abs(diff)
        if "functional_err_cdf" in wanted:
            h = Functional.cdf(float(g0.mean()[0]))
            m["functional_err_cdf"] = math.sqrt(n) * abs(plugin_functional(g_hat, kernel, h) - plugin_functional(g0, kernel, h))

    def _submodel_metrics(self, record: RateRecord, data: Dataset) -> None:
        K = int(record.param)
        fit = solve_submodel(data, self.cfg.g0, K, self.cfg.kernel, self._bases[K])
        record.metrics["lrt"] = fit.statistic
        record.metrics["nchisq"] = data.n * chi_square(fit.mixing(), self._g0, self.cfg.kernel, self.cfg.quadrature).chi_square

    def _hartigan_metrics(self, record: RateRecord, data: Dataset) -> None:
        T = float(record.param)
        d = self.cfg.kernel.d
        kernel = self.cfg.kernel.with_box([-T] * d, [T] * d)
        g_hat, cert = solve(data, kernel, self.cfg.solver, seed=record.seed)
        record.certified = cert.certified
        record.metrics["lrt"] = lrt(g_hat, self._g0, data, kernel)
        record.metrics["support_size"] = float(g_hat.support_size)

    def _run_cell(self, cell: Cell) -> RateRecord:
        n_idx, rep, param = cell
        record = self._record(n_idx, rep, param)
        pipeline: Callable[[RateRecord, Dataset], None] = {
            "rates": self._rate_metrics,
            "dichotomy": self._rate_metrics,
            "submodel_qq": self._submodel_metrics,
            "hartigan": self._hartigan_metrics,
        }[self.cfg.kind]
        try:
            pipeline(record, self._data(record))
            bad = [k for k, v in record.metrics.items() if not math.isfinite(v)]
            if bad:
                raise ValueError(f"non-finite metrics {bad}")
        except (ValueError, ArithmeticError, RuntimeError) as e:
            LOG.error(f"❌ Cell n={record.n} rep={rep} param={param} failed: {e}", exc_info=True)
            record.ok = False
            record.error = str(e)
        return record

    # -- main loop -----------------------------------------------------

    def _prepare(self) -> None:
        if self.cfg.kind == "submodel_qq":
            # an order-K basis must exist before any cell runs; failures surface here
            for K in self.cfg.K:
                basis = attach_gram(orthonormal_basis(self.cfg.g0, K), self.cfg.kernel, self.cfg.quadrature)
                eig = np.linalg.eigvalsh(basis.gram)
                LOG.info(f"🧮 Order-{K} basis ready; h-Gram eigenvalues in [{eig.min():.3g}, {eig.max():.3g}]")
                self._bases[K] = basis

    def run(self) -> StudyResult:
        """
        Run every missing cell of the study.

        Returns:
            StudyResult with all records of this study in canonical order
        """
        cfg = self.cfg
        result = StudyResult(config=cfg)

        LOG.info("=" * 80)
        LOG.info("STUDY STARTED")
        LOG.info("=" * 80)
        LOG.info(f"Kind: {cfg.kind}")
        LOG.info(f"Kernel: d={cfg.kernel.d} b={cfg.kernel.b} box {list(cfg.kernel.theta_lo)} to {list(cfg.kernel.theta_hi)}")
        LOG.info(f"g0: {cfg.fixture or repr(cfg.g0)} ({self._g0.support_size} atoms)")
        LOG.info(f"n grid: {list(cfg.n_grid)}")
        LOG.info(f"Reps: {cfg.reps}")
        LOG.info(f"Base seed: {cfg.seed}")
        LOG.info(f"Threads: {self.threads}")
        LOG.info("=" * 80)

        self._prepare()
        done = self.store.keys()
        wanted = set()
        todo = []
        for cell in self._cells():
            key = self._record(*cell).key
            wanted.add(key)
            if key in done:
                result.skipped_cells += 1
            else:
                todo.append(cell)
        if result.skipped_cells:
            LOG.info(f"⏭️  Resuming: {result.skipped_cells} cells already on disk, {len(todo)} to run")

        with ThreadPoolExecutor(max_workers=self.threads) as executor:
            futures = {executor.submit(self._run_cell, cell): cell for cell in todo}
            for i, future in enumerate(as_completed(futures), start=1):
                record = future.result()
                self.store.append(record)
                result.new_cells += 1
                if not record.ok:
                    result.failed_cells += 1
                elif not record.certified:
                    LOG.warning(f"⚠️  Cell n={record.n} rep={record.rep}: fit not certified (recorded with flag)")
                if i % 10 == 0 or i == len(todo):
                    LOG.info(f"✅ {i}/{len(todo)} cells finished")

        result.records = [r for r in self.store.records(study=cfg.kind) if r.key in wanted]
        LOG.info("=" * 80)
        LOG.info("STUDY COMPLETED")
        LOG.info("=" * 80)
        return result


def run_rate_study(cfg: ExperimentConfig, store: Optional[RecordStore] = None) -> List[RateRecord]:
    """Rate (or dichotomy) study: one NPMLE fit per (n, rep) cell."""
    if cfg.kind not in ("rates", "dichotomy"):
        raise ValueError(f"rate study needs kind 'rates' or 'dichotomy', got '{cfg.kind}'")
    return StudyRunner(cfg, store).run().records


def run_submodel_qq(cfg: ExperimentConfig, store: Optional[RecordStore] = None) -> Dict[int, Dict[str, List[float]]]:
    """
    Order-K submodel statistics per K.

    Returns:
        {K: {"lrt": 2 (l_n(g_K) - l_n(g0)) samples, "nchisq": n chi^2(f_gK, f_g0) samples}}

    Raises:
        SingularGramError: g0 is finitely discrete with too few atoms for some K
    """
    if cfg.kind != "submodel_qq":
        raise ValueError(f"submodel study needs kind 'submodel_qq', got '{cfg.kind}'")
    records = StudyRunner(cfg, store).run().records
    out: Dict[int, Dict[str, List[float]]] = {int(k): {name: [] for name in SUBMODEL_METRICS} for k in cfg.K}
    for r in records:
        if r.usable:
            for name in SUBMODEL_METRICS:
                out[int(r.param)][name].append(r.metrics[name])
    return out


def run_hartigan(cfg: ExperimentConfig, store: Optional[RecordStore] = None) -> Dict[float, float]:
    """Median L_n for each box half-width T."""
    if cfg.kind != "hartigan":
        raise ValueError(f"Hartigan study needs kind 'hartigan', got '{cfg.kind}'")
    records = StudyRunner(cfg, store).run().records
    medians = {}
    for T in cfg.T:
        values = [r.metrics["lrt"] for r in records if r.param == T and r.usable]
        medians[T] = float(np.median(values)) if values else math.nan
    return medians


def run_study(cfg: ExperimentConfig, store: Optional[RecordStore] = None, threads: Optional[int] = None) -> StudyResult:
    """Convenience function to run any study kind."""
    return StudyRunner(cfg, store, threads).run()
