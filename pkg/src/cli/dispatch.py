"""
Command-line dispatch.
Maps each subcommand onto one library call, prints a one-line summary and
returns the process exit code.
"""

import argparse
import dataclasses
import logging
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..analysis.demixing import wasserstein1
from ..config import settings
from ..data.dataset import Dataset
from ..data.models import load_kernel, load_mixing, save_fit, write_json
from ..density.bayes import posterior_mean_mse
from ..density.divergence import chi_square
from ..density.marginal import posterior_means
from ..harness.experiment import ExperimentConfig
from ..harness.records import RecordStore, load_records
from ..harness.runner import run_study
from ..harness.stats import fit_slope, lrt_quantiles, qq_against_chisq, summarize
from ..kernel import KernelSpec
from ..mixing import DiscreteMixing, as_discrete
from ..npmle.likelihood import lrt
from ..npmle.solver import SolverConfig, solve
from ..utils.errors import NonCertifiedFit, NumericalError
from ..utils.helpers import format_number, format_vector
from ..utils.logger import setup_logger

LOG = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERICAL = 2

STUDY_KINDS = {
    "rates": ("rates", "dichotomy"),
    "submodel-qq": ("submodel_qq",),
    "hartigan": ("hartigan",),
}


class UsageError(Exception):
    """Bad command line."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(line: str) -> None:
    print(line, flush=True)


# -- loading helpers ---------------------------------------------------------

def _kernel(args, *fallbacks: Optional[KernelSpec]) -> KernelSpec:
    """--kernel wins; otherwise a kernel embedded in one of the model files."""
    if args.kernel:
        return load_kernel(args.kernel)
    for kernel in fallbacks:
        if kernel is not None:
            return kernel
    raise ValueError("no kernel: pass --kernel or a model file that embeds one")


def _require(args, *names: str) -> None:
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.command} needs {' '.join(missing)}")


def _mixings(args, *names: str) -> Tuple[List[DiscreteMixing], KernelSpec]:
    """Read the named mixing files and resolve the kernel they share."""
    preset = load_kernel(args.kernel) if args.kernel else None
    loaded, embedded = [], []
    for name in names:
        g, k = load_mixing(getattr(args, name), kernel=preset)
        loaded.append(g)
        embedded.append(k)
    kernel = _kernel(args, *embedded)
    return [as_discrete(g) for g in loaded], kernel


def _solver_config(args) -> SolverConfig:
    cfg = SolverConfig()
    overrides = {}
    if args.grid is not None:
        overrides["grid_per_dim"] = args.grid
    if args.tol is not None:
        overrides["tol_gap"] = args.tol
    return dataclasses.replace(cfg, **overrides) if overrides else cfg


# -- subcommands -------------------------------------------------------------

def cmd_fit(args) -> int:
    _require(args, "data", "out")
    kernel = _kernel(args)
    data = Dataset.from_csv(args.data, kernel)
    g_hat, cert = solve(data, kernel, _solver_config(args), seed=args.seed)
    save_fit(args.out, g_hat, cert.to_dict(), kernel)
    _emit(
        f"support={g_hat.support_size} loglik={format_number(cert.loglik)} "
        f"gap={format_number(cert.gap)} certified={str(cert.certified).lower()}"
    )
    if not cert.certified:
        raise NonCertifiedFit(f"gap {cert.gap:.3g} above tolerance after {cert.sweeps} sweeps (written anyway)")
    return EXIT_OK


def cmd_divergence(args) -> int:
    _require(args, "ghat", "g0")
    (g_hat, g0), kernel = _mixings(args, "ghat", "g0")
    result = chi_square(g_hat, g0, kernel)
    _emit(f"chisq={format_number(result.chi_square)} hellinger2={format_number(result.hellinger_sq)}")
    if args.out:
        write_json(args.out, {"chi_square": result.chi_square, "hellinger_sq": result.hellinger_sq, "nodes": result.nodes})
    return EXIT_OK


def cmd_lrt(args) -> int:
    _require(args, "ghat", "g0", "data")
    (g_hat, g0), kernel = _mixings(args, "ghat", "g0")
    data = Dataset.from_csv(args.data, kernel)
    _emit(format_number(lrt(g_hat, g0, data, kernel)))
    return EXIT_OK


def cmd_demix(args) -> int:
    _require(args, "ghat", "g0")
    g_hat, g0 = (as_discrete(load_mixing(getattr(args, n))[0]) for n in ("ghat", "g0"))
    _emit(format_number(wasserstein1(g_hat, g0)))
    return EXIT_OK


def cmd_posterior(args) -> int:
    _require(args, "ghat", "data")
    names = ("ghat", "g0") if args.g0 else ("ghat",)
    mixings, kernel = _mixings(args, *names)
    data = Dataset.from_csv(args.data, kernel)
    means = posterior_means(mixings[0], kernel, data.values)
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        pd.DataFrame(means).to_csv(args.out, header=False, index=False, float_format="%.17g")
        LOG.info(f"📁 Posterior means saved to {args.out}")
    line = f"n={data.n} mean_posterior_mean={format_vector(np.mean(means, axis=0))}"
    if args.g0:
        line += f" mse={format_number(posterior_mean_mse(mixings[0], mixings[1], kernel))}"
    _emit(line)
    return EXIT_OK


def cmd_study(args) -> int:
    _require(args, "config", "records")
    cfg = ExperimentConfig.from_toml(args.config)
    if cfg.kind not in STUDY_KINDS[args.command]:
        raise ValueError(f"{args.config}: kind '{cfg.kind}' does not belong to '{args.command}'")
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.threads is not None:
        overrides["threads"] = args.threads
    if overrides:
        cfg = dataclasses.replace(cfg, **overrides)

    result = run_study(cfg, RecordStore(args.records))
    if args.out:
        summarize(result.records, path=args.out)
        if cfg.kind in ("dichotomy", "hartigan"):
            quantiles = lrt_quantiles(result.records)
            quantiles_path = Path(args.out).with_suffix(".lrt_quantiles.csv")
            quantiles.to_csv(quantiles_path, index=False, float_format="%.17g")
            LOG.info(f"📁 L_n quantiles saved to {quantiles_path}")
    _emit(
        f"records={len(result.records)} new={result.new_cells} resumed={result.skipped_cells} "
        f"failed={result.failed_cells} uncertified={result.uncertified}"
    )
    return EXIT_OK


def cmd_slope(args) -> int:
    _require(args, "records", "metric")
    records = load_records(args.records)
    fit = fit_slope(records, args.metric, seed=args.seed)
    _emit(f"{fit.slope:.4f} [{fit.ci_low:.4f}, {fit.ci_high:.4f}]")
    if args.out:
        write_json(args.out, fit.to_dict())
    return EXIT_OK


def cmd_qq(args) -> int:
    _require(args, "records", "k")
    metric = args.metric or "lrt"
    samples = [
        r.metrics[metric]
        for r in load_records(args.records)
        if r.usable and r.param_name == "K" and int(r.param) == args.k and metric in r.metrics
    ]
    result = qq_against_chisq(samples, args.k)
    _emit(f"ks={format_number(result.ks)} size={result.size} K={args.k}")
    if args.out:
        Path(args.out).parent.mkdir(parents=True, exist_ok=True)
        result.table.to_csv(args.out, index=False, float_format="%.17g")
    return EXIT_OK


COMMANDS: Dict[str, Callable] = {
    "fit": cmd_fit,
    "divergence": cmd_divergence,
    "lrt": cmd_lrt,
    "demix": cmd_demix,
    "posterior": cmd_posterior,
    "rates": cmd_study,
    "submodel-qq": cmd_study,
    "hartigan": cmd_study,
    "slope": cmd_slope,
    "qq": cmd_qq,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="npmle", description="Mixture NPMLE toolkit")
    parser.add_argument("command", choices=list(COMMANDS), help="Subcommand")
    parser.add_argument("--data", type=str, default=None, help="Headerless observation CSV")
    parser.add_argument("--kernel", type=str, default=None, help="Kernel JSON")
    parser.add_argument("--g0", type=str, default=None, help="Reference mixing JSON")
    parser.add_argument("--ghat", type=str, default=None, help="Fitted or candidate mixing JSON")
    parser.add_argument("--out", type=str, default=None, help="Output path")
    parser.add_argument("--config", type=str, default=None, help="Study TOML")
    parser.add_argument("--records", type=str, default=None, help="Study records JSONL")
    parser.add_argument("--metric", type=str, default=None, help="Record metric name")
    parser.add_argument("--k", type=int, default=None, help="Degrees of freedom (submodel order)")
    parser.add_argument("--seed", type=int, default=None, help="Seed (default: 0, or the study file's seed)")
    parser.add_argument("--threads", type=int, default=None, help="Worker cap for studies")
    parser.add_argument("--tol", type=float, default=None, help="Duality-gap tolerance")
    parser.add_argument("--grid", type=int, default=None, help="Probe grid points per dimension")
    parser.add_argument("--verbose", "-v", action="store_true", help="Enable debug logging")
    return parser


def dispatch(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one subcommand.

    Returns:
        0 on success, 1 on usage or input errors, 2 on numerical failures
    """
    try:
        args = build_parser().parse_args(argv)
    except UsageError as e:
        LOG.error(f"❌ Usage: {e}")
        return EXIT_USAGE

    setup_logger("npmle", level=getattr(logging, settings.log_level.upper(), logging.INFO), verbose=args.verbose)
    try:
        settings.validate()
    except ValueError as e:
        LOG.error(f"❌ Invalid settings: {e}")
        return EXIT_USAGE

    if args.command == "fit" and args.seed is None:
        args.seed = 0

    try:
        return COMMANDS[args.command](args)
    except UsageError as e:
        LOG.error(f"❌ Usage: {e}")
        return EXIT_USAGE
    except NumericalError as e:
        LOG.error(f"❌ Numerical failure in {args.command}: {e}", exc_info=args.verbose)
        return EXIT_NUMERICAL
    except (ValueError, FileNotFoundError, KeyError) as e:
        LOG.error(f"❌ {args.command}: {e}", exc_info=args.verbose)
        return EXIT_USAGE
