"""
Study configuration (TOML) and the frozen acceptance fixtures.
"""

import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Dict, Optional, Tuple, Union

from ..config import settings
from ..density.quadrature import QuadratureScheme
from ..kernel import KernelSpec
from ..mixing import DiscreteMixing, MixingDescriptor, UniformBox, mixing_from_dict
from ..npmle.solver import SolverConfig

LOG = logging.getLogger(__name__)

KINDS = ("rates", "dichotomy", "submodel_qq", "hartigan")
METRICS = (
    "nchisq",
    "lrt",
    "w1",
    "post_mse",
    "loglik_margin",
    "support_size",
    "asy_gap",
    "functional_err_mean",
    "functional_err_cdf",
)
DEFAULT_N_GRID = (250, 500, 1000, 2000, 4000)
DEFAULT_REPS = 200
DEFAULT_K = (1, 2, 4, 8)
DEFAULT_T = (2.0, 4.0, 8.0, 16.0)
ACCEPTANCE_MIN_REPS = 50


@dataclass(frozen=True)
class Fixture:
    """A named (kernel, g0) pair."""
    name: str
    kernel: KernelSpec
    g0: MixingDescriptor


def _build_fixtures() -> Dict[str, Fixture]:
    box = KernelSpec.gaussian(-1.0, 1.0)
    return {
        "G1": Fixture("G1", box, DiscreteMixing.point_mass([0.0])),
        "G2": Fixture("G2", box, DiscreteMixing.create([-0.5, 0.5], [0.6, 0.4])),
        "GU": Fixture("GU", box, UniformBox(lo=(-1.0,), hi=(1.0,))),
        "P2": Fixture("P2", KernelSpec.poisson(0.5, 4.0), DiscreteMixing.create([1.0, 3.0], [0.5, 0.5])),
    }


FIXTURES: Dict[str, Fixture] = _build_fixtures()


def fixture(name: str) -> Fixture:
    try:
        return FIXTURES[name]
    except KeyError:
        raise ValueError(f"unknown fixture '{name}' (known: {', '.join(FIXTURES)})") from None


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce a study from (config, cell indices)."""
    kind: str
    kernel: KernelSpec
    g0: MixingDescriptor
    n_grid: Tuple[int, ...] = DEFAULT_N_GRID
    reps: int = DEFAULT_REPS
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)
    quadrature: QuadratureScheme = field(default_factory=QuadratureScheme)
    metrics: Tuple[str, ...] = METRICS
    K: Tuple[int, ...] = DEFAULT_K
    T: Tuple[float, ...] = DEFAULT_T
    c_tol: float = 0.0
    threads: int = field(default_factory=lambda: settings.threads)
    fixture: Optional[str] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown study kind '{self.kind}' (known: {', '.join(KINDS)})")
        if self.g0.d != self.kernel.d:
            raise ValueError(f"g0 has d={self.g0.d}, kernel has d={self.kernel.d}")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ValueError(f"n grid must be nonempty and positive, got {list(self.n_grid)}")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise ValueError(f"n grid must be strictly increasing, got {list(self.n_grid)}")
        if self.reps < 1:
            raise ValueError(f"reps must be positive, got {self.reps}")
        unknown = [m for m in self.metrics if m not in METRICS]
        if unknown:
            raise ValueError(f"unknown metrics {unknown} (known: {', '.join(METRICS)})")
        if self.threads < 1:
            raise ValueError(f"threads must be positive, got {self.threads}")
        if self.kind == "submodel_qq" and (not self.K or any(k < 1 for k in self.K)):
            raise ValueError(f"submodel study needs a list of positive K, got {list(self.K)}")
        if self.kind == "hartigan":
            if not self.T or any(t <= 0 for t in self.T) or any(b <= a for a, b in zip(self.T, self.T[1:])):
                raise ValueError(f"Hartigan study needs increasing positive half-widths, got {list(self.T)}")
            if not (isinstance(self.g0, DiscreteMixing) and self.g0.support_size == 1):
                raise ValueError("Hartigan study needs a point-mass g0")
            if self.kernel.b != self.kernel.d:
                raise ValueError("Hartigan study expands a Gaussian box; Poisson coordinates are not supported")
        if self.reps < ACCEPTANCE_MIN_REPS:
            LOG.warning(f"⚠️  reps={self.reps} is below {ACCEPTANCE_MIN_REPS}; fine for smoke runs, not for acceptance")

    @property
    def g0_atoms(self) -> int:
        if isinstance(self.g0, DiscreteMixing):
            return self.g0.support_size
        return self.g0.discretize(settings.uniform_atoms).support_size

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        """
        Build from a parsed TOML document.

        A `fixture` key supplies kernel and g0; explicit [kernel] / [g0]
        tables override it. [solver] and [quadrature] tables override the
        settings defaults.
        """
        data = dict(data)
        name = data.pop("fixture", None)
        kernel = g0 = None
        if name is not None:
            fx = fixture(name)
            kernel, g0 = fx.kernel, fx.g0
        if "kernel" in data:
            kernel = KernelSpec.from_dict(data.pop("kernel"))
        if kernel is None:
            raise ValueError("study config needs a [kernel] table or a fixture")
        if "g0" in data:
            g0 = mixing_from_dict(data.pop("g0"), kernel=kernel)
        if g0 is None:
            raise ValueError("study config needs a [g0] table or a fixture")

        kwargs: Dict[str, Any] = {"kernel": kernel, "g0": g0, "fixture": name}
        if "solver" in data:
            kwargs["solver"] = SolverConfig(**_known(SolverConfig, data.pop("solver"), "solver"))
        if "quadrature" in data:
            kwargs["quadrature"] = QuadratureScheme(**_known(QuadratureScheme, data.pop("quadrature"), "quadrature"))
        for key, cast in (("n_grid", int), ("metrics", str), ("K", int), ("T", float)):
            if key in data:
                kwargs[key] = tuple(cast(v) for v in data.pop(key))
        for key in ("kind", "reps", "seed", "c_tol", "threads"):
            if key in data:
                kwargs[key] = data.pop(key)
        if data:
            raise ValueError(f"unknown study config keys: {sorted(data)}")
        if "kind" not in kwargs:
            raise ValueError("study config needs a 'kind'")
        return cls(**kwargs)

    @classmethod
    def from_toml(cls, path: Union[str, Path]) -> "ExperimentConfig":
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f"study config not found: {path}")
        try:
            with open(path, "rb") as f:
                data = tomllib.load(f)
        except tomllib.TOMLDecodeError as e:
            raise ValueError(f"{path}: malformed TOML ({e})") from e
        return cls.from_dict(data)

    def describe(self) -> str:
        label = self.fixture or repr(self.g0)
        return f"{self.kind} | g0={label} | n={list(self.n_grid)} | reps={self.reps} | seed={self.seed}"


def _known(klass, table: Dict[str, Any], section: str) -> Dict[str, Any]:
    names = {f.name for f in fields(klass)}
    unknown = sorted(set(table) - names)
    if unknown:
        raise ValueError(f"unknown [{section}] keys: {unknown}")
    return dict(table)
