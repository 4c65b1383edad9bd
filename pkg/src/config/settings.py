"""
Configuration module for the mixture NPMLE toolkit.
Loads numerical defaults from environment variables and .env file.
"""

import os
from pathlib import Path
from dataclasses import dataclass
from dotenv import load_dotenv

# Load environment variables from .env file
env_path = Path(__file__).parent.parent.parent / ".env"
load_dotenv(env_path)


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


@dataclass
class Settings:
    """Application settings loaded from environment variables."""

    # Solver
    grid_per_dim: int
    tol_gap: float
    max_sweeps: int
    em_inner: int
    refine_levels: int

    # Quadrature
    quad_nodes: int
    quad_radius: float
    quad_tail_tol: float

    # Series
    poly_order_cap: int
    score_kmax: int

    # Harness
    uniform_atoms: int
    threads: int

    # Logging
    log_dir: str
    log_level: str
    log_to_file: bool

    # Constants
    merge_rel_tol: float = 1e-6
    prune_weight: float = 1e-10
    spectral_starts: int = 64
    spectral_iters: int = 500
    bootstrap_resamples: int = 1000
    bootstrap_seed: int = 20240917
    random_probes: int = 64

    @classmethod
    def from_env(cls) -> "Settings":
        """Load settings from environment variables."""
        return cls(
            grid_per_dim=int(os.getenv("GRID_PER_DIM", "64")),
            tol_gap=float(os.getenv("TOL_GAP", "1e-8")),
            max_sweeps=int(os.getenv("MAX_SWEEPS", "2000")),
            em_inner=int(os.getenv("EM_INNER", "25")),
            refine_levels=int(os.getenv("REFINE_LEVELS", "3")),
            quad_nodes=int(os.getenv("QUAD_NODES", "512")),
            quad_radius=float(os.getenv("QUAD_RADIUS", "12")),
            quad_tail_tol=float(os.getenv("QUAD_TAIL_TOL", "1e-14")),
            poly_order_cap=int(os.getenv("POLY_ORDER_CAP", "80")),
            score_kmax=int(os.getenv("SCORE_KMAX", "40")),
            uniform_atoms=int(os.getenv("UNIFORM_ATOMS", "512")),
            threads=int(os.getenv("THREADS", "1")),
            log_dir=os.getenv("LOG_DIR", "logs"),
            log_level=os.getenv("LOG_LEVEL", "INFO"),
            log_to_file=_env_bool("LOG_TO_FILE", "true"),
        )

    def validate(self) -> bool:
        """Validate numerical settings are in range."""
        if self.grid_per_dim < 32:
            raise ValueError("GRID_PER_DIM must be at least 32")
        if not (0 < self.tol_gap <= 1e-4):
            raise ValueError("TOL_GAP must be in (0, 1e-4]")
        if self.refine_levels < 1:
            raise ValueError("REFINE_LEVELS must be at least 1")
        if self.quad_nodes < 64:
            raise ValueError("QUAD_NODES must be at least 64")
        if self.quad_radius < 8:
            raise ValueError("QUAD_RADIUS must be at least 8")
        if not (0 < self.quad_tail_tol <= 1e-12):
            raise ValueError("QUAD_TAIL_TOL must be in (0, 1e-12]")
        if self.poly_order_cap < 1:
            raise ValueError("POLY_ORDER_CAP must be positive")
        if self.threads < 1:
            raise ValueError("THREADS must be positive")
        return True

    def __repr__(self):
        return (
            f"Settings(grid_per_dim={self.grid_per_dim}, "
            f"tol_gap={self.tol_gap}, "
            f"refine_levels={self.refine_levels}, "
            f"quad_nodes={self.quad_nodes}, "
            f"poly_order_cap={self.poly_order_cap}, "
            f"threads={self.threads})"
        )


# Global settings instance
settings = Settings.from_env()
