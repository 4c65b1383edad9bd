from .score import (
    ScoreCoefficients,
    score_coefficients,
    score_eval,
    weighted_norm,
    coefficient_tail,
)
from .demixing import wasserstein1
from .asy import asy_gap

__all__ = [
    "ScoreCoefficients",
    "score_coefficients",
    "score_eval",
    "weighted_norm",
    "coefficient_tail",
    "wasserstein1",
    "asy_gap",
]
