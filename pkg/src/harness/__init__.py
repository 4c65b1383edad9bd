from .records import RateRecord, RecordStore, records_frame, load_records
from .experiment import (
    KINDS,
    METRICS,
    Fixture,
    FIXTURES,
    fixture,
    ExperimentConfig,
)
from .runner import (
    StudyRunner,
    StudyResult,
    run_study,
    run_rate_study,
    run_submodel_qq,
    run_hartigan,
)
from .stats import (
    SlopeFit,
    QQResult,
    fit_slope,
    chisq_cdf,
    qq_against_chisq,
    summarize,
    lrt_quantiles,
)

__all__ = [
    "RateRecord",
    "RecordStore",
    "records_frame",
    "load_records",
    "KINDS",
    "METRICS",
    "Fixture",
    "FIXTURES",
    "fixture",
    "ExperimentConfig",
    "StudyRunner",
    "StudyResult",
    "run_study",
    "run_rate_study",
    "run_submodel_qq",
    "run_hartigan",
    "SlopeFit",
    "QQResult",
    "fit_slope",
    "chisq_cdf",
    "qq_against_chisq",
    "summarize",
    "lrt_quantiles",
]
