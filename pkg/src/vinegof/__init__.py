"""Goodness-of-fit tests for regular vine copula models.

``vinegof.plotting`` needs matplotlib and is not imported here.
"""
from . import battery, bootstrap, infomatrix, io, models, pair_copulas, rvine, statistics, transforms
from .battery import TEST_IDS
from .bootstrap import (StudyConfig, StudyResult, TestReport, bootstrap_pvalue, bootstrap_pvalues,
                        bootstrap_size, klic_mc, size_power_study)
from .errors import (ConvergenceError, DomainError, FormatError, NumericalError,
                     SingularMatrixError, StudyError, VineError)
from .pair_copulas import Family, PairCopulaSpec
from .rvine import RVineMatrix, RVineSpec, fit_mle, fit_sequential, loglik, simulate
from .transforms import inverse_rosenblatt, rosenblatt

__version__ = "0.1.0"

__all__ = [
    "battery", "bootstrap", "infomatrix", "io", "models", "pair_copulas", "rvine", "statistics",
    "transforms", "TEST_IDS", "StudyConfig", "StudyResult", "TestReport", "bootstrap_pvalue",
    "bootstrap_pvalues", "bootstrap_size", "klic_mc", "size_power_study", "ConvergenceError",
    "DomainError", "FormatError", "NumericalError", "SingularMatrixError", "StudyError",
    "VineError", "Family", "PairCopulaSpec", "RVineMatrix", "RVineSpec", "fit_mle",
    "fit_sequential", "loglik", "simulate", "inverse_rosenblatt", "rosenblatt",
]
