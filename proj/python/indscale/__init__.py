"""Block-size tuning for Metropolis independence samplers."""

from ._core import (
    ChainResult,
    DiscrepancyResult,
    TuningRow,
    TuningTable,
    __version__,
    bdm_sweep,
    discrepancy,
    effective_sample_size,
    gaussian_acceptance_approx,
    load_removal_times,
    maximize_gaussian_efficiency,
    mean_acceptance,
    optimal_k,
    product_sweep,
    run_chain,
    sir_sweep,
    theoretical_efficiency,
    uniform_case,
)

__all__ = [
    "ChainResult",
    "DiscrepancyResult",
    "TuningRow",
    "TuningTable",
    "__version__",
    "bdm_sweep",
    "discrepancy",
    "effective_sample_size",
    "gaussian_acceptance_approx",
    "load_removal_times",
    "maximize_gaussian_efficiency",
    "mean_acceptance",
    "optimal_k",
    "product_sweep",
    "run_chain",
    "sir_sweep",
    "theoretical_efficiency",
    "uniform_case",
]
