"""Multiobjective optimization toolkit for physics-informed neural networks.

Core pieces: a from-scratch jet/tape autodiff engine providing exact input
derivatives and parameter gradients, logistic and heat benchmark problems
with analytic solutions, weighted-sum and common-descent (MGDA) training,
an NSGA-II baseline, and front post-processing (non-dominance filtering,
scale-aware convexity reports, hypervolume).
"""

from .errors import (ConfigurationError, ContractViolationError, MopinnError,
                     RunFailedError, UsageError)

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "ContractViolationError",
    "MopinnError",
    "RunFailedError",
    "UsageError",
    "__version__",
]
