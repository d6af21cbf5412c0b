"""Accuracy of distance-based user ranking in NOMA clusters.

The accuracy probability is the chance that ordering cluster users by
distance to their base station gives the same order as their instantaneous
received powers. This package evaluates it analytically and by Monte Carlo
for three user-location models, and simulates the ISP/MSP coverage
comparison that motivates it.
"""

from .analytic import (
    accuracy,
    accuracy_nakagami_2ue,
    accuracy_nakagami_3ue,
    accuracy_pairing_general,
    accuracy_pairing_rayleigh_2ue,
    accuracy_rayleigh_2ue,
    accuracy_rayleigh_3ue,
    accuracy_rayleigh_general,
    inner_expectation_nakagami,
    inner_expectation_rayleigh,
)
from .cluster import ClusterSpec, Pairing
from .coverage import (
    CoverageComparison,
    CoverageConfig,
    CoverageResult,
    Decomposition,
    coverage_mc,
    downlink_coverage_mc,
    interference_field_downlink,
    interference_field_uplink,
    uplink_coverage_mc,
)
from .errors import (
    ConvergenceError,
    DomainError,
    EvaluationError,
    NomaAccuracyError,
    NumericalError,
    ParameterError,
)
from .experiments import ExperimentConfig, ResultRow, preset, reproduce, run
from .geometry import (
    Mcp,
    OrderedDistances,
    PppVoronoi,
    Tcp,
    cdf,
    pdf,
    sample_distance,
    sample_ordered,
    simulate_voronoi_cell,
    simulate_voronoi_cells,
)
from .montecarlo import McEstimate, estimate_accuracy, estimate_permutation_distribution
from .numerics import (
    Estimate,
    FadingModel,
    QuadratureRule,
    alternating_series_sum,
    gauss_legendre_unit,
    hyp2f1,
    incomplete_beta,
    ln_gamma,
    sample_gamma,
    tensor_integrate,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
