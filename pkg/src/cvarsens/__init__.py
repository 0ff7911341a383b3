"""CVaR sensitivity estimation with scrambled Sobol' points.

Modules
-------
lowdisc   Sobol' nets, linear and nested scrambling, Monte Carlo points
stats     empirical VaR, CVaR and IPA sensitivity estimators
models    single-asset, portfolio and delta-gamma loss models
harness   replications, benchmarks and convergence studies
cli       ``cvarsens`` command line
"""

__version__ = "0.1.0"

from .harness import (
    Benchmark,
    BenchmarkSpec,
    ConvergenceReport,
    ErrorStats,
    StudyConfig,
    compute_benchmark,
    convergence_study,
    fit_rate,
    run_replication,
    tie_census,
)
from .lowdisc import (
    DigitalNet,
    PointSet,
    check_net_property,
    load_direction_numbers,
    mc_points,
    scramble_linear,
    scramble_nested,
    sobol_net,
)
from .models import (
    DeltaGammaConfig,
    DeltaGammaModel,
    PortfolioConfig,
    PortfolioModel,
    SingleAssetConfig,
    SingleAssetModel,
    matrix_factor,
    reference_portfolio,
    pca_factor,
)
from .stats import (
    LossSample,
    RiskEstimates,
    cdf_gap_bound_check,
    cvar_estimate,
    cvar_sensitivity_ipa,
    cvar_sensitivity_oracle,
    empirical_cdf,
    estimate_all,
    var_estimate,
)
