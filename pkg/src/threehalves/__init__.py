"""Monte Carlo pricing under the 3/2 stochastic volatility model.

The inverse variance is simulated exactly as a sum of squared OU processes and
reweighted to the model's own parameters; Milstein and quadratic-exponential
schemes are included for comparison.
"""

__version__ = "0.1.0"

from .benchmarks import QeConfig, simulate_milstein, simulate_qe
from .config import SCHEMES, SimConfig, load_config
from .errors import (
    ConfigError,
    DomainError,
    EmptyPathSet,
    FellerViolation,
    NonPositiveSample,
    NonPositiveU,
    NumericalFailure,
    OddSubintervals,
    ThreeHalvesError,
)
from .explicit import simulate_path, simulate_weighted
from .params import PARAMETER_SETS, ModelParams, TransformedParams, transform, validate
from .paths import PathBatch, PathRecord
from .pricing import (
    EXACT_PRICES,
    ErrorStats,
    PayoffSpec,
    PriceEstimate,
    error_stats,
    estimate_price,
    payoff_european_call,
)
from .quadrature import QuadratureRule, integrate_inverse
from .rng import RngStream

from .harness import ExperimentReport, benchmark_timing, emit_report, run_experiment  # noqa: E402

__all__ = [
    "__version__",
    "PARAMETER_SETS",
    "ModelParams",
    "TransformedParams",
    "transform",
    "validate",
    "QuadratureRule",
    "integrate_inverse",
    "RngStream",
    "PathBatch",
    "PathRecord",
    "simulate_weighted",
    "simulate_path",
    "simulate_milstein",
    "simulate_qe",
    "QeConfig",
    "PayoffSpec",
    "PriceEstimate",
    "ErrorStats",
    "EXACT_PRICES",
    "payoff_european_call",
    "estimate_price",
    "error_stats",
    "SimConfig",
    "SCHEMES",
    "load_config",
    "ExperimentReport",
    "run_experiment",
    "benchmark_timing",
    "emit_report",
    "ThreeHalvesError",
    "DomainError",
    "FellerViolation",
    "NonPositiveSample",
    "OddSubintervals",
    "NonPositiveU",
    "EmptyPathSet",
    "ConfigError",
    "NumericalFailure",
]
