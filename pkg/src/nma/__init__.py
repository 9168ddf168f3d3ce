"""Near-field sensing with movable-antenna arrays.

Worst-case Cramer-Rao bounds for angle/distance estimation with 1D and 2D
repositionable arrays, antenna-placement optimizers that minimize those
bounds, subspace (MUSIC-style) Monte Carlo validation, and steering-vector
correlation analysis.  See the README for the module map; the ``nma`` CLI
wraps the library for config-driven batch runs.
"""

__version__ = "0.1.0"

from .geometry import (
    ApmPlanar,
    ApvLinear,
    Scenario,
    TargetParams1D,
    TargetParams2D,
    benchmark_geometry,
    fresnel_distance,
    rayleigh_distance,
    validate_apm,
    validate_apv,
)
from .channel import (
    DerivVectors1D,
    DerivVectors2D,
    channel_vector,
    deriv_coeffs,
    deriv_vectors,
    exact_distance,
    fresnel_distance_approx,
    steering_vector,
)
from .crb import (
    CrbReport,
    MomentSet,
    SingularFimError,
    crb_at_params,
    crb_case11,
    crb_case12,
    crb_case13,
    crb_case21,
    crb_case22,
    crb_case23,
    fim_oracle,
    kappa,
    moments,
    report,
    var_tilde_closed_form,
    worst_case_params,
    worst_case_search,
)
from .optimize import (
    OptimizationTrace,
    SamplingGrid1D,
    SamplingGrid2D,
    closed_form_apv,
    feasible_points_1d,
    feasible_points_2d,
    objective,
    optimize_sampling_1d,
    optimize_sampling_2d,
)
from .music import (
    GridSpec,
    MonteCarloResult,
    NoiseSubspace,
    SnapshotBlock,
    SpectrumGrid,
    estimate,
    monte_carlo_mse,
    noise_subspace,
    sample_covariance,
    simulate_snapshots,
    spectrum,
)
from .correlation import (
    AmbiguityError,
    CorrelationMap,
    LobeMetrics,
    correlation_map,
    correlation_value,
    lobe_metrics,
)

__all__ = [name for name in dir() if not name.startswith("_")]
