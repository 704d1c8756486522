"""Three-step estimation for time-varying nonparametric regression with tvAR errors."""

from .bandwidth import (
    BandwidthSet,
    default_surface_candidates,
    default_tvar_candidates,
    derive_set,
    loocv_surface,
    loocv_tvar,
)
from .kernels import (
    EPANECHNIKOV,
    KernelFamily,
    KernelMoments,
    KernelSpec,
    kernel_eval,
    kernel_eval_scaled,
    kernel_moments,
)
from .locallinear import (
    ResidualSeries,
    SurfaceFit,
    TimeSeries,
    fit_point,
    oracle_fit,
    preliminary_fit,
    refined_fit,
    whitened_response,
)
from .metrics import (
    ExperimentReport,
    ReplicationRecord,
    SelectionCategory,
    SelectionOutcome,
    aggregate,
    classify,
    rase,
    rase_phi,
)
from .pipeline import (
    ExperimentOptions,
    FitResult,
    PipelineOptions,
    run_cell,
    run_replication,
    three_step_fit,
)
from .simulate import (
    CoefficientModel,
    SimulationConfig,
    coefficient_model,
    gen_dataset,
    gen_error,
    gen_regressor,
    regression_surface,
    truth_path,
)
from .tvar import TvarPath, build_design, fit_at, fit_path
from .ulasso import (
    AdaptiveWeights,
    StructureTruth,
    UlassoSolution,
    adaptive_weights,
    constant_coefficient_estimate,
    default_penalty_grid,
    fit_penalized_at,
    fit_penalized_path,
    penalized_objective,
    select_tuning,
)

__version__ = "0.1.0"
