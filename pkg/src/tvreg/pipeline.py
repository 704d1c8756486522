"""The three-step estimation pipeline and the Monte Carlo harness.

Step 1 fits the surface ignoring the error structure, step 2 estimates
the time-varying AR coefficients from the residuals (optionally with
penalized structure selection), and step 3 refits the surface on the
whitened responses. The harness repeats the pipeline over simulated
replications with independent, reproducible random streams.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bandwidth import (
    BandwidthSet,
    default_surface_candidates,
    default_tvar_candidates,
    derive_set,
    loocv_surface,
    loocv_tvar,
)
from .kernels import EPANECHNIKOV, KernelSpec
from .locallinear import (
    ResidualSeries,
    TimeSeries,
    fit_point_widened,
    oracle_fit,
    preliminary_fit,
    refined_fit,
    whitened_response,
)
from .metrics import ReplicationRecord, classify, rase, rase_phi
from .simulate import (
    SimulationConfig,
    coefficient_model,
    gen_dataset,
    regression_surface,
    truth_path,
)
from .tvar import TvarPath, fit_path
from .ulasso import UlassoSolution, constant_coefficient_estimate, select_tuning

# residuals smaller than this (relative to the response scale) mean the
# surface fit is numerically exact and there is no error structure to model
_ZERO_RESIDUAL_REL = 1e-10


@dataclass(frozen=True)
class PipelineOptions:
    """Everything the three-step fit needs besides the data."""

    kernel: KernelSpec = EPANECHNIKOV
    p: int = 5
    known_order: int | None = None
    bandwidth_factor: float = 0.5
    h_star: float | None = None
    h_e: float | None = None
    surface_candidates: tuple | None = None
    tvar_candidates: tuple | None = None
    lambda_grid: tuple | None = None
    gamma_grid: tuple | None = None
    tie_gamma: bool = False
    # grow the window at unidentifiable query points instead of failing;
    # isolated regressor extremes otherwise veto every usable bandwidth
    widen_sparse: bool = True


@dataclass
class FitResult:
    """Output of the full pipeline on one dataset."""

    bandwidths: BandwidthSet
    p: int
    order_known: bool
    selection: UlassoSolution | None
    phi_path: TvarPath
    active: tuple
    varying: tuple
    p0: int
    preliminary: ResidualSeries
    refined: ResidualSeries
    whitened: np.ndarray

    def eval_preliminary(self, data: TimeSeries, u: float, x: float, kernel=EPANECHNIKOV) -> float:
        return fit_point_widened(data, u, x, self.bandwidths.h, kernel).g

    def eval_refined(self, data: TimeSeries, u: float, x: float, kernel=EPANECHNIKOV) -> float:
        return fit_point_widened(
            data,
            u,
            x,
            self.bandwidths.h_star,
            kernel,
            response_override=self.whitened,
            sample_start=self.p0 + 1,
        ).g


def _zero_path(p: int, grid: np.ndarray, h_e: float) -> TvarPath:
    z = np.zeros((p, grid.shape[0]))
    return TvarPath(p=p, grid=grid, phi=z, dphi_scaled=z.copy(), h_e=h_e)


def three_step_fit(data: TimeSeries, options: PipelineOptions = PipelineOptions()) -> FitResult:
    """Run the full estimation pipeline on one dataset.

    Bandwidths not fixed in the options are selected by leave-one-out
    cross-validation; the preliminary bandwidth is bandwidth_factor times
    the refined one. With known_order set, the AR stage is the plain
    local-linear fit at that order; otherwise the penalized fit with
    BIC-selected tuning parameters identifies the structure.
    """
    kernel = options.kernel
    T = data.length
    widen = options.widen_sparse

    h_star = options.h_star
    if h_star is None:
        cands = options.surface_candidates
        cands = default_surface_candidates(T) if cands is None else np.asarray(cands)
        h_star = loocv_surface(data, cands, kernel, widen_sparse=widen)
    h = options.bandwidth_factor * h_star

    preliminary = preliminary_fit(data, h, kernel, widen_sparse=widen)

    # numerically exact fit: nothing left to whiten, skip the AR stage
    resid_scale = float(np.max(np.abs(preliminary.ehat)))
    y_scale = 1.0 + float(np.max(np.abs(data.y)))
    p_fit = options.known_order if options.known_order is not None else options.p
    if resid_scale <= _ZERO_RESIDUAL_REL * y_scale:
        h_e = options.h_e if options.h_e is not None else T ** (-1.0 / 5.0)
        path = _zero_path(p_fit, data.times, h_e)
        refined = refined_fit(data, preliminary, path, 0, h_star, kernel, widen_sparse=widen)
        return FitResult(
            bandwidths=derive_set(h_star, h_e, options.bandwidth_factor),
            p=p_fit,
            order_known=options.known_order is not None,
            selection=None,
            phi_path=path,
            active=(),
            varying=(),
            p0=0,
            preliminary=preliminary,
            refined=refined,
            whitened=whitened_response(data, preliminary, path, 0),
        )

    h_e = options.h_e
    if h_e is None:
        cands = options.tvar_candidates
        cands = default_tvar_candidates(T) if cands is None else np.asarray(cands)
        h_e = loocv_tvar(preliminary.ehat, p_fit, cands, kernel)

    if options.known_order is not None:
        path = fit_path(preliminary.ehat, p_fit, h_e, kernel)
        selection = None
        active = tuple(range(1, p_fit + 1))
        varying = tuple(range(1, p_fit + 1))
        p0 = p_fit
    else:
        selection = select_tuning(
            preliminary.ehat,
            p_fit,
            h_e,
            kernel,
            grid_lambda=options.lambda_grid,
            grid_gamma=options.gamma_grid,
            paired=options.tie_gamma,
        )
        path = selection.path
        active = selection.active
        varying = selection.varying
        p0 = max(active, default=0)

    refined = refined_fit(data, preliminary, path, p0, h_star, kernel, widen_sparse=widen)
    return FitResult(
        bandwidths=derive_set(h_star, h_e, options.bandwidth_factor),
        p=p_fit,
        order_known=options.known_order is not None,
        selection=selection,
        phi_path=path,
        active=active,
        varying=varying,
        p0=p0,
        preliminary=preliminary,
        refined=refined,
        whitened=whitened_response(data, preliminary, path, p0),
    )


@dataclass(frozen=True)
class ExperimentOptions:
    """Harness settings: pipeline options plus what to record per replication."""

    pipeline: PipelineOptions = PipelineOptions()
    burn_in: int = 200
    eval_points: tuple = ()  # (u, x) pairs at which to record ghat and gstar
    rase_lags: tuple = (1, 2)


def run_replication(
    model_label: str,
    T: int,
    sigma: float,
    seed: int,
    index: int,
    options: ExperimentOptions = ExperimentOptions(),
) -> ReplicationRecord:
    """Simulate one dataset, run the pipeline and measure everything."""
    model = coefficient_model(model_label)
    config = SimulationConfig(
        T=T,
        sigma=sigma,
        model=model,
        seed=seed,
        replications=1,
        burn_in=options.burn_in,
    )
    data = gen_dataset(config, index)
    result = three_step_fit(data, options.pipeline)
    kernel = options.pipeline.kernel

    g_true = regression_surface(data.times, data.x)
    rase_pre = rase(result.preliminary.ghat_at_obs, g_true)
    rase_ref = rase(result.refined.ghat_at_obs, g_true)

    true_path = truth_path(model, data.times, h_e=result.bandwidths.h_e)
    p_true = max(model.truth.active)
    oracle = oracle_fit(
        data,
        result.preliminary,
        true_path,
        p_true,
        result.bandwidths.h_star,
        kernel,
        widen_sparse=options.pipeline.widen_sparse,
    )
    rase_or = rase(oracle.ghat_at_obs, g_true)

    phi_rase = {
        k: rase_phi(result.phi_path, model, k)
        for k in options.rase_lags
        if k <= result.phi_path.p
    }

    selection_outcome = None
    constant_estimates = {}
    if result.selection is not None:
        selection_outcome = classify(result.active, result.varying, model.truth)
        for k in sorted(set(model.truth.active) - set(model.truth.varying)):
            if k in result.selection.active and k not in result.selection.varying:
                constant_estimates[k] = constant_coefficient_estimate(result.selection, k)

    point_values = {}
    for u, x in options.eval_points:
        ghat = result.eval_preliminary(data, u, x, kernel)
        gstar = result.eval_refined(data, u, x, kernel)
        point_values[(u, x)] = (ghat, gstar)

    return ReplicationRecord(
        index=index,
        rase_preliminary=rase_pre,
        rase_refined=rase_ref,
        rase_oracle=rase_or,
        rase_phi=phi_rase,
        selection=selection_outcome,
        active=tuple(result.active),
        varying=tuple(result.varying),
        constant_estimates=constant_estimates,
        h_star=result.bandwidths.h_star,
        h_e=result.bandwidths.h_e,
        lambda_=result.selection.lambda_ if result.selection else float("nan"),
        gamma_=result.selection.gamma_ if result.selection else float("nan"),
        point_values=point_values,
    )


def _replication_worker(args):
    model_label, T, sigma, seed, index, options = args
    try:
        return index, run_replication(model_label, T, sigma, seed, index, options), None
    except Exception as exc:  # noqa: BLE001 - per-replication failures are recorded
        return index, None, f"{type(exc).__name__}: {exc}"


def run_cell(
    model_label: str,
    T: int,
    sigma: float,
    replications: int,
    seed: int,
    options: ExperimentOptions = ExperimentOptions(),
    threads: int = 1,
):
    """Run one (model, sigma, T) Monte Carlo cell.

    Returns (records, failures) where failures is a list of
    (replication_index, message). Replication streams are independent,
    so the same seed gives identical records for any thread count.
    """
    tasks = [(model_label, T, sigma, seed, i, options) for i in range(replications)]
    records = []
    failures = []
    if threads > 1:
        chunk = max(1, replications // (threads * 8))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            outcomes = list(pool.map(_replication_worker, tasks, chunksize=chunk))
    else:
        outcomes = [_replication_worker(t) for t in tasks]
    for index, record, error in sorted(outcomes, key=lambda o: o[0]):
        if error is None:
            records.append(record)
        else:
            failures.append((index, error))
    return records, failures
