"""Leave-one-out cross-validation for the surface and AR-stage bandwidths."""

from dataclasses import dataclass

import numpy as np

from .errors import AllCandidatesFailed, SingularDesign, TvregError
from .kernels import KernelSpec, kernel_eval
from .linalg import stabilized_solve
from .locallinear import LOO_MIN_COUNT, TimeSeries, fit_point, fit_point_widened
from .tvar import build_design, gram_path


@dataclass(frozen=True)
class BandwidthSet:
    """The three bandwidths of the pipeline: preliminary, AR stage, refined."""

    h: float
    h_e: float
    h_star: float

    def __post_init__(self):
        if min(self.h, self.h_e, self.h_star) <= 0:
            raise ValueError("bandwidths must be positive")


def default_surface_candidates(t: int, n: int = 12) -> np.ndarray:
    """Log-spaced grid on [0.5, 2.5] * T^(-1/6)."""
    return np.geomspace(0.5, 2.5, n) * t ** (-1.0 / 6.0)


def default_tvar_candidates(t: int, n: int = 12) -> np.ndarray:
    """Log-spaced grid on [0.5, 2.5] * T^(-1/5)."""
    return np.geomspace(0.5, 2.5, n) * t ** (-1.0 / 5.0)


def _pick_candidate(candidates, scores, noise_floor):
    """Smallest score wins; near-ties go to the largest bandwidth.

    Scores within the floating-point noise floor of the minimum (plus a
    relative slack) are treated as tied, so a noise-free fit selects the
    smoothest feasible candidate deterministically.
    """
    scores = np.asarray(scores, dtype=float)
    finite = np.isfinite(scores)
    if not np.any(finite):
        raise AllCandidatesFailed("every bandwidth candidate was infeasible")
    best = np.min(scores[finite])
    tied = finite & (scores <= best * (1.0 + 1e-9) + noise_floor)
    return float(np.max(np.asarray(candidates, dtype=float)[tied]))


def loocv_surface(
    data: TimeSeries, candidates, kernel: KernelSpec, widen_sparse: bool = False
) -> float:
    """Pick the surface bandwidth minimizing the leave-one-out squared error.

    For each candidate, every observation is predicted by the local-linear
    fit with its own weight forced to zero. By default candidates for
    which any point is infeasible score +inf; with widen_sparse the
    window at such points is grown instead, so every candidate gets a
    finite score and sparse extremes do not veto small bandwidths.
    """
    candidates = np.atleast_1d(np.asarray(candidates, dtype=float))
    if candidates.size == 0:
        raise ValueError("candidate list must be non-empty")
    if np.any(candidates <= 0):
        raise ValueError("bandwidth candidates must be positive")
    T = data.length
    times = data.times
    override = np.ones(T)
    scores = np.full(candidates.shape, np.inf)
    for ci, h in enumerate(candidates):
        total = 0.0
        feasible = True
        for i in range(T):
            override[i] = 0.0
            try:
                if widen_sparse:
                    fit = fit_point_widened(
                        data,
                        times[i],
                        data.x[i],
                        h,
                        kernel,
                        min_weight_count=LOO_MIN_COUNT,
                        weights_override=override,
                    )
                else:
                    fit = fit_point(
                        data, times[i], data.x[i], h, kernel, weights_override=override
                    )
            except TvregError:
                feasible = False
                override[i] = 1.0
                break
            override[i] = 1.0
            total += (data.y[i] - fit.g) ** 2
        if feasible:
            scores[ci] = total
    yscale = 1.0 + float(np.max(np.abs(data.y)))
    noise_floor = T * (1e-10 * yscale) ** 2
    return _pick_candidate(candidates, scores, noise_floor)


def loocv_tvar(ehat, p: int, candidates, kernel: KernelSpec) -> float:
    """Pick the AR-stage bandwidth by leave-one-out prediction of the residuals.

    At each t > p the local coefficient fit at u = t/T excludes row t
    itself; the score is the squared error of predicting e_t from its own
    lags with the leave-one-out coefficients.
    """
    ehat = np.asarray(ehat, dtype=float)
    candidates = np.atleast_1d(np.asarray(candidates, dtype=float))
    if candidates.size == 0:
        raise ValueError("candidate list must be non-empty")
    if np.any(candidates <= 0):
        raise ValueError("bandwidth candidates must be positive")
    design = build_design(ehat, p)
    n = design.times.shape[0]
    # each row's own contribution to the gram; at u = t/T the row offset is
    # zero, so only the level block is affected by leaving it out
    lag_outer = np.einsum("nj,nk->njk", design.lags, design.lags)
    scores = np.full(candidates.shape, np.inf)
    for ci, h_e in enumerate(candidates):
        try:
            a, b, _ = gram_path(design, design.times, h_e, kernel)
        except TvregError:
            continue
        w_self = kernel_eval(kernel, 0.0) / h_e
        a_loo = a.copy()
        a_loo[:, :p, :p] -= w_self * lag_outer
        b_loo = b.copy()
        b_loo[:, :p] -= w_self * design.lags * design.response[:, None]
        try:
            alpha = stabilized_solve(a_loo, b_loo)
        except SingularDesign:
            continue
        pred = np.einsum("nj,nj->n", alpha[:, :p], design.lags)
        scores[ci] = float(np.sum((design.response - pred) ** 2))
    escale = 1.0 + float(np.max(np.abs(ehat)))
    noise_floor = n * (1e-10 * escale) ** 2
    return _pick_candidate(candidates, scores, noise_floor)


def derive_set(h_star: float, h_e: float, factor: float = 0.5) -> BandwidthSet:
    """Derive the preliminary bandwidth as factor * h_star."""
    if h_star <= 0 or h_e <= 0:
        raise ValueError("bandwidths must be positive")
    if not 0 < factor <= 1:
        raise ValueError(f"factor must be in (0, 1], got {factor}")
    return BandwidthSet(h=factor * h_star, h_e=h_e, h_star=h_star)
