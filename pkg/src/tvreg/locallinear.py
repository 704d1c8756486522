"""Bivariate local-linear regression in rescaled time and the regressor.

Provides the preliminary surface fit, the refined fit on whitened
responses, and the benchmark fit that whitens with the true coefficient
functions. All three share one weighted least-squares core with a product
Epanechnikov kernel and a common bandwidth for both arguments.
"""

from dataclasses import dataclass

import numpy as np

from .errors import LagExceedsSample, NonPositiveBandwidth, SingularDesign
from .kernels import KernelSpec, kernel_eval
from .linalg import stabilized_solve
from .tvar import TvarPath


@dataclass
class TimeSeries:
    """Observed triples (t, X_t, Y_t) with rescaled times t/T."""

    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.ndim != 1 or self.y.ndim != 1:
            raise ValueError("x and y must be one-dimensional")
        if self.x.shape != self.y.shape:
            raise ValueError("x and y must have equal length")
        if self.length < 3:
            raise ValueError(f"need at least 3 observations, got {self.length}")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError("x and y must be finite")

    @property
    def length(self) -> int:
        return self.x.shape[0]

    @property
    def times(self) -> np.ndarray:
        """Rescaled observation times t/T for t = 1..T."""
        return np.arange(1, self.length + 1, dtype=float) / self.length


@dataclass(frozen=True)
class SurfaceFit:
    """Local-linear coefficients at one query point.

    g is the fitted surface value; the two derivative fields are the
    bandwidth-scaled partials h * dg/du and h * dg/dx.
    """

    g: float
    dg_du_scaled: float
    dg_dx_scaled: float
    effective_weight_count: int


@dataclass
class ResidualSeries:
    """Fitted values at the observation points and the matching residuals."""

    ehat: np.ndarray
    ghat_at_obs: np.ndarray

    def __post_init__(self):
        self.ehat = np.asarray(self.ehat, dtype=float)
        self.ghat_at_obs = np.asarray(self.ghat_at_obs, dtype=float)
        if self.ehat.shape != self.ghat_at_obs.shape:
            raise ValueError("ehat and ghat_at_obs must have equal length")


def fit_point(
    data: TimeSeries,
    u: float,
    x: float,
    h: float,
    kernel: KernelSpec,
    weights_override=None,
    response_override=None,
    sample_start: int = 1,
) -> SurfaceFit:
    """Solve the locally weighted least-squares problem at (u, x).

    The design row for observation t is (1, (t/T - u)/h, (X_t - x)/h) and
    the weight is K_h(t/T - u) * K_h(X_t - x), optionally multiplied by
    weights_override[t]. Only rows with t >= sample_start participate,
    which is how the refined fit restricts to the whitened subsample;
    response_override replaces Y by another response vector of length T.

    Observations with exactly zero weight are dropped before the normal
    equations are formed, so they have no influence at all. Raises
    SingularDesign when fewer than 3 observations carry weight or the
    stabilized 3x3 system is numerically singular.
    """
    if h <= 0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h}")
    if sample_start < 1:
        raise ValueError(f"sample_start must be >= 1, got {sample_start}")
    T = data.length
    y = data.y if response_override is None else np.asarray(response_override, dtype=float)
    if y.shape[0] != T:
        raise ValueError("response_override must have length T")

    s = sample_start - 1
    du = (data.times[s:] - u) / h
    dx = (data.x[s:] - x) / h
    w = kernel_eval(kernel, du) * kernel_eval(kernel, dx) / (h * h)
    if weights_override is not None:
        weights_override = np.asarray(weights_override, dtype=float)
        if weights_override.shape[0] != T:
            raise ValueError("weights_override must have length T")
        if np.any(weights_override < 0):
            raise ValueError("weights_override must be nonnegative")
        w = w * weights_override[s:]

    mask = w > 0
    neff = int(np.count_nonzero(mask))
    if neff < 3:
        raise SingularDesign(
            f"only {neff} observations with positive weight at (u={u:g}, x={x:g}); "
            "bandwidth too small or query outside the data support"
        )
    du_m = du[mask]
    dx_m = dx[mask]
    w_m = w[mask]
    y_m = y[s:][mask]

    z = np.column_stack((np.ones(neff), du_m, dx_m))
    a = z.T @ (z * w_m[:, None])
    b = z.T @ (w_m * y_m)
    beta = stabilized_solve(a, b)
    return SurfaceFit(float(beta[0]), float(beta[1]), float(beta[2]), neff)


# widening schedule for sparse product windows: isolated extreme regressor
# values can leave fewer than 3 in-window neighbors at any sensible global
# bandwidth, so the per-point window grows geometrically until the local
# system is identifiable; leave-one-out scoring raises the floor further
# because near-minimal windows give wildly unstable held-out predictions
WIDEN_FACTOR = 1.5
WIDEN_MAX_STEPS = 16
WIDEN_MIN_COUNT = 3
LOO_MIN_COUNT = 10


def fit_point_widened(
    data: TimeSeries,
    u: float,
    x: float,
    h: float,
    kernel: KernelSpec,
    min_weight_count: int = WIDEN_MIN_COUNT,
    **kwargs,
) -> SurfaceFit:
    """fit_point with geometric per-point window widening on sparse windows.

    The window grows by WIDEN_FACTOR until at least min_weight_count
    observations carry weight; if the sample is too small to ever reach
    the floor, the widest successful fit is returned.
    """
    h_k = h
    last_fit = None
    last_exc = None
    for _ in range(WIDEN_MAX_STEPS):
        try:
            fit = fit_point(data, u, x, h_k, kernel, **kwargs)
        except SingularDesign as exc:
            last_exc = exc
            h_k *= WIDEN_FACTOR
            continue
        if fit.effective_weight_count >= min_weight_count:
            return fit
        last_fit = fit
        h_k *= WIDEN_FACTOR
    if last_fit is not None:
        return last_fit
    raise SingularDesign(
        f"window widening exhausted at (u={u:g}, x={x:g}): {last_exc}"
    ) from last_exc


def preliminary_fit(
    data: TimeSeries, h: float, kernel: KernelSpec, widen_sparse: bool = False
) -> ResidualSeries:
    """Fit the surface at every observation point and return the residuals.

    With widen_sparse the window at an unidentifiable point is grown
    geometrically instead of failing; by default SingularDesign
    propagates with the offending observation index.
    """
    T = data.length
    ghat = np.empty(T)
    times = data.times
    point = fit_point_widened if widen_sparse else fit_point
    for i in range(T):
        try:
            ghat[i] = point(data, times[i], data.x[i], h, kernel).g
        except SingularDesign as exc:
            raise SingularDesign(f"{exc} (at observation t={i + 1})") from exc
    return ResidualSeries(ehat=data.y - ghat, ghat_at_obs=ghat)


def whitened_response(data: TimeSeries, ghat: ResidualSeries, phi: TvarPath, p0: int) -> np.ndarray:
    """Subtract the fitted autoregressive error component from Y.

    Returns the full-length response vector whose entries for t > p0 are
    Y_t - sum_k phi_k(t/T) * ehat_{t-k}; entries with t <= p0 are left as
    Y_t and are excluded from any downstream fit via sample_start.
    """
    T = data.length
    if phi.grid.shape[0] != T or not np.allclose(phi.grid, data.times):
        raise ValueError("coefficient path must be evaluated on the observation grid t/T")
    nonzero_lags = [k for k in range(1, phi.p + 1) if np.any(phi.phi[k - 1] != 0.0)]
    if nonzero_lags and max(nonzero_lags) > p0:
        raise ValueError(
            f"truncation lag p0={p0} smaller than the largest active lag {max(nonzero_lags)}"
        )
    ystar = data.y.copy()
    for k in nonzero_lags:
        ystar[p0:] -= phi.phi[k - 1, p0:] * ghat.ehat[p0 - k : T - k]
    return ystar


def refined_fit(
    data: TimeSeries,
    ghat: ResidualSeries,
    phi: TvarPath,
    p0: int,
    h_star: float,
    kernel: KernelSpec,
    widen_sparse: bool = False,
) -> ResidualSeries:
    """Local-linear fit of the whitened response on rows t = p0+1..T.

    The surface is evaluated at all T observation points from the same
    truncated whitened sample, so the first p0 points are fitted rather
    than left undefined.
    """
    T = data.length
    if p0 < 0:
        raise ValueError(f"p0 must be >= 0, got {p0}")
    if p0 >= T - 3:
        raise LagExceedsSample(f"p0={p0} leaves fewer than 3 usable rows out of T={T}")
    ystar = whitened_response(data, ghat, phi, p0)
    gstar = np.empty(T)
    times = data.times
    point = fit_point_widened if widen_sparse else fit_point
    for i in range(T):
        gstar[i] = point(
            data,
            times[i],
            data.x[i],
            h_star,
            kernel,
            response_override=ystar,
            sample_start=p0 + 1,
        ).g
    return ResidualSeries(ehat=data.y - gstar, ghat_at_obs=gstar)


def oracle_fit(
    data: TimeSeries,
    ghat: ResidualSeries,
    true_phi: TvarPath,
    p: int,
    h_star: float,
    kernel: KernelSpec,
    widen_sparse: bool = False,
) -> ResidualSeries:
    """Refined fit that whitens with the true coefficient functions.

    The lagged errors still come from the preliminary residuals, so this
    benchmark only assumes the autoregressive structure itself is known.
    """
    return refined_fit(data, ghat, true_phi, p, h_star, kernel, widen_sparse=widen_sparse)
