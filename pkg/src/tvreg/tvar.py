"""Local-linear estimation of time-varying AR(p) coefficient functions.

The input is a residual series e_1..e_T (typically the residuals of the
preliminary surface fit). At a rescaled time u the coefficient vector and
its scaled derivative are estimated by weighted least squares on the lag
design, with time weights K_he(t/T - u) and rows t = p+1..T.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSample, NonPositiveBandwidth, SingularDesign
from .kernels import KernelSpec, kernel_eval
from .linalg import stabilized_solve


@dataclass
class TvarPath:
    """Coefficient paths phi_k(u) and h_e * phi_k'(u) on a time grid.

    phi and dphi_scaled have shape (p, G) where G = len(grid).
    """

    p: int
    grid: np.ndarray
    phi: np.ndarray
    dphi_scaled: np.ndarray
    h_e: float

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        self.dphi_scaled = np.asarray(self.dphi_scaled, dtype=float)
        g = self.grid.shape[0]
        if self.phi.shape != (self.p, g) or self.dphi_scaled.shape != (self.p, g):
            raise ValueError("coefficient path dimensions inconsistent with p and grid")

    @property
    def phi_deriv(self) -> np.ndarray:
        """Unscaled derivative paths phi_k'(u)."""
        return self.dphi_scaled / self.h_e


@dataclass
class TvarDesign:
    """Lagged design for the AR stage: row i corresponds to time t = p+1+i.

    lags[i, k-1] = e_{t-k}, response[i] = e_t, times[i] = t/T.
    """

    p: int
    lags: np.ndarray
    response: np.ndarray
    times: np.ndarray
    c0: float = field(init=False)

    def __post_init__(self):
        # c0 = sum of squared responses, reused by the penalized-loss evaluation
        self.c0 = float(self.response @ self.response)


def build_design(ehat, p: int) -> TvarDesign:
    """Assemble the (T-p) x p lag matrix, response and rescaled row times."""
    ehat = np.asarray(ehat, dtype=float)
    T = ehat.shape[0]
    if p < 1:
        raise ValueError(f"lag count must be >= 1, got {p}")
    if T - p < 2 * p + 1:
        raise InsufficientSample(
            f"need T - p >= 2p + 1 rows, got T={T}, p={p}"
        )
    n = T - p
    lags = np.empty((n, p))
    for k in range(1, p + 1):
        lags[:, k - 1] = ehat[p - k : T - k]
    response = ehat[p:]
    times = np.arange(p + 1, T + 1, dtype=float) / T
    return TvarDesign(p=p, lags=lags, response=response, times=times)


def gram_path(design: TvarDesign, grid, h_e: float, kernel: KernelSpec):
    """Weighted normal-equation blocks of the AR stage at every grid point.

    Returns (a, b, c) with a of shape (G, 2p, 2p), b of shape (G, 2p) and
    c of shape (G,), where the local loss at grid point g is
    L(alpha) = alpha' a[g] alpha - 2 b[g]' alpha + c[g].
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    p = design.p
    lag = design.lags
    d = (design.times[None, :] - grid[:, None]) / h_e
    w = kernel_eval(kernel, d) / h_e

    wd = w * d
    wdd = wd * d
    s0 = np.einsum("gn,nj,nk->gjk", w, lag, lag, optimize=True)
    s1 = np.einsum("gn,nj,nk->gjk", wd, lag, lag, optimize=True)
    s2 = np.einsum("gn,nj,nk->gjk", wdd, lag, lag, optimize=True)
    t0 = np.einsum("gn,n,nj->gj", w, design.response, lag, optimize=True)
    t1 = np.einsum("gn,n,nj->gj", wd, design.response, lag, optimize=True)

    g = grid.shape[0]
    a = np.empty((g, 2 * p, 2 * p))
    a[:, :p, :p] = s0
    a[:, :p, p:] = s1
    a[:, p:, :p] = s1
    a[:, p:, p:] = s2
    b = np.concatenate((t0, t1), axis=1)
    c = w @ (design.response ** 2)
    return a, b, c


def fit_at(ehat, p: int, u: float, h_e: float, kernel: KernelSpec) -> np.ndarray:
    """Estimate (phi(u), h_e * phi'(u)) at a single rescaled time.

    Returns the 2p-vector minimizing the kernel-weighted least-squares
    loss over rows t = p+1..T. Raises SingularDesign when the weighted
    normal matrix is not numerically invertible (e.g. a zero residual
    series) and InsufficientSample when T - p < 2p + 1.
    """
    if h_e <= 0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h_e}")
    design = build_design(ehat, p)
    a, b, _ = gram_path(design, [u], h_e, kernel)
    alpha = stabilized_solve(a, b)
    return alpha[0]


def fit_path(ehat, p: int, h_e: float, kernel: KernelSpec, grid=None) -> TvarPath:
    """fit_at applied over a grid of rescaled times (default {t/T})."""
    ehat = np.asarray(ehat, dtype=float)
    T = ehat.shape[0]
    if grid is None:
        grid = np.arange(1, T + 1, dtype=float) / T
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    if h_e <= 0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h_e}")
    design = build_design(ehat, p)
    a, b, _ = gram_path(design, grid, h_e, kernel)
    try:
        alpha = stabilized_solve(a, b)
    except SingularDesign as exc:
        where = grid[exc.indices] if exc.indices is not None else grid
        raise SingularDesign(
            f"singular AR design at grid point(s) u={np.round(where, 6)}",
            indices=exc.indices,
        ) from exc
    return TvarPath(
        p=p,
        grid=grid,
        phi=alpha[:, :p].T.copy(),
        dphi_scaled=alpha[:, p:].T.copy(),
        h_e=h_e,
    )
