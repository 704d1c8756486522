"""Data generation for the simulation studies.

The response is Y_t = 1.5*cos(2*pi*t/T)*X_t^2 + e_t with a locally
stationary AR(1) regressor and a tvAR(5) error process whose coefficient
functions come from one of three built-in models. Reproducibility: all
streams use numpy's PCG64 bit generator keyed through SeedSequence with
entropy (seed, replication_index); normal variates are produced by the
inverse normal CDF applied to open-interval uniforms, so runs are
bit-stable across processes and worker counts.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ExplosiveWarning
from .locallinear import TimeSeries
from .tvar import TvarPath
from .ulasso import StructureTruth

EXPLOSION_LIMIT = 1e6
DEFAULT_BURN_IN = 200


def regression_surface(u, x):
    """The simulated regression surface 1.5*cos(2*pi*u)*x^2."""
    return 1.5 * np.cos(2.0 * np.pi * np.asarray(u, dtype=float)) * np.asarray(x) ** 2


def _phi_a1(u):
    return -0.1 + 0.6 * np.sin(2.0 * np.pi * np.asarray(u, dtype=float))


def _phi_b1(u):
    return 3.0 * (np.asarray(u, dtype=float) - 0.4) ** 2 - 0.6


def _phi_b2(u):
    return np.full_like(np.asarray(u, dtype=float), 0.3)


def _phi_c1(u):
    return 5.0 * (np.asarray(u, dtype=float) - 0.5) ** 2 - 0.6


def _phi_c2(u):
    return -1.0 + np.sin(np.pi * np.asarray(u, dtype=float)) ** 2


def _phi_zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class CoefficientModel:
    """A tvAR coefficient-function vector with its true structure."""

    label: str
    phi: tuple
    truth: StructureTruth

    @property
    def p(self) -> int:
        return len(self.phi)

    def phi_matrix(self, grid) -> np.ndarray:
        """Evaluate every coefficient function on a grid, shape (p, G)."""
        grid = np.atleast_1d(np.asarray(grid, dtype=float))
        return np.vstack([f(grid) for f in self.phi])


_MODELS = {
    "a": CoefficientModel(
        label="a",
        phi=(_phi_a1, _phi_zero, _phi_zero, _phi_zero, _phi_zero),
        truth=StructureTruth(active=(1,), varying=(1,)),
    ),
    "b": CoefficientModel(
        label="b",
        phi=(_phi_b1, _phi_b2, _phi_zero, _phi_zero, _phi_zero),
        truth=StructureTruth(active=(1, 2), varying=(1,)),
    ),
    "c": CoefficientModel(
        label="c",
        phi=(_phi_c1, _phi_c2, _phi_zero, _phi_zero, _phi_zero),
        truth=StructureTruth(active=(1, 2), varying=(1, 2)),
    ),
}


def coefficient_model(label: str) -> CoefficientModel:
    """Look up one of the built-in coefficient models by label (a, b or c)."""
    key = str(label).lower()
    if key not in _MODELS:
        raise ValueError(f"unknown coefficient model {label!r}; choose from a, b, c")
    return _MODELS[key]


def truth_path(model: CoefficientModel, grid, h_e: float = 1.0) -> TvarPath:
    """The true coefficient paths as a TvarPath for oracle whitening.

    Derivative entries are filled with zeros; only the level paths are
    meaningful here.
    """
    grid = np.atleast_1d(np.asarray(grid, dtype=float))
    phi = model.phi_matrix(grid)
    return TvarPath(p=model.p, grid=grid, phi=phi, dphi_scaled=np.zeros_like(phi), h_e=h_e)


@dataclass(frozen=True)
class SimulationConfig:
    """One Monte Carlo cell: sample size, noise level, model, seeding."""

    T: int
    sigma: float
    model: CoefficientModel
    seed: int
    replications: int = 1
    burn_in: int = DEFAULT_BURN_IN

    def __post_init__(self):
        if self.T < 50:
            raise ValueError(f"T must be >= 50, got {self.T}")
        if self.sigma <= 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.replications < 1:
            raise ValueError("replications must be >= 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")


def _rng(seed) -> np.random.Generator:
    """PCG64 generator; seed may be an int or a SeedSequence."""
    return np.random.Generator(np.random.PCG64(seed))


def standard_normal(rng: np.random.Generator, size) -> np.ndarray:
    """Inverse-CDF normals from uniforms on the open unit interval."""
    u = rng.integers(1, 2**53, size=size).astype(float) / 2**53
    return ndtri(u)


def replication_seed(seed: int, replication_index: int) -> np.random.SeedSequence:
    """Mix the experiment seed with a replication index into one stream key."""
    return np.random.SeedSequence(entropy=[int(seed), int(replication_index)])


def gen_regressor(T: int, seed, shocks=None) -> np.ndarray:
    """Locally stationary AR(1) regressor X_t = 0.7*(t/T)*X_{t-1} + 0.5*xi_t.

    Starts from X_0 = 0; the t = 1 coefficient 0.7/T makes the
    initialization immaterial. shocks, when given, replaces the standard
    normal draws xi (a hook for deterministic tests).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if shocks is None:
        shocks = standard_normal(_rng(seed), T)
    else:
        shocks = np.asarray(shocks, dtype=float)
        if shocks.shape[0] != T:
            raise ValueError("shocks must have length T")
    x = np.empty(T)
    prev = 0.0
    for t in range(1, T + 1):
        prev = 0.7 * (t / T) * prev + 0.5 * shocks[t - 1]
        x[t - 1] = prev
    return x


def gen_error(
    T: int,
    model: CoefficientModel,
    sigma: float,
    seed,
    burn_in: int = DEFAULT_BURN_IN,
    innovations=None,
    freeze_at_u=None,
) -> np.ndarray:
    """Simulate the tvAR error process e_t = sum_k phi_k(t/T) e_{t-k} + eps_t.

    The recursion starts from zero lags and runs for burn_in + T steps
    with the coefficients frozen at u = 0 during burn-in, so the returned
    T values are close to the locally stationary law at t = 1.
    innovations, when given, replaces the standard normal draws (length
    burn_in + T, scaled by sigma internally); freeze_at_u evaluates the
    coefficients at a fixed rescaled time for every step (test hook).
    """
    if burn_in < 0:
        raise ValueError("burn_in must be >= 0")
    steps = burn_in + T
    if innovations is None:
        innovations = standard_normal(_rng(seed), steps)
    else:
        innovations = np.asarray(innovations, dtype=float)
        if innovations.shape[0] != steps:
            raise ValueError("innovations must have length burn_in + T")
    if freeze_at_u is not None:
        u_steps = np.full(steps, float(freeze_at_u))
    else:
        u_steps = np.concatenate(
            (np.zeros(burn_in), np.arange(1, T + 1, dtype=float) / T)
        )
    coeffs = model.phi_matrix(u_steps)  # (p, steps)
    p = model.p
    buf = np.zeros(steps + p)
    eps = sigma * innovations
    for s in range(steps):
        lags = buf[s : s + p][::-1]
        buf[p + s] = coeffs[:, s] @ lags + eps[s]
    e = buf[p + burn_in :].copy()
    if np.any(np.abs(e) > EXPLOSION_LIMIT):
        warnings.warn(
            f"error path exceeded |e| = {EXPLOSION_LIMIT:g}; coefficient model "
            "is outside the stability region",
            ExplosiveWarning,
        )
    return e


def gen_dataset(config: SimulationConfig, replication_index: int) -> TimeSeries:
    """One replication of the simulated dataset, fully determined by (seed, index)."""
    root = replication_seed(config.seed, replication_index)
    x_seed, e_seed = root.spawn(2)
    x = gen_regressor(config.T, x_seed)
    e = gen_error(config.T, config.model, config.sigma, e_seed, config.burn_in)
    times = np.arange(1, config.T + 1, dtype=float) / config.T
    y = regression_surface(times, x) + e
    return TimeSeries(x=x, y=y)
