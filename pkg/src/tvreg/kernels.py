"""Compact-support kernels, scaled evaluation and numeric kernel moments."""

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.integrate import quad

from .errors import NonPositiveBandwidth


class KernelFamily(Enum):
    EPANECHNIKOV = "epanechnikov"


@dataclass(frozen=True)
class KernelSpec:
    """A symmetric kernel with compact support [-support_halfwidth, support_halfwidth]."""

    family: KernelFamily = KernelFamily.EPANECHNIKOV
    support_halfwidth: float = 1.0


EPANECHNIKOV = KernelSpec(KernelFamily.EPANECHNIKOV, 1.0)


@dataclass(frozen=True)
class KernelMoments:
    """Low-order moments of K and of K**2 used in diagnostics.

    mu2 = int t^2 K(t) dt, nu_j = int t^j K(t)^2 dt, integrated over the
    kernel support.
    """

    mu2: float
    nu0: float
    nu1: float
    nu2: float


def kernel_eval(kernel: KernelSpec, x):
    """Evaluate K at x (scalar or array). Exactly zero outside the support."""
    x = np.asarray(x, dtype=float)
    if kernel.family is KernelFamily.EPANECHNIKOV:
        inside = np.abs(x) <= kernel.support_halfwidth
        val = np.where(inside, 0.75 * (1.0 - x * x), 0.0)
    else:  # pragma: no cover - single-family enum, kept for extension
        raise ValueError(f"unknown kernel family {kernel.family}")
    return val if val.ndim else float(val)


def kernel_eval_scaled(kernel: KernelSpec, x, h: float):
    """Evaluate the bandwidth-scaled kernel K(x/h)/h.

    Raises NonPositiveBandwidth when h <= 0.
    """
    if h <= 0:
        raise NonPositiveBandwidth(f"bandwidth must be positive, got {h}")
    return kernel_eval(kernel, np.asarray(x, dtype=float) / h) / h


def kernel_moments(kernel: KernelSpec) -> KernelMoments:
    """Integrate the kernel moments on the support by adaptive quadrature."""
    c = kernel.support_halfwidth

    def k(t):
        return kernel_eval(kernel, t)

    mu2 = quad(lambda t: t * t * k(t), -c, c, epsabs=1e-12)[0]
    nu0 = quad(lambda t: k(t) ** 2, -c, c, epsabs=1e-12)[0]
    nu1 = quad(lambda t: t * k(t) ** 2, -c, c, epsabs=1e-12)[0]
    nu2 = quad(lambda t: t * t * k(t) ** 2, -c, c, epsabs=1e-12)[0]
    return KernelMoments(mu2=mu2, nu0=nu0, nu1=nu1, nu2=nu2)
