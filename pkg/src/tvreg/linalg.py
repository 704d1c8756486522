"""Ridge-stabilized dense solves shared by the local-fit modules."""

import numpy as np

from .errors import SingularDesign

RIDGE_EPS = 1e-12
COND_LIMIT = 1e12


def stabilized_solve(a, b):
    """Solve the symmetric PSD system a @ x = b with trace-scaled ridging.

    Adds RIDGE_EPS * tr(a)/m to the diagonal before solving and raises
    SingularDesign when the stabilized matrix still has a condition number
    above COND_LIMIT. Accepts stacked systems: a with shape (..., m, m) and
    b with shape (..., m).
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m = a.shape[-1]
    trace = np.trace(a, axis1=-2, axis2=-1)
    shift = RIDGE_EPS * trace / m
    a_stab = a + shift[..., None, None] * np.eye(m)

    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.linalg.cond(a_stab)
    bad = ~np.isfinite(cond) | (cond > COND_LIMIT)
    if np.any(bad):
        indices = np.nonzero(np.atleast_1d(bad))[0]
        raise SingularDesign(
            f"normal matrix numerically singular (condition > {COND_LIMIT:g})",
            indices=indices,
        )
    if b.ndim == a.ndim - 1:
        return np.linalg.solve(a_stab, b[..., None])[..., 0]
    return np.linalg.solve(a_stab, b)
