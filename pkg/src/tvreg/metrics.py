"""Evaluation criteria and Monte Carlo aggregation.

The per-replication records produced by the harness are reduced here
into the quantities the experiment tables report: root average squared
errors of the surface estimators, coefficient-path errors, selection
classification rates and constant-coefficient bias/standard error.
"""

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import EmptyRecords, LengthMismatch
from .simulate import CoefficientModel
from .tvar import TvarPath
from .ulasso import StructureTruth


class SelectionCategory(Enum):
    UNDERFITTED = "underfitted"
    CORRECT = "correct"
    OVERFITTED = "overfitted"


@dataclass(frozen=True)
class SelectionOutcome:
    """Classification of one replication's selected structure.

    vs grades the active-lag selection alone; vs_ci additionally requires
    the varying/constant split to be right.
    """

    vs: SelectionCategory
    vs_ci: SelectionCategory


def rase(estimates, truth) -> float:
    """Root average squared error between two equal-length vectors."""
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.shape != truth.shape:
        raise LengthMismatch(
            f"length mismatch: {estimates.shape} vs {truth.shape}"
        )
    return float(np.sqrt(np.mean((estimates - truth) ** 2)))


def rase_phi(path: TvarPath, model: CoefficientModel, k: int) -> float:
    """RASE of the lag-k coefficient path against the model truth on the grid."""
    if not 1 <= k <= path.p:
        raise ValueError(f"lag {k} outside 1..{path.p}")
    if k > model.p:
        raise ValueError(f"lag {k} outside the model's {model.p} coefficients")
    truth = model.phi[k - 1](path.grid)
    return rase(path.phi[k - 1], truth)


def classify(active_hat, varying_hat, truth: StructureTruth) -> SelectionOutcome:
    """Grade a selected structure against the truth.

    Underfitted when a true member is missing, correct on exact match,
    overfitted when the truth is strictly contained. For the joint grade,
    a missing member of either set dominates any spurious inclusion.
    """
    a_hat = frozenset(active_hat)
    v_hat = frozenset(varying_hat)
    a_true = frozenset(truth.active)
    v_true = frozenset(truth.varying)

    if not a_true <= a_hat:
        vs = SelectionCategory.UNDERFITTED
    elif a_hat == a_true:
        vs = SelectionCategory.CORRECT
    else:
        vs = SelectionCategory.OVERFITTED

    if not (a_true <= a_hat and v_true <= v_hat):
        vs_ci = SelectionCategory.UNDERFITTED
    elif a_hat == a_true and v_hat == v_true:
        vs_ci = SelectionCategory.CORRECT
    else:
        vs_ci = SelectionCategory.OVERFITTED
    return SelectionOutcome(vs=vs, vs_ci=vs_ci)


@dataclass
class ReplicationRecord:
    """Everything retained from a single Monte Carlo replication."""

    index: int
    rase_preliminary: float
    rase_refined: float
    rase_oracle: float
    rase_phi: dict = field(default_factory=dict)  # lag -> RASE of coefficient path
    selection: SelectionOutcome | None = None
    active: tuple = ()
    varying: tuple = ()
    constant_estimates: dict = field(default_factory=dict)  # lag -> grid-mean estimate
    h_star: float = float("nan")
    h_e: float = float("nan")
    lambda_: float = float("nan")
    gamma_: float = float("nan")
    point_values: dict = field(default_factory=dict)  # (u, x) -> (ghat, gstar)


def _mean_sd(values):
    arr = np.asarray(values, dtype=float)
    n = arr.shape[0]
    mean = float(np.mean(arr))
    sd = float(np.std(arr, ddof=1)) if n > 1 else 0.0
    return mean, sd, n > 1


@dataclass
class ExperimentReport:
    """Aggregates of one Monte Carlo cell, plus the raw records."""

    model_label: str
    T: int
    sigma: float
    n: int
    records: list
    rase_mean_sd: dict  # estimator name -> (mean, sd)
    rase_phi_mean_sd: dict  # lag -> (mean, sd)
    vs_rates: dict  # SelectionCategory -> fraction
    vs_ci_rates: dict
    constant_stats: dict  # lag -> {"bias", "se", "count", "truth"}
    sd_defined: bool


def aggregate(records, model: CoefficientModel, T: int = 0, sigma: float = float("nan")) -> ExperimentReport:
    """Reduce replication records to the table-level quantities.

    Records are sorted by replication index first, so the result does not
    depend on collection order. Sample standard deviations use the n-1
    denominator; with a single record the SD is reported as 0 and flagged
    through sd_defined. Constant-coefficient bias and SE condition on the
    replications where the lag was identified as a nonzero constant.
    """
    records = sorted(records, key=lambda r: r.index)
    if not records:
        raise EmptyRecords("no replication records to aggregate")
    n = len(records)

    rase_mean_sd = {}
    sd_defined = n > 1
    for name, attr in (
        ("preliminary", "rase_preliminary"),
        ("refined", "rase_refined"),
        ("oracle", "rase_oracle"),
    ):
        vals = [getattr(r, attr) for r in records]
        mean, sd, _ = _mean_sd(vals)
        rase_mean_sd[name] = (mean, sd)

    rase_phi_mean_sd = {}
    lags = sorted({k for r in records for k in r.rase_phi})
    for k in lags:
        vals = [r.rase_phi[k] for r in records if k in r.rase_phi]
        mean, sd, _ = _mean_sd(vals)
        rase_phi_mean_sd[k] = (mean, sd)

    vs_rates = {c: 0.0 for c in SelectionCategory}
    vs_ci_rates = {c: 0.0 for c in SelectionCategory}
    graded = [r for r in records if r.selection is not None]
    if graded:
        m = len(graded)
        for c in SelectionCategory:
            vs_rates[c] = sum(1 for r in graded if r.selection.vs is c) / m
            vs_ci_rates[c] = sum(1 for r in graded if r.selection.vs_ci is c) / m

    constant_stats = {}
    constant_lags = sorted(set(model.truth.active) - set(model.truth.varying))
    for k in constant_lags:
        truth_value = float(model.phi[k - 1](np.array([0.5]))[0])
        estimates = [
            r.constant_estimates[k] for r in records if k in r.constant_estimates
        ]
        if estimates:
            mean, sd, _ = _mean_sd(estimates)
            constant_stats[k] = {
                "bias": mean - truth_value,
                "se": sd,
                "count": len(estimates),
                "truth": truth_value,
            }
        else:
            constant_stats[k] = {
                "bias": float("nan"),
                "se": float("nan"),
                "count": 0,
                "truth": truth_value,
            }

    return ExperimentReport(
        model_label=model.label,
        T=T,
        sigma=sigma,
        n=n,
        records=list(records),
        rase_mean_sd=rase_mean_sd,
        rase_phi_mean_sd=rase_phi_mean_sd,
        vs_rates=vs_rates,
        vs_ci_rates=vs_ci_rates,
        constant_stats=constant_stats,
        sd_defined=sd_defined,
    )
