"""Spike-and-slab regression and the external-fit summary used for borrowing.

The external dataset is fit with a per-coefficient two-component mixture
(spike N(0, v_spike), slab N(0, v_slab)) under Beta inclusion priors and a
Gamma prior on the noise precision.  An intercept with a flat prior is always
included and never enters selection.  ``summarize_external`` condenses the
fit into the posterior means/variances, inclusion probabilities, and borrow
flags consumed by the adaptive prior construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import UserInputError
from .gibbs import run_spike_slab_chain
from .mcmc import (
    ChainDiagnostics,
    ChainSpec,
    CoefficientPosterior,
    FitResult,
    effective_sample_size,
    split_rhat,
)

PIP_THRESHOLD_DEFAULT = 0.5


@dataclass(frozen=True)
class SspPriorSpec:
    """Hyperparameters of the spike-and-slab model, shared across coefficients.

    v_slab = 100 and v_spike = 1e-4 are explicit variances (a diffuse slab
    and a near-degenerate spike); the Beta(1, 1) and Gamma(0.01, 0.01)
    choices keep the inclusion probabilities and the noise precision
    non-informative.  All Gamma distributions are shape-rate.
    """

    v_slab: float = 100.0
    v_spike: float = 1e-4
    a_pi: float = 1.0
    b_pi: float = 1.0
    a_sigma: float = 0.01
    b_sigma: float = 0.01

    def __post_init__(self):
        for field_name in ("v_slab", "v_spike", "a_pi", "b_pi", "a_sigma", "b_sigma"):
            if getattr(self, field_name) <= 0:
                raise UserInputError(f"{field_name} must be positive")
        # equality admitted: v_spike == v_slab is the documented ridge-degenerate case
        if self.v_spike > self.v_slab:
            raise UserInputError("v_spike must not exceed v_slab")


@dataclass(frozen=True)
class ExternalSummary:
    """What the adaptive prior borrows: per-covariate externals plus flags.

    ``beta_hat``/``var_hat`` are unconditional posterior moments (averaged
    over both mixture components) so the informative prior density they
    define stays proper whenever pip < 1.  ``delta_hat`` is 1 exactly when
    pip strictly exceeds ``threshold_used``.
    """

    columns: tuple[str, ...]
    beta_hat: np.ndarray
    var_hat: np.ndarray
    pip: np.ndarray
    delta_hat: np.ndarray
    threshold_used: float

    def __post_init__(self):
        k = len(self.columns)
        for field_name in ("beta_hat", "var_hat", "pip", "delta_hat"):
            arr = np.asarray(getattr(self, field_name), dtype=float)
            if arr.shape != (k,):
                raise UserInputError(f"{field_name} must have one entry per covariate")
            object.__setattr__(self, field_name, arr)
        object.__setattr__(self, "delta_hat", self.delta_hat.astype(int))
        if not (0.0 < self.threshold_used < 1.0):
            raise UserInputError("threshold must be in (0, 1)")
        if np.any((self.pip < 0) | (self.pip > 1)):
            raise UserInputError("pip outside [0, 1]")
        if np.any(self.var_hat < 0):
            raise UserInputError("negative posterior variance")
        expected = (self.pip > self.threshold_used).astype(int)
        if not np.array_equal(self.delta_hat, expected):
            raise UserInputError("delta_hat inconsistent with pip > threshold rule")
        if np.any((self.delta_hat == 1) & (self.var_hat <= 0)):
            raise UserInputError("borrowed covariate has zero posterior variance")

    def index(self, name: str) -> int:
        return self.columns.index(name)


def _scan_order(ds: Dataset) -> np.ndarray:
    # sorted-by-name scan order makes results invariant to column order
    return np.argsort(np.array(ds.column_names))


def _diagnostics(beta_draws, prec_draws, names, accept=None) -> ChainDiagnostics:
    ess = {}
    rhat = {}
    for j, name in enumerate(names):
        ess[name] = effective_sample_size(beta_draws[:, j])
        rhat[name] = split_rhat(beta_draws[:, j])
    ess["precision"] = effective_sample_size(prec_draws)
    rhat["precision"] = split_rhat(prec_draws)
    return ChainDiagnostics(ess=ess, rhat=rhat, accept_rate=accept or {})


def _mixture_fit_result(
    method: str,
    ds: Dataset,
    raw: dict,
    order: np.ndarray,
    chain: ChainSpec,
    diagnostics: bool,
    accept_rate: dict | None = None,
) -> FitResult:
    k = ds.k
    inv = np.empty(k, dtype=int)
    inv[order] = np.arange(k)
    beta = raw["beta"][:, inv]
    gamma = raw["gamma"][:, inv]
    tau2 = raw["tau2"][:, inv]
    pips = gamma.mean(axis=0)
    coefficients = [
        CoefficientPosterior.from_draws(name, beta[:, j], pip=float(pips[j]))
        for j, name in enumerate(ds.column_names)
    ]
    intercept = CoefficientPosterior.from_draws("(intercept)", raw["intercept"])
    diag = None
    if diagnostics:
        diag = _diagnostics(beta, raw["precision"], ds.column_names, accept_rate)
    return FitResult(
        method=method,
        coefficients=coefficients,
        intercept=intercept,
        selected=pips > PIP_THRESHOLD_DEFAULT,
        diagnostics=diag,
        aux_draws={
            "gamma": gamma,
            "tau2": tau2,
            "precision": raw["precision"],
            "intercept": raw["intercept"],
        },
    )


def fit_ssp(
    ds: Dataset,
    prior: SspPriorSpec | None = None,
    chain: ChainSpec | None = None,
    *,
    diagnostics: bool = True,
) -> FitResult:
    """Collapsed Gibbs fit of the spike-and-slab model; pip = mean inclusion draw.

    The dataset should already be standardized when it has continuous
    covariates; K > n is fine, shrinkage handles it.
    """
    prior = prior or SspPriorSpec()
    chain = chain or ChainSpec()
    order = _scan_order(ds)
    k = ds.k
    raw = run_spike_slab_chain(
        ds.X[:, order],
        ds.y,
        nonspike_mean=np.zeros(k),
        nonspike_var=np.full(k, prior.v_slab),
        tau_scaled=np.zeros(k, dtype=bool),
        v_spike=prior.v_spike,
        a_pi=prior.a_pi,
        b_pi=prior.b_pi,
        a_sigma=prior.a_sigma,
        b_sigma=prior.b_sigma,
        a_tau=2.0,
        b_tau=2.0,
        chain=chain,
    )
    return _mixture_fit_result("SSP", ds, raw, order, chain, diagnostics)


def summarize_external(fit: FitResult, threshold: float = PIP_THRESHOLD_DEFAULT) -> ExternalSummary:
    """Condense an external fit into borrowable summaries and borrow flags.

    A covariate is flagged for borrowing when its pip strictly exceeds the
    threshold; moments are the unconditional posterior mean and variance.
    """
    if not (0.0 < threshold < 1.0):
        raise UserInputError(f"threshold must be in (0, 1), got {threshold}")
    pips = fit.pips()
    if np.any(np.isnan(pips)):
        raise UserInputError("fit has no inclusion probabilities; run fit_ssp first")
    return ExternalSummary(
        columns=tuple(fit.columns),
        beta_hat=fit.means(),
        var_hat=fit.variances(),
        pip=pips,
        delta_hat=(pips > threshold).astype(int),
        threshold_used=threshold,
    )
