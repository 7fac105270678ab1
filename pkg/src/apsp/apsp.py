"""Adaptive posterior-informed shrinkage prior: construction and internal fit.

Where the external fit flagged a covariate for borrowing (delta = 1), its
non-spike prior component becomes Normal(external mean, tau2 * external
variance) with tau2 given a Gamma(2, 2) prior: prior mean 1 borrows at face
value while supporting both inflation and deflation of the external
dispersion when the datasets disagree.  Covariates with delta = 0 keep the
plain slab, so a prior with every flag off reproduces the spike-and-slab
sampler exactly (same code path, same random stream).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .errors import UserInputError
from .gibbs import run_spike_slab_chain
from .mcmc import ChainSpec, FitResult
from .ssp import (
    ExternalSummary,
    SspPriorSpec,
    _mixture_fit_result,
    _scan_order,
    fit_ssp,
    summarize_external,
)

TAU_HYPER_DEFAULT = (2.0, 2.0)


@dataclass(frozen=True)
class ApspPriorSpec:
    """Per-covariate three-component mixture prior with borrow flags baked in."""

    columns: tuple[str, ...]
    delta: np.ndarray
    informative_mean: np.ndarray
    informative_base_var: np.ndarray
    v_slab: float = 100.0
    v_spike: float = 1e-4
    a_pi: float = 1.0
    b_pi: float = 1.0
    a_sigma: float = 0.01
    b_sigma: float = 0.01
    a_tau: float = 2.0
    b_tau: float = 2.0

    def __post_init__(self):
        k = len(self.columns)
        for field_name in ("delta", "informative_mean", "informative_base_var"):
            arr = np.asarray(getattr(self, field_name), dtype=float)
            if arr.shape != (k,):
                raise UserInputError(f"{field_name} must have one entry per covariate")
            object.__setattr__(self, field_name, arr)
        object.__setattr__(self, "delta", self.delta.astype(int))
        if not np.all(np.isin(self.delta, (0, 1))):
            raise UserInputError("delta entries must be 0 or 1")
        if np.any((self.delta == 1) & (self.informative_base_var <= 0)):
            raise UserInputError("borrowed covariates need a positive base variance")
        if self.v_spike > self.v_slab:
            raise UserInputError("v_spike must not exceed v_slab")
        for field_name in ("v_slab", "v_spike", "a_pi", "b_pi", "a_sigma", "b_sigma",
                           "a_tau", "b_tau"):
            if getattr(self, field_name) <= 0:
                raise UserInputError(f"{field_name} must be positive")

    def index(self, name: str) -> int:
        return self.columns.index(name)


def build_apsp_prior(
    ext: ExternalSummary,
    internal_columns,
    defaults: SspPriorSpec | None = None,
    tau_hyper: tuple[float, float] = TAU_HYPER_DEFAULT,
) -> ApspPriorSpec:
    """Assemble the adaptive prior for the internal covariates, aligned by name.

    Borrow-flagged covariates get the informative component centered at the
    external posterior mean; the rest fall back to the slab.  An internal
    covariate missing from the external summary cannot borrow: it gets
    delta = 0 and a warning.
    """
    defaults = defaults or SspPriorSpec()
    internal_columns = tuple(internal_columns)
    k = len(internal_columns)
    delta = np.zeros(k, dtype=int)
    mean = np.zeros(k)
    base_var = np.full(k, defaults.v_slab)
    for j, name in enumerate(internal_columns):
        if name not in ext.columns:
            warnings.warn(
                f"covariate {name!r} absent from the external summary; "
                "borrowing impossible, slab fallback",
                stacklevel=2,
            )
            continue
        i = ext.index(name)
        if ext.delta_hat[i] == 1:
            if ext.var_hat[i] <= 0:
                raise UserInputError(
                    f"covariate {name!r} is borrow-flagged but has zero external variance"
                )
            delta[j] = 1
            mean[j] = ext.beta_hat[i]
            base_var[j] = ext.var_hat[i]
    return ApspPriorSpec(
        columns=internal_columns,
        delta=delta,
        informative_mean=mean,
        informative_base_var=base_var,
        v_slab=defaults.v_slab,
        v_spike=defaults.v_spike,
        a_pi=defaults.a_pi,
        b_pi=defaults.b_pi,
        a_sigma=defaults.a_sigma,
        b_sigma=defaults.b_sigma,
        a_tau=tau_hyper[0],
        b_tau=tau_hyper[1],
    )


def fit_apsp(
    ds: Dataset,
    prior: ApspPriorSpec,
    chain: ChainSpec | None = None,
    *,
    diagnostics: bool = True,
) -> FitResult:
    """Fit the internal hierarchical model under the adaptive prior.

    The internal dataset must be standardized with the same map as the
    external fit for the borrowed locations to be meaningful.  Returns pips,
    posteriors, borrow flags, tau2 posterior means, and MH acceptance rates.
    """
    chain = chain or ChainSpec()
    missing = [c for c in ds.column_names if c not in prior.columns]
    if missing:
        raise UserInputError(f"prior does not cover internal covariates: {missing}")
    order = _scan_order(ds)
    names_scan = [ds.column_names[j] for j in order]
    pidx = [prior.index(name) for name in names_scan]
    delta_scan = prior.delta[pidx]
    raw = run_spike_slab_chain(
        ds.X[:, order],
        ds.y,
        nonspike_mean=np.where(delta_scan == 1, prior.informative_mean[pidx], 0.0),
        nonspike_var=np.where(delta_scan == 1, prior.informative_base_var[pidx], prior.v_slab),
        tau_scaled=delta_scan == 1,
        v_spike=prior.v_spike,
        a_pi=prior.a_pi,
        b_pi=prior.b_pi,
        a_sigma=prior.a_sigma,
        b_sigma=prior.b_sigma,
        a_tau=prior.a_tau,
        b_tau=prior.b_tau,
        chain=chain,
    )
    accept = {}
    for i, name in enumerate(names_scan):
        if delta_scan[i] == 1:
            accept[f"tau2[{name}]"] = float(raw["tau_accept"][i]) / chain.n_iter
    fit = _mixture_fit_result("APSP", ds, raw, order, chain, diagnostics, accept)
    delta_ds = np.array([prior.delta[prior.index(name)] for name in ds.column_names])
    fit.extras["delta"] = [int(d) for d in delta_ds]
    fit.extras["tau_beta_mean"] = [
        float(fit.aux_draws["tau2"][:, j].mean()) if delta_ds[j] == 1 else None
        for j in range(ds.k)
    ]
    return fit


def two_step_fit(
    ds_ext: Dataset,
    ds_int: Dataset,
    defaults: SspPriorSpec | None = None,
    chain_external: ChainSpec | None = None,
    chain_internal: ChainSpec | None = None,
    *,
    threshold: float = 0.5,
    tau_hyper: tuple[float, float] = TAU_HYPER_DEFAULT,
    diagnostics: bool = False,
) -> tuple[FitResult, ExternalSummary]:
    """External fit, borrow-flag summary, adaptive prior, internal fit.

    Both datasets should carry the same standardization.  Returns the
    internal fit plus the external summary it borrowed from.
    """
    defaults = defaults or SspPriorSpec()
    ext_fit = fit_ssp(ds_ext, defaults, chain_external, diagnostics=diagnostics)
    ext = summarize_external(ext_fit, threshold)
    prior = build_apsp_prior(ext, ds_int.column_names, defaults, tau_hyper)
    fit = fit_apsp(ds_int, prior, chain_internal, diagnostics=diagnostics)
    return fit, ext
