"""Multiple-external-source borrowing with Dirichlet-weighted source selection.

Each coefficient picks one component of a mixture: a noise-scaled slab, a
noise-scaled spike, or one informative normal per external source (absolute
variance, per-source dispersion multiplier).  The component indicator is
categorical with Dirichlet-distributed weights whose concentrations carry
Gamma hyperpriors, so the extent and the source of borrowing are both
data-driven.

Sources are canonicalized by id before sampling, which makes every draw
invariant to the order the caller lists them in; results are keyed by
source id.  A source that does not cover a covariate is simply absent from
that covariate's component set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .data import Dataset
from .errors import ChainDivergenceError, UserInputError
from .mcmc import ChainSpec, CoefficientPosterior, FitResult
from .ssp import SspPriorSpec

SLAB, SPIKE = 0, 1  # fixed leading components; sources follow in canonical order


@dataclass(frozen=True)
class SourcePosterior:
    """Per-covariate posterior mean/variance offered by one external source."""

    source_id: str
    columns: tuple[str, ...]
    beta_hat: np.ndarray
    var_hat: np.ndarray

    def __post_init__(self):
        k = len(self.columns)
        for field_name in ("beta_hat", "var_hat"):
            arr = np.asarray(getattr(self, field_name), dtype=float)
            if arr.shape != (k,):
                raise UserInputError(f"{field_name} must have one entry per covariate")
            object.__setattr__(self, field_name, arr)
        if np.any(self.var_hat <= 0):
            raise UserInputError(
                f"source {self.source_id!r} offers a component with non-positive variance"
            )

    @classmethod
    def from_external_summary(cls, source_id, ext) -> "SourcePosterior":
        return cls(source_id, tuple(ext.columns), ext.beta_hat, ext.var_hat)


@dataclass(frozen=True)
class MixtureWeightState:
    """Component probabilities, concentrations and indicator for one draw."""

    columns: tuple[str, ...]
    component_labels: tuple[tuple[str, ...], ...]  # per covariate
    probabilities: tuple  # per covariate, simplex over its components
    concentration: tuple  # per covariate, positive reals
    indicator: tuple[int, ...]  # per covariate, index into its component list

    def __post_init__(self):
        for j, _ in enumerate(self.columns):
            p = np.asarray(self.probabilities[j], dtype=float)
            a = np.asarray(self.concentration[j], dtype=float)
            labels = self.component_labels[j]
            if len(p) != len(labels) or len(a) != len(labels):
                raise UserInputError("component arrays inconsistent with labels")
            if abs(float(p.sum()) - 1.0) > 1e-10 or np.any(p < 0):
                raise UserInputError("probabilities must form a simplex")
            if np.any(a <= 0):
                raise UserInputError("concentrations must be positive")
            if not (0 <= self.indicator[j] < len(labels)):
                raise UserInputError("indicator out of range")


def fit_apsp_multi(
    ds: Dataset,
    sources: list[SourcePosterior],
    defaults: SspPriorSpec | None = None,
    chain: ChainSpec | None = None,
    *,
    alpha_hyper: tuple[float, float] = (1.0, 1.0),
    zeta_bounds: tuple[float, float] = (0.5, 5.0),
    xi_bounds: tuple[float, float] = (0.5, 5.0),
    alpha0: dict | None = None,
    sample_alpha: bool = True,
) -> FitResult:
    """Gibbs fit of the multi-source mixture; reports posterior source weights.

    ``alpha0`` optionally sets the starting concentrations: a dict keyed by
    component label ("slab", "spike", or a source id) applied to every
    covariate, or a list of such dicts (one per covariate); with
    ``sample_alpha=False`` they stay fixed, which reproduces externally
    chosen borrowing weights.  Returns a FitResult whose pip is the
    posterior probability of escaping the spike, with per-covariate
    component weights in ``extras``.
    """
    if not sources:
        raise UserInputError("need at least one external source")
    ids = [s.source_id for s in sources]
    if len(set(ids)) != len(ids):
        raise UserInputError("duplicate source ids")
    defaults = defaults or SspPriorSpec()
    chain = chain or ChainSpec()
    sources = sorted(sources, key=lambda s: s.source_id)  # canonical order
    m = len(sources)

    X, y = ds.X, ds.y
    n, k = X.shape
    G = X.T @ X
    diag = np.diag(G).copy()
    q = X.T @ y
    csum = X.sum(axis=0)
    y_sum = float(y.sum())
    y_sq = float(y @ y)

    # per-covariate component tables: labels, means, base variances
    labels_all = ["slab", "spike"] + [s.source_id for s in sources]
    comp_ids = []   # per covariate: global component indices
    comp_mu = []
    comp_base = []
    for j, name in enumerate(ds.column_names):
        ids_j = [SLAB, SPIKE]
        mu_j = [0.0, 0.0]
        base_j = [defaults.v_slab, defaults.v_spike]
        for si, src in enumerate(sources):
            if name in src.columns:
                i = src.columns.index(name)
                ids_j.append(2 + si)
                mu_j.append(float(src.beta_hat[i]))
                base_j.append(float(src.var_hat[i]))
        comp_ids.append(ids_j)
        comp_mu.append(mu_j)
        comp_base.append(base_j)

    alpha = []
    for j in range(k):
        if alpha0 is None:
            alpha.append(np.ones(len(comp_ids[j])))
        else:
            table = alpha0[j] if isinstance(alpha0, (list, tuple)) else alpha0
            alpha.append(np.array([float(table[labels_all[c]]) for c in comp_ids[j]]))
        if np.any(alpha[-1] <= 0):
            raise UserInputError("alpha0 concentrations must be positive")
    pi = [a / a.sum() for a in alpha]

    a_alpha, b_alpha = alpha_hyper
    beta = [0.0] * k
    nu = [1] * k  # local index: start every coefficient in the spike
    tau2 = np.ones((k, m))
    zeta = np.full(k, 0.5 * (zeta_bounds[0] + zeta_bounds[1]))
    xi = np.full(k, 0.5 * (xi_bounds[0] + xi_bounds[1]))
    b0 = y_sum / n
    var_y = float(np.var(y, ddof=1)) or 1.0
    phi = 1.0 / var_y
    u = np.zeros(k)  # G @ beta
    rng = chain.rng()

    n_ret = chain.n_retained
    beta_out = np.empty((n_ret, k))
    nu_out = np.empty((n_ret, k), dtype=np.int16)  # global component index
    pi_out = [np.empty((n_ret, len(comp_ids[j]))) for j in range(k)]
    icpt_out = np.empty(n_ret)
    r = 0

    def comp_loglik(j, t, c_local):
        cid = comp_ids[j][c_local]
        mu_c = comp_mu[j][c_local]
        s = diag[j]
        if cid in (SLAB, SPIKE):
            v = comp_base[j][c_local]
            V = 1.0 / (s + 1.0 / v)
            mm = V * t
            return (0.5 * (math.log(V) - math.log(v)) + 0.5 * phi * mm * mm / V,
                    mm, math.sqrt(V / phi))
        v = comp_base[j][c_local] * tau2[j, cid - 2]
        V = 1.0 / (phi * s + 1.0 / v)
        mm = V * (phi * t + mu_c / v)
        lml = 0.5 * (math.log(V) - math.log(v)) + 0.5 * (mm * mm / V - mu_c * mu_c / v)
        return lml, mm, math.sqrt(V)

    for it in range(chain.n_iter):
        z_beta = rng.standard_normal(k)
        u_comp = rng.random(k)
        for j in range(k):
            t = q[j] - b0 * csum[j] - (u[j] - diag[j] * beta[j])
            cj = comp_ids[j]
            logw = np.empty(len(cj))
            stash = []
            for c in range(len(cj)):
                lml, mm, sd = comp_loglik(j, t, c)
                logw[c] = math.log(pi[j][c]) + lml
                stash.append((mm, sd))
            logw -= logw.max()
            w = np.exp(logw)
            w /= w.sum()
            choice = int(np.searchsorted(np.cumsum(w), u_comp[j]))
            choice = min(choice, len(cj) - 1)
            mm, sd = stash[choice]
            bnew = mm + sd * z_beta[j]
            d = bnew - beta[j]
            if d != 0.0:
                u += G[:, j] * d
                beta[j] = bnew
            nu[j] = choice

        cbeta = float(csum @ beta)
        b0 = (y_sum - cbeta) / n + rng.standard_normal() / math.sqrt(n * phi)

        for j in range(k):
            conc = alpha[j].copy()
            conc[nu[j]] += 1.0
            g = rng.gamma(conc)
            pi[j] = np.maximum(g, 1e-300)
            pi[j] /= pi[j].sum()

        if sample_alpha:
            z_a = rng.standard_normal((k, max(len(c) for c in comp_ids)))
            u_a = rng.random((k, max(len(c) for c in comp_ids)))
            for j in range(k):
                aj = alpha[j]
                log_pi = np.log(pi[j])
                for c in range(len(comp_ids[j])):
                    th = math.log(aj[c])
                    th_new = th + chain.mh_step * z_a[j, c]
                    if th_new > 300.0:
                        continue
                    a_old, a_new = aj[c], math.exp(th_new)
                    tot_old = aj.sum()
                    tot_new = tot_old - a_old + a_new

                    def lp(a_c, tot):
                        return (a_alpha * math.log(a_c) - b_alpha * a_c
                                + gammaln(tot) - gammaln(a_c)
                                + (a_c - 1.0) * log_pi[c])

                    if math.log(u_a[j, c]) < lp(a_new, tot_new) - lp(a_old, tot_old):
                        aj[c] = a_new

        # per-source dispersion multipliers
        z_t = rng.standard_normal((k, m))
        u_t = rng.random((k, m))
        for j in range(k):
            cj = comp_ids[j]
            active_cid = cj[nu[j]]
            for c_local in range(2, len(cj)):
                si = cj[c_local] - 2
                th = math.log(tau2[j, si])
                th_new = th + chain.mh_step * z_t[j, si]
                if th_new > 300.0:
                    continue
                lp_old = zeta[j] * th - xi[j] * math.exp(th)
                lp_new = zeta[j] * th_new - xi[j] * math.exp(th_new)
                if active_cid == cj[c_local]:
                    resid2 = (beta[j] - comp_mu[j][c_local]) ** 2 / comp_base[j][c_local]
                    lp_old += -0.5 * th - 0.5 * resid2 * math.exp(-th)
                    lp_new += -0.5 * th_new - 0.5 * resid2 * math.exp(-th_new)
                if math.log(u_t[j, si]) < lp_new - lp_old:
                    tau2[j, si] = math.exp(th_new)

        # (zeta, xi): uniform hyperpriors on a box, random walk inside it
        z_h = rng.standard_normal((k, 2))
        u_h = rng.random((k, 2))
        for j in range(k):
            lt = np.log(tau2[j])
            st = float(tau2[j].sum())
            slt = float(lt.sum())

            def lgam(zv, xv):
                return m * (zv * math.log(xv) - gammaln(zv)) + (zv - 1.0) * slt - xv * st

            znew = zeta[j] + chain.mh_step * z_h[j, 0]
            if zeta_bounds[0] <= znew <= zeta_bounds[1]:
                if math.log(u_h[j, 0]) < lgam(znew, xi[j]) - lgam(zeta[j], xi[j]):
                    zeta[j] = znew
            xnew = xi[j] + chain.mh_step * z_h[j, 1]
            if xi_bounds[0] <= xnew <= xi_bounds[1]:
                if math.log(u_h[j, 1]) < lgam(zeta[j], xnew) - lgam(zeta[j], xi[j]):
                    xi[j] = xnew

        # noise precision: slab/spike coefficients are noise-scaled
        beta_arr = np.asarray(beta)
        rss = y_sq - 2.0 * b0 * y_sum - 2.0 * float(q @ beta_arr) \
            + 2.0 * b0 * cbeta + n * b0 * b0 + float(beta_arr @ u)
        rss = max(rss, 0.0)
        quad = 0.0
        n_scaled = 0
        for j in range(k):
            if comp_ids[j][nu[j]] in (SLAB, SPIKE):
                quad += beta[j] ** 2 / comp_base[j][nu[j]]
                n_scaled += 1
        phi = rng.gamma(0.01 + 0.5 * (n + n_scaled), 1.0 / (0.01 + 0.5 * (rss + quad)))

        if it >= chain.n_burn and (it - chain.n_burn + 1) % chain.thin == 0:
            if not (math.isfinite(math.fsum(beta) + b0 + phi) and phi > 0):
                raise ChainDivergenceError(
                    f"non-finite sampler state at iteration {it}", iteration=it
                )
            beta_out[r] = beta
            for j in range(k):
                nu_out[r, j] = comp_ids[j][nu[j]]
                pi_out[j][r] = pi[j]
            icpt_out[r] = b0
            r += 1

    weights = []
    for j in range(k):
        freq = {}
        for cid in comp_ids[j]:
            freq[labels_all[cid]] = float(np.mean(nu_out[:r, j] == cid))
        weights.append(freq)
    pips = 1.0 - np.array([w["spike"] for w in weights])
    coefficients = [
        CoefficientPosterior.from_draws(name, beta_out[:r, j], pip=float(pips[j]))
        for j, name in enumerate(ds.column_names)
    ]
    return FitResult(
        method="APSP-multi",
        coefficients=coefficients,
        intercept=CoefficientPosterior.from_draws("(intercept)", icpt_out[:r]),
        selected=pips > 0.5,
        extras={"component_weights": weights},
        aux_draws={
            "nu": nu_out[:r],
            "pi": [p[:r] for p in pi_out],
            "component_labels": [tuple(labels_all[c] for c in comp_ids[j]) for j in range(k)],
        },
    )
