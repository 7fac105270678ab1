"""Comparison methods: local shrinkage fits and two-dataset borrowing fits.

Selection rules follow the conventions used throughout: LASSO selects
nonzero coefficients at the cross-validated penalty, the spike-and-slab
baseline thresholds pip at 0.5, and every credible-interval method (HP, PP,
MPP, MAP, CP) selects coefficients whose 95% interval excludes zero.  All
fits include a flat-prior intercept that never enters selection, and every
fit is a deterministic function of (data, config, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg, stats
from scipy.special import gammaln

from .data import Dataset, require_same_schema
from .errors import ChainDivergenceError, UserInputError
from .mcmc import (
    ChainDiagnostics,
    ChainSpec,
    CoefficientPosterior,
    FitResult,
    derive_rng,
    effective_sample_size,
    split_rhat,
)

METHODS = ("SSP", "LASSO", "HP", "PP", "MPP", "MAP", "CP")

_BIG_INTERCEPT_VAR = 1e8


@dataclass(frozen=True)
class BaselineConfig:
    """Method choice plus the settings that method actually uses."""

    method: str
    a0: float = 1.0  # PP
    a0_prior: tuple[float, float] = (1.0, 1.0)  # MPP
    heterogeneity_scale: float = 1.0  # MAP
    nu_prior: tuple[float, float] = (1.0, 1.0)  # CP
    lambda_grid: tuple | None = None  # LASSO
    folds: int | None = None  # LASSO
    base_var: float = 100.0  # diffuse coefficient prior for PP/MPP/CP
    chain: ChainSpec = field(default_factory=ChainSpec)

    def __post_init__(self):
        if self.method not in METHODS and self.method != "APSP":
            raise UserInputError(f"unknown method {self.method!r}; choose from {METHODS}")
        if not (0.0 <= self.a0 <= 1.0):
            raise UserInputError(f"a0 must be in [0, 1], got {self.a0}")
        if min(self.a0_prior) <= 0 or min(self.nu_prior) <= 0:
            raise UserInputError("prior hyperparameters must be positive")
        if self.heterogeneity_scale <= 0 or self.base_var <= 0:
            raise UserInputError("scales must be positive")


def _ci_fit_result(method, ds, beta_draws, icpt_draws, diagnostics, accept=None,
                   extras=None, aux=None) -> FitResult:
    coefficients = [
        CoefficientPosterior.from_draws(name, beta_draws[:, j])
        for j, name in enumerate(ds.column_names)
    ]
    selected = np.array([c.excludes_zero() for c in coefficients])
    diag = None
    if diagnostics:
        ess = {}
        rhat = {}
        for j, name in enumerate(ds.column_names):
            ess[name] = effective_sample_size(beta_draws[:, j])
            rhat[name] = split_rhat(beta_draws[:, j])
        diag = ChainDiagnostics(ess=ess, rhat=rhat, accept_rate=accept or {})
    return FitResult(
        method=method,
        coefficients=coefficients,
        intercept=CoefficientPosterior.from_draws("(intercept)", icpt_draws),
        selected=selected,
        diagnostics=diag,
        extras=extras or {},
        aux_draws=aux or {},
    )


def _check_finite(arrays, it):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ChainDivergenceError(f"non-finite sampler state at iteration {it}", iteration=it)


def _draw_mvn(rng, prec, lin):
    """Draw from N(prec^-1 lin, prec^-1) via the Cholesky factor of prec."""
    chol = linalg.cho_factor(prec, lower=True)
    mean = linalg.cho_solve(chol, lin)
    z = rng.standard_normal(len(lin))
    return mean + linalg.solve_triangular(chol[0].T, z, lower=False)


# ---------------------------------------------------------------------------
# LASSO
# ---------------------------------------------------------------------------

def lasso_path(X, y, lambdas, tol=1e-7, max_sweeps=2000, saturation_stop=True):
    """Coordinate descent on centered data over a descending penalty grid.

    Objective (1/(2n)) ||yc - Xc b||^2 + lam * ||b||_1; returns B (L, K).
    Warm starts down the grid; each penalty alternates full sweeps with
    sweeps over the current active set until the largest update falls below
    tol.  Once the active set reaches the data's capacity (n - 1 nonzeros)
    the remaining smaller penalties inherit the saturated solution: past
    that point the problem is (near-)unpenalized and ill-conditioned, and
    cross-validation never favors it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    gram = [row.tolist() for row in (xc.T @ xc / n)]
    q = (xc.T @ yc / n).tolist()
    gdiag = [gram[j][j] for j in range(k)]
    lambdas = np.asarray(lambdas, dtype=float)
    B = np.zeros((len(lambdas), k))
    beta = [0.0] * k
    capacity = max(n - 1, 1)

    def sweep(indices, lam):
        delta = 0.0
        for j in indices:
            gj = gdiag[j]
            if gj <= 0.0:
                continue
            grow = gram[j]
            dot = 0.0
            for i in range(k):
                dot += grow[i] * beta[i]
            rho = q[j] - dot + gj * beta[j]
            new = math.copysign(max(abs(rho) - lam, 0.0), rho) / gj
            step = abs(new - beta[j])
            if step > delta:
                delta = step
            beta[j] = new
        return delta

    everything = range(k)
    for li, lam in enumerate(lambdas):
        it = 0
        while it < max_sweeps:
            it += 1
            if sweep(everything, lam) < tol:
                break
            active = [j for j in range(k) if beta[j] != 0.0]
            while it < max_sweeps:
                it += 1
                if sweep(active, lam) < tol:
                    break
        B[li] = beta
        if saturation_stop and sum(b != 0.0 for b in beta) >= min(capacity, k):
            B[li + 1 :] = beta
            break
    return B


def default_lambda_grid(X, y, n_points=50, ratio=1e-3):
    """Log-spaced grid from lam_max = max_k |xc_k' yc| / n downward."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    lam_max = float(np.max(np.abs(xc.T @ yc)) / len(y))
    if lam_max <= 0.0:
        return None  # constant outcome: empty model fallback
    return np.geomspace(lam_max, lam_max * ratio, n_points)


def fit_lasso(ds: Dataset, lambda_grid=None, folds: int | None = None,
              seed: int = 0) -> FitResult:
    """Cross-validated lasso; selection = nonzero coefficients at the chosen penalty.

    Leave-one-out folds when n <= 15, else 5-fold; the penalty is picked by
    the one-standard-error rule (largest penalty within one SE of the
    minimum CV error).  A degenerate problem (constant outcome) falls back
    to the empty model.
    """
    X, y = ds.X, ds.y
    n, k = X.shape
    if lambda_grid is None:
        lambda_grid = default_lambda_grid(X, y)
        if lambda_grid is None:
            return _lasso_result(ds, np.zeros(k), float(y.mean()), float("inf"))
    lambdas = np.sort(np.asarray(lambda_grid, dtype=float))[::-1]
    if folds is None:
        folds = n if n <= 15 else 5
    folds = min(folds, n)

    rng = derive_rng(seed, "lasso-cv")
    perm = rng.permutation(n)
    fold_of = np.empty(n, dtype=int)
    fold_of[perm] = np.arange(n) % folds

    fold_mse = np.full((folds, len(lambdas)), np.nan)
    for f in range(folds):
        test = fold_of == f
        train = ~test
        y_tr = y[train]
        if train.sum() < 2 or float(np.var(y_tr)) == 0.0:
            # degenerate fold: score the empty model at every penalty
            mu = float(y_tr.mean()) if train.sum() else 0.0
            fold_mse[f] = float(np.mean((y[test] - mu) ** 2))
            continue
        X_tr = X[train]
        B = lasso_path(X_tr, y_tr, lambdas, tol=1e-5, max_sweeps=300)
        icpt = y_tr.mean() - X_tr.mean(axis=0) @ B.T  # (L,)
        pred = X[test] @ B.T + icpt  # (n_test, L)
        fold_mse[f] = np.mean((y[test, None] - pred) ** 2, axis=0)
    mse = fold_mse.mean(axis=0)
    se = fold_mse.std(axis=0, ddof=1) / math.sqrt(folds) if folds > 1 else np.zeros_like(mse)
    i_min = int(np.argmin(mse))
    within = np.flatnonzero(mse <= mse[i_min] + se[i_min])
    chosen = int(within[0])  # grid is descending: first index = largest penalty

    B = lasso_path(X, y, lambdas)
    beta = B[chosen]
    icpt = float(y.mean() - X.mean(axis=0) @ beta)
    return _lasso_result(ds, beta, icpt, float(lambdas[chosen]))


def _lasso_result(ds, beta, icpt, lam) -> FitResult:
    coefficients = [
        CoefficientPosterior(name, float(beta[j]), 0.0, (float(beta[j]), float(beta[j])))
        for j, name in enumerate(ds.column_names)
    ]
    return FitResult(
        method="LASSO",
        coefficients=coefficients,
        intercept=CoefficientPosterior("(intercept)", icpt, 0.0, (icpt, icpt)),
        selected=beta != 0.0,
        extras={"lambda": [lam] * ds.k},
    )


# ---------------------------------------------------------------------------
# Horseshoe
# ---------------------------------------------------------------------------

def fit_horseshoe(ds: Dataset, chain: ChainSpec | None = None, *,
                  a_sigma: float = 0.01, b_sigma: float = 0.01,
                  diagnostics: bool = True) -> FitResult:
    """Gibbs sampler via the inverse-gamma auxiliary form of half-Cauchy scales.

    beta_k ~ N(0, s2 tau2 lam2_k) with lam_k, tau half-Cauchy(0, 1); every
    conditional is conjugate.  Selection: 95% interval excluding zero.
    """
    chain = chain or ChainSpec()
    rng = chain.rng()
    X, y = ds.X, ds.y
    n, k = X.shape
    xtx = X.T @ X

    beta = np.zeros(k)
    lam2 = np.ones(k)
    nu = np.ones(k)
    tau2 = 1.0
    xi = 1.0
    s2 = float(np.var(y, ddof=1)) or 1.0
    b0 = float(y.mean())

    n_ret = chain.n_retained
    beta_out = np.empty((n_ret, k))
    icpt_out = np.empty(n_ret)
    r = 0
    for it in range(chain.n_iter):
        scales = lam2 * tau2
        prec = xtx / s2 + np.diag(1.0 / (scales * s2))
        beta = _draw_mvn(rng, prec, X.T @ (y - b0) / s2)
        resid = y - X @ beta
        b0 = float(resid.mean()) + rng.standard_normal() * math.sqrt(s2 / n)
        resid = resid - b0
        lam2 = 1.0 / rng.gamma(1.0, 1.0 / (1.0 / nu + beta**2 / (2.0 * tau2 * s2)))
        nu = 1.0 / rng.gamma(1.0, 1.0 / (1.0 + 1.0 / lam2))
        tau2 = 1.0 / rng.gamma(
            (k + 1) / 2.0, 1.0 / (1.0 / xi + float(np.sum(beta**2 / lam2)) / (2.0 * s2))
        )
        xi = 1.0 / rng.gamma(1.0, 1.0 / (1.0 + 1.0 / tau2))
        rss = float(resid @ resid)
        quad = float(np.sum(beta**2 / (lam2 * tau2)))
        s2 = 1.0 / rng.gamma(a_sigma + (n + k) / 2.0, 1.0 / (b_sigma + 0.5 * (rss + quad)))
        if it >= chain.n_burn and (it - chain.n_burn + 1) % chain.thin == 0:
            _check_finite((beta, (b0, s2, tau2)), it)
            beta_out[r] = beta
            icpt_out[r] = b0
            r += 1
    return _ci_fit_result("HP", ds, beta_out[:r], icpt_out[:r], diagnostics)


# ---------------------------------------------------------------------------
# Power prior (closed form) and its normalized variant
# ---------------------------------------------------------------------------

def _nig_stats(blocks, k, base_var, a_sigma, b_sigma):
    """Posterior of the conjugate base prior under likelihood-power weights.

    blocks: iterable of (X, y, weight).  Returns (M, m, a_n, b_n) where
    beta | s2 ~ N(m, s2 M^-1) and the noise precision is Gamma(a_n, b_n).
    """
    p = k + 1
    v0inv = np.full(p, 1.0 / base_var)
    v0inv[0] = 1.0 / _BIG_INTERCEPT_VAR
    M = np.diag(v0inv)
    rhs = np.zeros(p)
    ss = 0.0
    n_eff = 0.0
    for X, y, w in blocks:
        if w == 0.0:
            continue
        Xa = np.column_stack([np.ones(len(y)), X])
        M = M + w * (Xa.T @ Xa)
        rhs = rhs + w * (Xa.T @ y)
        ss += w * float(y @ y)
        n_eff += w * len(y)
    m = np.linalg.solve(M, rhs)
    a_n = a_sigma + 0.5 * n_eff
    b_n = b_sigma + 0.5 * (ss - float(m @ M @ m))
    return M, m, a_n, b_n, n_eff, float(np.sum(np.log(v0inv)))


def _nig_log_marginal(blocks, k, base_var, a_sigma, b_sigma):
    M, _, a_n, b_n, n_eff, logdet_v0inv = _nig_stats(blocks, k, base_var, a_sigma, b_sigma)
    _, logdet_m = np.linalg.slogdet(M)
    return (
        -0.5 * n_eff * math.log(2.0 * math.pi)
        + 0.5 * (logdet_v0inv - logdet_m)
        + a_sigma * math.log(b_sigma)
        - gammaln(a_sigma)
        + gammaln(a_n)
        - a_n * math.log(b_n)
    )


def fit_power_prior(ds_int: Dataset, ds_ext: Dataset, a0: float = 1.0, *,
                    base_var: float = 100.0, a_sigma: float = 0.01,
                    b_sigma: float = 0.01) -> FitResult:
    """Exact posterior with the external likelihood raised to a0 in [0, 1].

    a0 = 0 ignores the external data, a0 = 1 pools.  Marginals are Student-t
    so moments and intervals are exact; no draws are retained.
    """
    if not (0.0 <= a0 <= 1.0):
        raise UserInputError(f"a0 must be in [0, 1], got {a0}")
    require_same_schema(ds_int, ds_ext)
    M, m, a_n, b_n, _, _ = _nig_stats(
        [(ds_int.X, ds_int.y, 1.0), (ds_ext.X, ds_ext.y, a0)],
        ds_int.k, base_var, a_sigma, b_sigma,
    )
    minv_diag = np.diag(np.linalg.inv(M))
    scale = np.sqrt(b_n / a_n * minv_diag)
    var = b_n / (a_n - 1.0) * minv_diag
    tcrit = float(stats.t.ppf(0.975, 2.0 * a_n))
    coefficients = []
    for j, name in enumerate(ds_int.column_names):
        i = j + 1
        coefficients.append(CoefficientPosterior(
            name, float(m[i]), float(var[i]),
            (float(m[i] - tcrit * scale[i]), float(m[i] + tcrit * scale[i])),
        ))
    icpt = CoefficientPosterior(
        "(intercept)", float(m[0]), float(var[0]),
        (float(m[0] - tcrit * scale[0]), float(m[0] + tcrit * scale[0])),
    )
    selected = np.array([c.excludes_zero() for c in coefficients])
    return FitResult("PP", coefficients, intercept=icpt, selected=selected,
                     extras={"a0": [a0] * ds_int.k})


def fit_modified_power_prior(ds_int: Dataset, ds_ext: Dataset,
                             a0_prior: tuple[float, float] = (1.0, 1.0),
                             chain: ChainSpec | None = None, *,
                             a0_fixed: float | None = None,
                             base_var: float = 100.0, a_sigma: float = 0.01,
                             b_sigma: float = 0.01,
                             diagnostics: bool = True) -> FitResult:
    """Power prior with a Beta-distributed discount, normalized in closed form.

    The discount's marginal posterior uses the exact normalizing constant of
    the powered external likelihood under the conjugate base prior; a0 moves
    by logit-scale random walk and (beta, s2) are drawn exactly given a0.
    Passing ``a0_fixed`` degenerates to the plain power prior at that value.
    """
    if a0_fixed is not None:
        fit = fit_power_prior(ds_int, ds_ext, a0_fixed, base_var=base_var,
                              a_sigma=a_sigma, b_sigma=b_sigma)
        fit.method = "MPP"
        return fit
    require_same_schema(ds_int, ds_ext)
    chain = chain or ChainSpec()
    rng = chain.rng()
    p, q = a0_prior
    k = ds_int.k

    def log_post(a0):
        lp = (p - 1.0) * math.log(a0) + (q - 1.0) * math.log1p(-a0)
        lp += math.log(a0) + math.log1p(-a0)  # logit-scale Jacobian
        lp += _nig_log_marginal(
            [(ds_int.X, ds_int.y, 1.0), (ds_ext.X, ds_ext.y, a0)],
            k, base_var, a_sigma, b_sigma,
        )
        lp -= _nig_log_marginal(
            [(ds_ext.X, ds_ext.y, a0)], k, base_var, a_sigma, b_sigma,
        )
        return lp

    eta = 0.0  # a0 = 0.5
    lp = log_post(_sigmoid(eta))
    accept = 0
    n_ret = chain.n_retained
    a0_out = np.empty(n_ret)
    beta_out = np.empty((n_ret, k))
    icpt_out = np.empty(n_ret)
    r = 0
    for it in range(chain.n_iter):
        eta_new = eta + chain.mh_step * rng.standard_normal()
        lp_new = log_post(_sigmoid(eta_new))
        if math.log(rng.random()) < lp_new - lp:
            eta, lp = eta_new, lp_new
            accept += 1
        if it >= chain.n_burn and (it - chain.n_burn + 1) % chain.thin == 0:
            a0 = _sigmoid(eta)
            M, m, a_n, b_n, _, _ = _nig_stats(
                [(ds_int.X, ds_int.y, 1.0), (ds_ext.X, ds_ext.y, a0)],
                k, base_var, a_sigma, b_sigma,
            )
            s2 = 1.0 / rng.gamma(a_n, 1.0 / b_n)
            chol = linalg.cho_factor(M, lower=True)
            z = rng.standard_normal(k + 1)
            draw = m + math.sqrt(s2) * linalg.solve_triangular(chol[0].T, z, lower=False)
            _check_finite((draw,), it)
            a0_out[r] = a0
            beta_out[r] = draw[1:]
            icpt_out[r] = draw[0]
            r += 1
    fit = _ci_fit_result(
        "MPP", ds_int, beta_out[:r], icpt_out[:r], diagnostics,
        accept={"a0": accept / chain.n_iter},
        extras={"a0_mean": [float(a0_out[:r].mean())] * k},
        aux={"a0": a0_out[:r]},
    )
    return fit


def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


# ---------------------------------------------------------------------------
# Meta-analytic predictive (joint hierarchical form)
# ---------------------------------------------------------------------------

def fit_map(ds_int: Dataset, ds_ext: Dataset, heterogeneity_scale: float = 1.0,
            chain: ChainSpec | None = None, *, mu_var: float = 100.0,
            a_sigma: float = 0.01, b_sigma: float = 0.01,
            diagnostics: bool = True) -> FitResult:
    """Joint hierarchical model: per-study coefficients exchange around a mean.

    beta_k(study) ~ N(mu_k, psi_k^2) with psi_k half-normal on the given
    scale; with one external study the joint ("meta-analytic combined") form
    is the identified way to realize the predictive prior.  The shared means
    are integrated out, leaving a bivariate coefficient prior per covariate
    (variance psi^2 + mu_var, covariance mu_var), and both studies'
    coefficients are drawn as one Gaussian block: the sampler stays mobile
    even when psi is pinned near zero.  Inference is on the internal study's
    coefficients; selection by 95% interval.
    """
    require_same_schema(ds_int, ds_ext)
    if heterogeneity_scale <= 0:
        raise UserInputError("heterogeneity scale must be positive")
    chain = chain or ChainSpec()
    rng = chain.rng()
    k = ds_int.k
    Xe, ye = ds_ext.X, ds_ext.y
    Xi, yi = ds_int.X, ds_int.y
    xtx_e = Xe.T @ Xe
    xtx_i = Xi.T @ Xi

    beta2 = np.zeros(2 * k)  # external block then internal block
    log_psi = np.zeros(k)
    b0 = [float(ye.mean()), float(yi.mean())]
    phi = [1.0 / (float(np.var(ye, ddof=1)) or 1.0),
           1.0 / (float(np.var(yi, ddof=1)) or 1.0)]

    n_ret = chain.n_retained
    beta_out = np.empty((n_ret, k))
    icpt_out = np.empty(n_ret)
    psi_out = np.empty((n_ret, k))
    accept = 0
    r = 0
    for it in range(chain.n_iter):
        psi2 = np.exp(2.0 * log_psi)
        den = psi2 * (psi2 + 2.0 * mu_var)
        d_same = (psi2 + mu_var) / den
        d_cross = -mu_var / den
        prec = np.zeros((2 * k, 2 * k))
        prec[:k, :k] = phi[0] * xtx_e + np.diag(d_same)
        prec[k:, k:] = phi[1] * xtx_i + np.diag(d_same)
        prec[:k, k:] = np.diag(d_cross)
        prec[k:, :k] = np.diag(d_cross)
        lin = np.concatenate([
            phi[0] * (Xe.T @ (ye - b0[0])),
            phi[1] * (Xi.T @ (yi - b0[1])),
        ])
        beta2 = _draw_mvn(rng, prec, lin)
        be, bi = beta2[:k], beta2[k:]

        # psi_k: log-scale random walk against half-normal prior, with the
        # shared mean integrated out of the pair likelihood
        z = rng.standard_normal(k)
        uacc = rng.random(k)
        ssum = be**2 + bi**2
        sprod = be * bi
        for j in range(k):
            theta = log_psi[j]
            theta_new = theta + chain.mh_step * z[j]
            if theta_new > 300.0:
                continue

            def pair_lp(th):
                p2 = math.exp(2.0 * th)
                dn = p2 * (p2 + 2.0 * mu_var)
                quad = ((p2 + mu_var) * ssum[j] - 2.0 * mu_var * sprod[j]) / dn
                return (th - p2 / (2.0 * heterogeneity_scale**2)
                        - 0.5 * math.log(dn) - 0.5 * quad)

            if math.log(uacc[j]) < pair_lp(theta_new) - pair_lp(theta):
                log_psi[j] = theta_new
                accept += 1
        for s, (X, y, beta) in enumerate(((Xe, ye, be), (Xi, yi, bi))):
            resid = y - X @ beta
            n_s = len(y)
            b0[s] = float(resid.mean()) + rng.standard_normal() / math.sqrt(n_s * phi[s])
            rss = float(np.sum((resid - b0[s]) ** 2))
            phi[s] = rng.gamma(a_sigma + 0.5 * n_s, 1.0 / (b_sigma + 0.5 * rss))
        if it >= chain.n_burn and (it - chain.n_burn + 1) % chain.thin == 0:
            _check_finite((beta2, (b0[1], phi[1])), it)
            beta_out[r] = bi
            icpt_out[r] = b0[1]
            psi_out[r] = np.exp(log_psi)
            r += 1
    return _ci_fit_result(
        "MAP", ds_int, beta_out[:r], icpt_out[:r], diagnostics,
        accept={"psi": accept / (chain.n_iter * k)},
        extras={"psi_mean": [float(v) for v in psi_out[:r].mean(axis=0)]},
    )


# ---------------------------------------------------------------------------
# Commensurate prior
# ---------------------------------------------------------------------------

def fit_commensurate(ds_int: Dataset, ds_ext: Dataset,
                     nu_prior: tuple[float, float] = (1.0, 1.0),
                     chain: ChainSpec | None = None, *,
                     nu_fixed: float | None = None, base_var: float = 100.0,
                     a_sigma: float = 0.01, b_sigma: float = 0.01,
                     diagnostics: bool = True) -> FitResult:
    """Internal coefficients centered on external ones with learned precision.

    beta_k(int) ~ N(beta_k(ext), 1 / nu_k); the commensurability precisions
    nu_k get conjugate Gamma updates (or stay fixed when ``nu_fixed`` is
    given, the degenerate checks).  Both studies' coefficients are drawn as
    one Gaussian block so huge precisions (hard ties) mix fine.  Selection
    by 95% interval on the internal coefficients.
    """
    require_same_schema(ds_int, ds_ext)
    chain = chain or ChainSpec()
    rng = chain.rng()
    k = ds_int.k
    a_nu, b_nu = nu_prior
    if nu_fixed is not None and nu_fixed <= 0:
        raise UserInputError("nu_fixed must be positive")
    Xe, ye = ds_ext.X, ds_ext.y
    Xi, yi = ds_int.X, ds_int.y
    xtx_e = Xe.T @ Xe
    xtx_i = Xi.T @ Xi

    nu = np.full(k, nu_fixed if nu_fixed is not None else a_nu / b_nu)
    b0 = [float(ye.mean()), float(yi.mean())]
    phi = [1.0 / (float(np.var(ye, ddof=1)) or 1.0),
           1.0 / (float(np.var(yi, ddof=1)) or 1.0)]

    n_ret = chain.n_retained
    beta_out = np.empty((n_ret, k))
    beta_ext_out = np.empty((n_ret, k))
    icpt_out = np.empty(n_ret)
    nu_out = np.empty((n_ret, k))
    r = 0
    for it in range(chain.n_iter):
        prec = np.zeros((2 * k, 2 * k))
        prec[:k, :k] = phi[0] * xtx_e + np.diag(nu + 1.0 / base_var)
        prec[k:, k:] = phi[1] * xtx_i + np.diag(nu)
        prec[:k, k:] = np.diag(-nu)
        prec[k:, :k] = np.diag(-nu)
        lin = np.concatenate([
            phi[0] * (Xe.T @ (ye - b0[0])),
            phi[1] * (Xi.T @ (yi - b0[1])),
        ])
        beta2 = _draw_mvn(rng, prec, lin)
        beta_e, beta_i = beta2[:k], beta2[k:]
        if nu_fixed is None:
            gap2 = (beta_i - beta_e) ** 2
            nu = rng.gamma(a_nu + 0.5, 1.0 / (b_nu + 0.5 * gap2))
        for s, (X, y, beta) in enumerate(((Xe, ye, beta_e), (Xi, yi, beta_i))):
            resid = y - X @ beta
            n_s = len(y)
            b0[s] = float(resid.mean()) + rng.standard_normal() / math.sqrt(n_s * phi[s])
            rss = float(np.sum((resid - b0[s]) ** 2))
            phi[s] = rng.gamma(a_sigma + 0.5 * n_s, 1.0 / (b_sigma + 0.5 * rss))
        if it >= chain.n_burn and (it - chain.n_burn + 1) % chain.thin == 0:
            _check_finite((beta2, (b0[1], phi[1])), it)
            beta_out[r] = beta_i
            beta_ext_out[r] = beta_e
            icpt_out[r] = b0[1]
            nu_out[r] = nu
            r += 1
    return _ci_fit_result(
        "CP", ds_int, beta_out[:r], icpt_out[:r], diagnostics,
        extras={"nu_mean": [float(v) for v in nu_out[:r].mean(axis=0)]},
        aux={"beta_external": beta_ext_out[:r]},
    )
