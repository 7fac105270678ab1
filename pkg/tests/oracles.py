"""Independent numerical oracles used by the test suite.

Everything here works from first principles (closed forms or dense grids)
and never calls into the samplers it checks.
"""

import numpy as np
from scipy.special import gammaln, logsumexp


def nig_posterior(X, y, prior_var, a_sigma=0.01, b_sigma=0.01,
                  intercept_var=1e8):
    """Exact normal-inverse-gamma posterior with an intercept column.

    Model: y ~ N(b0 + X beta, s2), (b0, beta) | s2 ~ N(0, s2 * V0) with
    V0 = diag(intercept_var, prior_var...), 1/s2 ~ Gamma(a, b).
    Returns (mean, var) of the K+1 coefficients (intercept first) and
    (a_n, b_n).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, k = X.shape
    Xa = np.column_stack([np.ones(n), X])
    prior_var = np.broadcast_to(np.asarray(prior_var, dtype=float), (k,))
    v0inv = np.concatenate([[1.0 / intercept_var], 1.0 / prior_var])
    M = np.diag(v0inv) + Xa.T @ Xa
    m = np.linalg.solve(M, Xa.T @ y)
    a_n = a_sigma + 0.5 * n
    b_n = b_sigma + 0.5 * (y @ y - m @ M @ m)
    var = b_n / (a_n - 1.0) * np.diag(np.linalg.inv(M))
    return m, var, a_n, b_n


def _centered_moments(x, y):
    xc = x - x.mean()
    yc = y - y.mean()
    return float(xc @ xc), float(xc @ yc), float(yc @ yc)


def grid_log_marginal_single(x, y, v, a_sigma=0.01, b_sigma=0.01,
                             n_beta=2001, n_phi=1501, w_half=10.0,
                             log_phi_lo=np.log(1e-5), log_phi_hi=np.log(1e5)):
    """Dense-grid marginal likelihood of a single-covariate mixture component.

    Model: y_i ~ N(b0 + x_i beta, 1/phi), beta ~ N(0, v/phi), b0 flat,
    phi ~ Gamma(a, b).  The flat intercept integrates out exactly; beta is
    integrated on a standardized grid (beta = w * sqrt(v/phi)) and phi on a
    log grid, both by direct summation.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    sxx, sxy, syy = _centered_moments(x, y)
    w = np.linspace(-w_half, w_half, n_beta)
    lphi = np.linspace(log_phi_lo, log_phi_hi, n_phi)
    phi = np.exp(lphi)
    beta = w[:, None] * np.sqrt(v / phi)[None, :]
    quad = syy - 2.0 * beta * sxy + beta**2 * sxx
    log_integrand = (
        -0.5 * np.log(2.0 * np.pi) - 0.5 * w[:, None] ** 2 * np.ones_like(phi)[None, :]
        + a_sigma * np.log(b_sigma) - gammaln(a_sigma)
        + (a_sigma - 1.0) * lphi[None, :] - b_sigma * phi[None, :]
        + 0.5 * (n - 1) * (lphi[None, :] - np.log(2.0 * np.pi)) - 0.5 * np.log(n)
        - 0.5 * quad * phi[None, :]
        + lphi[None, :]  # Jacobian of the log-phi grid
    )
    dw = w[1] - w[0]
    dl = lphi[1] - lphi[0]
    return float(logsumexp(log_integrand) + np.log(dw * dl))


def grid_pip_single(x, y, v_slab, v_spike, a_sigma=0.01, b_sigma=0.01,
                    prior_inclusion=0.5):
    """PIP for the K=1 spike-and-slab model by dense numerical integration."""
    lm_slab = grid_log_marginal_single(x, y, v_slab, a_sigma, b_sigma)
    lm_spike = grid_log_marginal_single(x, y, v_spike, a_sigma, b_sigma)
    log_odds = np.log(prior_inclusion / (1 - prior_inclusion)) + lm_slab - lm_spike
    return float(1.0 / (1.0 + np.exp(-log_odds)))


def grid_horseshoe_mean_single(x, y, a_sigma=0.01, b_sigma=0.01, n_grid=121):
    """E[beta | y] for the K=1 horseshoe model by a dense (lam, tau, sigma) grid.

    Scales use half-Cauchy(0,1) priors directly (no auxiliary variables),
    the flat intercept integrates out exactly, and beta is Gaussian given
    the scales, so only the three scale parameters need a grid.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    sxx, sxy, syy = _centered_moments(x, y)
    grid = np.linspace(np.log(1e-4), np.log(1e4), n_grid)
    lam = np.exp(grid)[:, None, None]
    tau = np.exp(grid)[None, :, None]
    s2 = np.exp(2.0 * grid)[None, None, :]  # sigma^2 on a log-sigma grid
    prior_v = lam**2 * tau**2 * s2
    prec = sxx / s2 + 1.0 / prior_v
    mean_beta = (sxy / s2) / prec
    # marginal over (beta, intercept) given the scales
    log_m = (
        -0.5 * (n - 1) * np.log(2.0 * np.pi * s2) - 0.5 * np.log(n)
        - 0.5 * np.log(prior_v * prec)
        - 0.5 * syy / s2 + 0.5 * mean_beta**2 * prec
    )
    # half-Cauchy densities and Jacobians of the log grids
    log_prior = (
        np.log(2.0 / np.pi) - np.log1p(lam**2) + np.log(lam)
        + np.log(2.0 / np.pi) - np.log1p(tau**2) + np.log(tau)
        + a_sigma * np.log(b_sigma) - gammaln(a_sigma)
        - (a_sigma + 1.0) * np.log(s2) - b_sigma / s2 + np.log(s2)
    )
    log_w = log_m + log_prior
    log_w -= log_w.max()
    w = np.exp(log_w)
    return float(np.sum(w * mean_beta) / np.sum(w))


def weighted_least_squares(blocks, prior_var, intercept_var=1e8):
    """Posterior mean of the likelihood-power-weighted conjugate model."""
    first_X = np.asarray(blocks[0][0], dtype=float)
    k = first_X.shape[1]
    v0inv = np.concatenate([[1.0 / intercept_var], np.full(k, 1.0 / prior_var)])
    M = np.diag(v0inv)
    rhs = np.zeros(k + 1)
    for X, y, w in blocks:
        Xa = np.column_stack([np.ones(len(y)), np.asarray(X, dtype=float)])
        M = M + w * Xa.T @ Xa
        rhs = rhs + w * Xa.T @ np.asarray(y, dtype=float)
    return np.linalg.solve(M, rhs)
