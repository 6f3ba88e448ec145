"""Compiled coordinate-descent kernel for L1-penalised logistic regression.

Solves, on standardised predictors,

    min_{b0, b}  -(1/n) loglik(b0, b) + lam * sum_j |b_j|

by proximal Newton steps: each outer iteration forms the IRLS quadratic
approximation and minimises it with cyclic coordinate descent.
"""
import numpy as np
from numba import njit

WEIGHT_FLOOR = 1e-5


@njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + np.exp(-x))
    e = np.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def lasso_path(Xs, y, lambdas, b0_init, beta_init, tol, max_outer, max_inner):
    """Fit every penalty in ``lambdas`` in turn, warm-starting along the path.

    Returns intercepts (L,), coefficients (L, p) and a converged flag (L,).
    """
    n, p = Xs.shape
    L = lambdas.shape[0]
    b0s = np.empty(L)
    betas = np.empty((L, p))
    ok = np.zeros(L, dtype=np.bool_)

    b0 = b0_init
    beta = beta_init.copy()
    eta = np.empty(n)
    w = np.empty(n)
    r = np.empty(n)

    for li in range(L):
        lam = lambdas[li]
        converged = False
        for _outer in range(max_outer):
            for i in range(n):
                s = b0
                for j in range(p):
                    s += Xs[i, j] * beta[j]
                eta[i] = s
            # working weights and weighted working residual r = w * (z - eta)
            for i in range(n):
                pi = _sigmoid(eta[i])
                wi = pi * (1.0 - pi)
                if wi < WEIGHT_FLOOR:
                    wi = WEIGHT_FLOOR
                w[i] = wi
                r[i] = y[i] - pi
            max_change = 0.0
            for _inner in range(max_inner):
                inner_change = 0.0
                # intercept
                num = 0.0
                den = 0.0
                for i in range(n):
                    num += r[i]
                    den += w[i]
                d = num / den
                if d != 0.0:
                    b0 += d
                    for i in range(n):
                        r[i] -= w[i] * d
                    ad = abs(d)
                    if ad > inner_change:
                        inner_change = ad
                for j in range(p):
                    g = 0.0
                    h = 0.0
                    for i in range(n):
                        g += Xs[i, j] * r[i]
                        h += w[i] * Xs[i, j] * Xs[i, j]
                    g /= n
                    h /= n
                    u = g + h * beta[j]
                    if u > lam:
                        new = (u - lam) / h
                    elif u < -lam:
                        new = (u + lam) / h
                    else:
                        new = 0.0
                    d = new - beta[j]
                    if d != 0.0:
                        beta[j] = new
                        for i in range(n):
                            r[i] -= w[i] * Xs[i, j] * d
                        ad = abs(d)
                        if ad > inner_change:
                            inner_change = ad
                if inner_change > max_change:
                    max_change = inner_change
                if inner_change < tol:
                    break
            if max_change < tol:
                converged = True
                break
        b0s[li] = b0
        for j in range(p):
            betas[li, j] = beta[j]
        ok[li] = converged
    return b0s, betas, ok
