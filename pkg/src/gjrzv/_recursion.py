"""Compiled GJR-GARCH(1,1) recursions.

``loglik_grad`` fuses the variance recursion, the standardized log-density
and all derivatives into one pass; the shape-dependent constants are
prepared in Python (see ``distributions.kernel_constants``).
"""

import math

import numpy as np
from numba import njit

NORMAL, STUDENT_T, GED, GT = 0, 1, 2, 3

_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


@njit(cache=True)
def gjr_filter(y, omega, alpha, phi, beta, h1, dh1, with_grad):
    """
    Run h_t = omega + (alpha + phi * I[y_{t-1} <= 0]) * y_{t-1}**2 + beta * h_{t-1}.

    ``dh[:, k]`` holds dh_t / d(mu, omega, alpha, phi, beta)[k] where y = x - mu,
    seeded from ``dh1``; it is left at zero when ``with_grad`` is false.
    """
    n = y.shape[0]
    h = np.empty(n)
    dh = np.zeros((n, 5))
    h[0] = h1
    if with_grad:
        for k in range(5):
            dh[0, k] = dh1[k]
    for t in range(1, n):
        yp = y[t - 1]
        ind = 1.0 if yp <= 0.0 else 0.0
        a = alpha + phi * ind
        y2 = yp * yp
        h[t] = omega + a * y2 + beta * h[t - 1]
        if with_grad:
            dh[t, 0] = -2.0 * a * yp + beta * dh[t - 1, 0]
            dh[t, 1] = 1.0 + beta * dh[t - 1, 1]
            dh[t, 2] = y2 + beta * dh[t - 1, 2]
            dh[t, 3] = ind * y2 + beta * dh[t - 1, 3]
            dh[t, 4] = h[t - 1] + beta * dh[t - 1, 4]
    return h, dh


@njit(cache=True)
def gjr_filter_many(x, params, h1):
    """Variance paths for a batch of natural-space rows ``(mu, omega, alpha, phi, beta)``."""
    m = params.shape[0]
    n = x.shape[0]
    out = np.empty((m, n))
    for i in range(m):
        mu = params[i, 0]
        omega = params[i, 1]
        alpha = params[i, 2]
        phi = params[i, 3]
        beta = params[i, 4]
        out[i, 0] = h1[i]
        for t in range(1, n):
            yp = x[t - 1] - mu
            a = alpha + (phi if yp <= 0.0 else 0.0)
            out[i, t] = omega + a * yp * yp + beta * out[i, t - 1]
    return out


@njit(cache=True)
def _logf(e, kind, c):
    """Standardized log-density, d/de and d/dshape (up to two shapes)."""
    ae = abs(e)
    if kind == NORMAL:
        return -_HALF_LOG_2PI - 0.5 * e * e, -e, 0.0, 0.0
    if kind == STUDENT_T:
        nu, m, const, dnu_const = c[0], c[1], c[2], c[3]
        e2 = e * e
        ld = const - 0.5 * (nu + 1.0) * math.log1p(e2 / m)
        ge = -(nu + 1.0) * e / (m + e2)
        gnu = dnu_const - 0.5 * math.log1p(e2 / m) + 0.5 * (nu + 1.0) * e2 / (m * (m + e2))
        return ld, ge, gnu, 0.0
    if kind == GED:
        nu, log_lam, const, dlog_lam, dnu_const = c[0], c[1], c[2], c[3], c[4]
        if ae == 0.0:
            return const, 0.0, dnu_const, 0.0
        la = math.log(ae) - log_lam
        T = 0.5 * math.exp(nu * la)
        ge = -nu * T / e
        dT = T * (la - nu * dlog_lam)
        return const - T, ge, dnu_const - dT, 0.0
    # generalized t
    eta, p, log_k, const = c[0], c[1], c[2], c[3]
    dlogk_deta, dlogk_dnu, deta_const, dnu_const = c[4], c[5], c[6], c[7]
    if ae == 0.0:
        return const, 0.0, deta_const, dnu_const
    la = math.log(ae)
    u = math.exp(log_k + eta * la)
    L = math.log1p(u)
    ge = -p * eta * u / ((1.0 + u) * e)
    geta = deta_const + L / (eta * eta) - p * u * (dlogk_deta + la) / (1.0 + u)
    gnu = dnu_const - L - p * u * dlogk_dnu / (1.0 + u)
    return const - p * L, ge, geta, gnu


@njit(cache=True)
def loglik_grad(x, mu, omega, alpha, phi, beta, h1, dh1, kind, c, with_grad):
    """
    Log-likelihood and its gradient over (mu, omega, alpha, phi, beta, s1, s2).

    Returns ``(ll, grad)`` with ``grad`` of length 7; unused shape slots stay 0.
    """
    n = x.shape[0]
    g = np.zeros(7)
    dhp = np.empty(5)
    for k in range(5):
        dhp[k] = dh1[k]
    h = h1
    ll = 0.0
    y_prev = 0.0
    for t in range(n):
        y = x[t] - mu
        if t > 0:
            ind = 1.0 if y_prev <= 0.0 else 0.0
            a = alpha + phi * ind
            y2 = y_prev * y_prev
            h_new = omega + a * y2 + beta * h
            if with_grad:
                d0 = -2.0 * a * y_prev + beta * dhp[0]
                d1 = 1.0 + beta * dhp[1]
                d2 = y2 + beta * dhp[2]
                d3 = ind * y2 + beta * dhp[3]
                d4 = h + beta * dhp[4]
                dhp[0] = d0
                dhp[1] = d1
                dhp[2] = d2
                dhp[3] = d3
                dhp[4] = d4
            h = h_new
        sh = math.sqrt(h)
        e = y / sh
        ld, ge, gs1, gs2 = _logf(e, kind, c)
        ll += ld - 0.5 * math.log(h)
        if with_grad:
            inv_h = 1.0 / h
            for k in range(5):
                dlogh = dhp[k] * inv_h
                g[k] += ge * (-0.5 * e * dlogh) - 0.5 * dlogh
            g[0] -= ge / sh
            g[5] += gs1
            g[6] += gs2
        y_prev = y
    return ll, g
