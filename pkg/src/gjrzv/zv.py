"""
Zero-variance (ZV) control variates for posterior means.

With ``z = -grad(log pi) / 2`` and a polynomial trial function
``P(theta) = a'theta + theta'B theta / 2``, the re-normalized function

    f~ = f - tr(B) / 2 + (a + B theta)' z

has the same posterior mean as ``f``. Linear ZV keeps only ``a``; quadratic
ZV fits ``a`` and the symmetric ``B`` jointly. Coefficients are fitted on
one chain and applied to another.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from gjrzv.mcse import batch_means_se
from gjrzv.samplers import ChainSample

__all__ = [
    "ZvEstimate",
    "ZvWarning",
    "apply",
    "control_variates",
    "estimate",
    "fit_linear",
    "fit_quadratic",
    "quadratic_covariates",
    "renormalize",
]

_COND_LIMIT = 1e12


class ZvWarning(UserWarning):
    pass


def control_variates(chain: ChainSample) -> np.ndarray:
    """``z = -grad / 2`` at every draw."""
    grads = getattr(chain, "grads", None)
    if grads is None:
        raise ValueError("chain carries no gradients")
    z = -0.5 * np.asarray(grads, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("chain gradients contain non-finite values")
    return z


def _pairs(d: int, diagonal: bool):
    if diagonal:
        return [(i, i) for i in range(d)]
    return [(i, j) for i in range(d) for j in range(i, d)]


def quadratic_covariates(theta: np.ndarray, z: np.ndarray, diagonal: bool = False) -> np.ndarray:
    """
    Mean-zero covariates for the quadratic trial function.

    Columns are ``z_i`` followed by ``theta_i z_i - 1/2`` for ``i == j`` and
    ``theta_i z_j + theta_j z_i`` for ``i < j`` (upper triangle, row-major).
    """
    d = theta.shape[1]
    cols = [z]
    for i, j in _pairs(d, diagonal):
        if i == j:
            cols.append((theta[:, i] * z[:, i] - 0.5)[:, None])
        else:
            cols.append((theta[:, i] * z[:, j] + theta[:, j] * z[:, i])[:, None])
    return np.hstack(cols)


def _as_2d(f, n: int):
    f = np.asarray(f, dtype=float)
    squeeze = f.ndim == 1
    f = f.reshape(n, -1)
    return f, squeeze


def _regress(G: np.ndarray, F: np.ndarray, label: str) -> tuple[np.ndarray, float]:
    """Slopes of F on G with an intercept, ridge-stabilized when ill-conditioned."""
    Gc = G - G.mean(axis=0)
    Fc = F - F.mean(axis=0)
    gram = Gc.T @ Gc
    cond = float(np.linalg.cond(gram)) if gram.size else 1.0
    if not np.isfinite(cond) or cond > _COND_LIMIT:
        lam = 1e-10 * np.trace(gram) / max(gram.shape[0], 1)
        warnings.warn(f"{label} design is ill-conditioned (cond={cond:.3g}); ridge applied", ZvWarning)
        gram = gram + lam * np.eye(gram.shape[0])
    return np.linalg.solve(gram, Gc.T @ Fc), cond


def fit_linear(chain: ChainSample, f) -> np.ndarray:
    """
    Linear ZV coefficients ``a = -Var[z]^-1 Cov[f, z]``.

    Parameters
    ----------
    chain : ChainSample
        Fitting chain.
    f : array_like
        Target-function values, shape ``(N,)`` or ``(N, k)``.

    Returns
    -------
    ndarray
        ``(d,)`` or ``(d, k)``.
    """
    z = control_variates(chain)
    F, squeeze = _as_2d(f, z.shape[0])
    if z.shape[0] <= z.shape[1]:
        raise ValueError("need more draws than parameters")
    slopes, _ = _regress(z, F, "linear ZV")
    a = -slopes
    return a[:, 0] if squeeze else a


def fit_quadratic(chain: ChainSample, f, diagonal: bool = False):
    """
    Quadratic ZV coefficients by least squares on :func:`quadratic_covariates`.

    Returns
    -------
    a : ndarray
        ``(d,)`` or ``(d, k)``.
    B : ndarray
        Symmetric ``(d, d)`` or ``(k, d, d)``; diagonal when ``diagonal``.
    """
    z = control_variates(chain)
    theta = np.asarray(chain.draws, dtype=float)
    F, squeeze = _as_2d(f, z.shape[0])
    G = quadratic_covariates(theta, z, diagonal)
    if G.shape[0] <= G.shape[1]:
        raise ValueError("need more draws than quadratic basis functions")
    c = -_regress(G, F, "quadratic ZV")[0]
    d = theta.shape[1]
    a = c[:d]
    B = np.zeros((F.shape[1], d, d))
    for col, (i, j) in enumerate(_pairs(d, diagonal)):
        B[:, i, j] = B[:, j, i] = c[d + col]
    if squeeze:
        return a[:, 0], B[0]
    return a, B


def renormalize(chain: ChainSample, coefficients, f) -> np.ndarray:
    """
    ``f~`` at every draw of ``chain``.

    ``coefficients`` is either ``a`` (linear) or ``(a, B)`` (quadratic).
    """
    z = control_variates(chain)
    theta = np.asarray(chain.draws, dtype=float)
    F, squeeze = _as_2d(f, z.shape[0])
    if isinstance(coefficients, tuple):
        a, B = coefficients
        a = np.asarray(a, dtype=float).reshape(theta.shape[1], -1)
        B = np.asarray(B, dtype=float).reshape(-1, theta.shape[1], theta.shape[1])
        # (a + B theta)' z - tr(B) / 2, per target function
        lin = z @ a
        quad = np.einsum("ni,kij,nj->nk", z, B, theta)
        out = F + lin + quad - 0.5 * np.trace(B, axis1=1, axis2=2)[None, :]
    else:
        a = np.asarray(coefficients, dtype=float).reshape(theta.shape[1], -1)
        out = F + z @ a
    return out[:, 0] if squeeze else out


def _fingerprint(chain: ChainSample) -> str:
    return hashlib.sha1(np.ascontiguousarray(chain.draws).tobytes()).hexdigest()


@dataclass(frozen=True)
class ZvEstimate:
    """
    Raw, linear-ZV and quadratic-ZV posterior means with batch-means SEs.

    Arrays have one entry per target function; ``linear``/``quadratic``
    fields are ``None`` when that variant was not requested.
    """

    names: tuple[str, ...]
    raw: np.ndarray
    raw_se: np.ndarray
    linear: np.ndarray | None = None
    linear_se: np.ndarray | None = None
    quadratic: np.ndarray | None = None
    quadratic_se: np.ndarray | None = None
    linear_coef: np.ndarray | None = None
    quadratic_coef: tuple[np.ndarray, np.ndarray] | None = None
    same_chain: bool = False

    def table(self) -> list[dict]:
        rows = []
        for k, name in enumerate(self.names):
            row = {"parameter": name, "raw": self.raw[k], "raw_se": self.raw_se[k]}
            if self.linear is not None:
                row.update(zv_l=self.linear[k], zv_l_se=self.linear_se[k])
            if self.quadratic is not None:
                row.update(zv_q=self.quadratic[k], zv_q_se=self.quadratic_se[k])
            rows.append(row)
        return rows


def apply(
    chain: ChainSample,
    f,
    linear=None,
    quadratic=None,
    names=None,
    fit_chain: ChainSample | None = None,
) -> ZvEstimate:
    """
    Estimate posterior means on ``chain`` with already-fitted coefficients.

    Parameters
    ----------
    chain : ChainSample
        Estimation chain.
    f : array_like
        Target-function values on ``chain``, ``(N,)`` or ``(N, k)``.
    linear : ndarray, optional
        Output of :func:`fit_linear`.
    quadratic : tuple, optional
        Output of :func:`fit_quadratic`.
    names : sequence of str, optional
        Labels for the target functions.
    fit_chain : ChainSample, optional
        The chain the coefficients came from; if it is ``chain`` itself the
        result is flagged, since reusing draws biases the estimate.
    """
    F, _ = _as_2d(f, chain.n_draws)
    k = F.shape[1]
    names = tuple(names) if names is not None else tuple(f"f{i}" for i in range(k))
    same = fit_chain is not None and (
        fit_chain is chain or _fingerprint(fit_chain) == _fingerprint(chain)
    )
    if same:
        warnings.warn("ZV coefficients were fitted on the estimation chain", ZvWarning)
    out = dict(
        names=names,
        raw=F.mean(axis=0),
        raw_se=np.atleast_1d(batch_means_se(F)),
        same_chain=same,
    )
    if linear is not None:
        ft = renormalize(chain, np.asarray(linear).reshape(chain.dim, k), F)
        out.update(linear=ft.mean(axis=0), linear_se=np.atleast_1d(batch_means_se(ft)), linear_coef=linear)
    if quadratic is not None:
        a, B = quadratic
        coef = (np.asarray(a).reshape(chain.dim, k), np.asarray(B).reshape(k, chain.dim, chain.dim))
        ft = renormalize(chain, coef, F)
        out.update(
            quadratic=ft.mean(axis=0),
            quadratic_se=np.atleast_1d(batch_means_se(ft)),
            quadratic_coef=quadratic,
        )
    return ZvEstimate(**out)


def estimate(
    fit_chain: ChainSample,
    est_chain: ChainSample,
    f_fit=None,
    f_est=None,
    names=None,
    to_natural=None,
    diagonal: bool = False,
) -> ZvEstimate:
    """
    Fit linear and quadratic ZV on ``fit_chain`` and estimate on ``est_chain``.

    By default the target functions are the coordinates of
    ``to_natural(draws)`` (or the raw draws when no map is given).
    """
    if f_fit is None:
        f_fit = fit_chain.draws if to_natural is None else to_natural(fit_chain.draws)
    if f_est is None:
        f_est = est_chain.draws if to_natural is None else to_natural(est_chain.draws)
    lin = fit_linear(fit_chain, f_fit)
    quad = fit_quadratic(fit_chain, f_fit, diagonal=diagonal)
    return apply(est_chain, f_est, lin, quad, names, fit_chain=fit_chain)
