"""
Deviance-scale model-comparison criteria from pointwise log-likelihood draws.

Every criterion here uses the likelihood-only deviance ``-2 log p(y | theta)``;
lower is better.
"""

from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import logsumexp

from gjrzv.model import GjrPosterior
from gjrzv.samplers import ChainSample

__all__ = [
    "CRITERIA",
    "ConsistencyError",
    "CriteriaReport",
    "chain_criteria",
    "compute_criteria",
    "gpd_fit",
    "pareto_khat",
    "pointwise_loglik",
]

CRITERIA = ("eaic", "ebic", "dic", "waic", "looic")
_KHAT_WARN = 0.7


class ConsistencyError(RuntimeError):
    """Pointwise terms disagree with the model's own likelihood."""


def pointwise_loglik(chain: ChainSample, posterior: GjrPosterior, atol: float = 1e-8) -> np.ndarray:
    """
    ``(N, n)`` matrix of ``log p(y_t | F_{t-1}, theta^(l))``.

    Each row is checked against the compiled likelihood at the same draw.

    Raises
    ------
    ConsistencyError
        When a row sum is off by more than ``atol``.
    """
    if chain.dim != posterior.dim:
        raise ValueError(f"chain has {chain.dim} columns but the model has {posterior.dim} parameters")
    pw = posterior.pointwise(posterior.to_natural(chain.draws))
    total = np.array([posterior.loglik(th) for th in chain.draws])
    err = np.abs(pw.sum(axis=1) - total)
    if not np.all(err <= atol):
        row = int(np.argmax(np.where(np.isfinite(err), err, np.inf)))
        raise ConsistencyError(f"row {row}: pointwise terms sum off by {err[row]:.3g}")
    return pw


def gpd_fit(x: np.ndarray) -> tuple[float, float]:
    """
    Generalized Pareto shape and scale by the Zhang-Stephens empirical Bayes
    estimator, with the weakly informative shrinkage used in Pareto-smoothed
    importance sampling.

    Parameters
    ----------
    x : ndarray
        Positive exceedances, sorted ascending.
    """
    n = x.size
    prior_bs, prior_k = 3.0, 10.0
    m = 30 + int(np.sqrt(n))
    b = 1.0 - np.sqrt(m / (np.arange(1, m + 1) - 0.5))
    b /= prior_bs * x[int(n / 4 + 0.5) - 1]
    b += 1.0 / x[-1]
    k = np.log1p(-b[:, None] * x).mean(axis=1)
    len_scale = n * (np.log(-(b / k)) - k - 1.0)
    with np.errstate(over="ignore"):
        w = 1.0 / np.exp(len_scale - len_scale[:, None]).sum(axis=1)
    keep = w >= 10 * np.finfo(float).eps
    w, b = w[keep], b[keep]
    w /= w.sum()
    b_post = float(np.sum(b * w))
    k_post = float(np.log1p(-b_post * x).mean())
    sigma = -k_post / b_post
    k_post = (n * k_post + prior_k * 0.5) / (n + prior_k)
    return k_post, sigma


def pareto_khat(log_weights: np.ndarray) -> float:
    """Tail-shape estimate for one vector of log importance weights."""
    lw = np.sort(np.asarray(log_weights, dtype=float))
    lw = lw - lw[-1]
    N = lw.size
    tail_len = int(np.ceil(min(0.2 * N, 3.0 * np.sqrt(N))))
    if tail_len < 5:
        return np.inf
    cutoff = max(lw[-tail_len - 1], np.log(np.finfo(float).tiny))
    tail = lw[lw > cutoff]
    if tail.size < 5:
        return np.inf
    exceed = np.exp(tail) - np.exp(cutoff)
    if not np.all(exceed > 0) or exceed[-1] <= 0:
        return np.inf
    return gpd_fit(np.sort(exceed))[0]


@dataclass(frozen=True)
class CriteriaReport:
    """
    Deviance-scale criteria and effective parameter counts.

    ``pareto_k`` is the per-observation tail diagnostic of the LOO importance
    weights; values above 0.7 mean the LOOIC term is unreliable.
    """

    dic: float
    eaic: float
    ebic: float
    waic: float
    looic: float
    p_dic: float
    p_waic: float
    p_loo: float
    mean_deviance: float
    deviance_at_mean: float
    pareto_k: np.ndarray
    k: int
    n: int

    @property
    def max_pareto_k(self) -> float:
        return float(np.max(self.pareto_k)) if self.pareto_k.size else float("nan")

    @property
    def looic_reliable(self) -> bool:
        return self.max_pareto_k <= _KHAT_WARN

    def as_dict(self) -> dict:
        out = asdict(self)
        out.pop("pareto_k")
        out["max_pareto_k"] = self.max_pareto_k
        return out


def compute_criteria(pointwise, k: int, loglik_at_mean: float | None = None) -> CriteriaReport:
    """
    EAIC, EBIC, DIC, WAIC and LOOIC from an ``(N, n)`` log-likelihood matrix.

    Parameters
    ----------
    pointwise : array_like
        ``log p(y_t | F_{t-1}, theta^(l))``.
    k : int
        Number of model parameters.
    loglik_at_mean : float, optional
        Log-likelihood at the posterior point estimate used by DIC. If omitted,
        the mean of the row sums is used and ``p_D`` is 0.

    Returns
    -------
    CriteriaReport
    """
    ll = np.asarray(pointwise, dtype=float)
    if ll.ndim != 2:
        raise ValueError("pointwise log-likelihood must be an (N, n) matrix")
    N, n = ll.shape
    if N < 100:
        warnings.warn(f"only {N} draws; variance-based penalties are unstable", RuntimeWarning)
    totals = ll.sum(axis=1)
    d_bar = float(-2.0 * totals.mean())
    d_hat = d_bar if loglik_at_mean is None else float(-2.0 * loglik_at_mean)
    p_d = d_bar - d_hat

    lppd_i = logsumexp(ll, axis=0) - np.log(N)
    p_waic_i = ll.var(axis=0, ddof=1) if N > 1 else np.zeros(n)
    waic = float(-2.0 * (lppd_i.sum() - p_waic_i.sum()))

    # truncated importance sampling with raw weights 1 / p(y_t | theta)
    lw = -ll - np.max(-ll, axis=0)
    log_cap = np.log(N) * 0.75 + logsumexp(lw, axis=0) - np.log(N)
    lw = np.minimum(lw, log_cap)
    elpd_i = logsumexp(lw + ll, axis=0) - logsumexp(lw, axis=0)
    khat = np.array([pareto_khat(-ll[:, t]) for t in range(n)]) if N >= 25 else np.full(n, np.inf)

    return CriteriaReport(
        dic=d_bar + p_d,
        eaic=d_bar + 2.0 * k,
        ebic=d_bar + k * np.log(n),
        waic=waic,
        looic=float(-2.0 * elpd_i.sum()),
        p_dic=p_d,
        p_waic=float(p_waic_i.sum()),
        p_loo=float(lppd_i.sum() - elpd_i.sum()),
        mean_deviance=d_bar,
        deviance_at_mean=d_hat,
        pareto_k=khat,
        k=k,
        n=n,
    )


def chain_criteria(chain: ChainSample, posterior: GjrPosterior) -> CriteriaReport:
    """
    Criteria for a fitted chain; the DIC plug-in point is the natural-space
    image of the unconstrained posterior mean.
    """
    pw = pointwise_loglik(chain, posterior)
    ll_bar = posterior.loglik(chain.draws.mean(axis=0))
    return compute_criteria(pw, posterior.dim, ll_bar)
