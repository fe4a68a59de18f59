"""
Case-deletion influence from posterior draws.

Deleting observation ``i`` removes its likelihood term and, because the
next conditional variance depended on the realized ``y_i``, replaces
``h_{i+1}`` by its expectation over ``y_i`` given the past,
``omega + (alpha + phi/2 + beta) h_i`` (symmetric errors make the indicator
average 1/2). Later terms keep the realized ``y_i``.

All indices here are 0-based.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from gjrzv.distributions import ErrorDist, log_density
from gjrzv.model import GjrParams, GjrPosterior, pointwise_log_likelihood, variance_recursion
from gjrzv.samplers import ChainSample

__all__ = [
    "InfluenceReport",
    "influence",
    "influence_from_natural",
    "influence_proportions",
    "kl_estimates",
    "log_perturbations",
    "loo_log_perturbation",
]

_NEG_TOL = -1e-8


def loo_log_perturbation(i: int, params: GjrParams, x, h1="unconditional") -> float:
    """
    ``log p(y_(i) | theta) - log p(y | theta)`` for one parameter value.

    Parameters
    ----------
    i : int
        0-based index of the deleted observation.
    params : GjrParams
        Natural-space parameters.
    x : array_like
        Observed series.
    h1 : {"unconditional", "sample"} or float
        Initial-variance policy, as in the likelihood.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if not 0 <= i < n:
        raise IndexError(f"observation index {i} outside [0, {n})")
    if isinstance(h1, str) and h1 == "sample":
        h1 = float(np.var(x))
    terms = pointwise_log_likelihood(x, params, h1)
    out = -terms[i]
    if i + 1 < n:
        h = variance_recursion(x - params.mu, params, h1)
        h_del = params.omega + params.persistence * h[i]
        y = x[i + 1] - params.mu
        replaced = float(log_density(y / np.sqrt(h_del), params.dist)) - 0.5 * np.log(h_del)
        out += replaced - terms[i + 1]
    return float(out)


def _log_density_rows(e: np.ndarray, kind: str, shape: np.ndarray) -> np.ndarray:
    if kind == "normal":
        return log_density(e, ErrorDist.normal())
    out = np.empty_like(e)
    for r in range(e.shape[0]):
        out[r] = log_density(e[r], ErrorDist.from_shape(kind, shape[r]))
    return out


def log_perturbations(posterior: GjrPosterior, nat: np.ndarray) -> np.ndarray:
    """
    ``(N, n)`` matrix of ``log delta_i`` for natural-space rows ``nat``.
    """
    nat = np.atleast_2d(np.asarray(nat, dtype=float))
    x = posterior.x
    terms = posterior.pointwise(nat)
    out = -terms
    if x.size > 1:
        h = posterior.variances(nat)
        omega, alpha, phi, beta = (nat[:, k : k + 1] for k in range(1, 5))
        h_del = omega + (alpha + 0.5 * phi + beta) * h[:, :-1]
        y_next = x[None, 1:] - nat[:, :1]
        replaced = _log_density_rows(y_next / np.sqrt(h_del), posterior.kind, nat[:, 5:])
        replaced -= 0.5 * np.log(h_del)
        out[:, :-1] += replaced - terms[:, 1:]
    return out


def _per_draw_kl(log_delta: np.ndarray):
    """Per-draw ``KL_i^(l) = -(log delta_i^(l) - log mean_l delta_i)`` and the flagged columns."""
    N = log_delta.shape[0]
    with np.errstate(divide="ignore", invalid="ignore"):
        log_mean = logsumexp(log_delta, axis=0) - np.log(N)
        kl = log_mean[None, :] - log_delta
    flagged = ~np.isfinite(log_mean) | ~np.all(np.isfinite(log_delta), axis=0)
    kl[:, flagged] = np.nan
    return kl, flagged


def _clamp(kl_hat: np.ndarray) -> np.ndarray:
    bad = kl_hat < _NEG_TOL
    if np.any(bad):
        raise ArithmeticError(
            f"negative KL estimate {kl_hat[bad].min():.3g} at index {np.flatnonzero(bad)[0]}"
        )
    return np.where(kl_hat < 0.0, 0.0, kl_hat)


def _proportions(kl: np.ndarray) -> np.ndarray:
    N, n = kl.shape
    if n == 1:
        return np.ones(1)
    filled = np.where(np.isnan(kl), -np.inf, kl)
    top2 = -np.partition(-filled, 1, axis=1)[:, :2]
    winner = np.argmax(filled, axis=1)
    strict = top2[:, 0] > top2[:, 1]
    counts = np.bincount(winner[strict], minlength=n)
    return counts / N


@dataclass(frozen=True)
class InfluenceReport:
    """
    Per-observation KL estimates and influence proportions.

    ``flagged`` marks observations whose perturbations underflowed; their
    ``kl`` and ``proportion`` entries are NaN and 0.
    """

    kl: np.ndarray
    proportion: np.ndarray
    flagged: np.ndarray

    @property
    def argmax_kl(self) -> int:
        return int(np.nanargmax(self.kl))

    @property
    def argmax_proportion(self) -> int:
        return int(np.argmax(self.proportion))

    def top(self, k: int = 10) -> np.ndarray:
        """Indices of the ``k`` largest KL estimates, largest first."""
        order = np.argsort(-np.nan_to_num(self.kl, nan=-np.inf), kind="stable")
        return order[:k]


def _nat_draws(chain: ChainSample, posterior: GjrPosterior) -> np.ndarray:
    if chain.dim != posterior.dim:
        raise ValueError(f"chain has {chain.dim} columns but the model has {posterior.dim} parameters")
    return posterior.to_natural(chain.draws)


def influence_from_natural(posterior: GjrPosterior, nat) -> InfluenceReport:
    """As :func:`influence`, for draws already mapped to natural space."""
    kl, flagged = _per_draw_kl(log_perturbations(posterior, nat))
    kl_hat = _clamp(kl.mean(axis=0))
    return InfluenceReport(kl=kl_hat, proportion=_proportions(kl), flagged=flagged)


def influence(chain: ChainSample, posterior: GjrPosterior) -> InfluenceReport:
    """KL estimates and influence proportions from one pass over the draws."""
    return influence_from_natural(posterior, _nat_draws(chain, posterior))


def kl_estimates(chain: ChainSample, posterior: GjrPosterior) -> np.ndarray:
    """
    Monte Carlo estimate of the KL divergence between the full and the
    case-deleted posterior, for every observation.

    Parameters
    ----------
    chain : ChainSample
        Draws in the unconstrained space of ``posterior``.
    posterior : GjrPosterior
        Model and data the chain targets.

    Returns
    -------
    ndarray
        Length-``n`` vector, NaN where the perturbations underflowed.
    """
    return influence(chain, posterior).kl


def influence_proportions(chain: ChainSample, posterior: GjrPosterior) -> np.ndarray:
    """Fraction of draws in which each observation has the strictly largest KL term."""
    return influence(chain, posterior).proportion
