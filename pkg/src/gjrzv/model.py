"""
GJR-GARCH(1,1) model: variance recursion, likelihood, truncated-normal
priors, maps to and from the unconstrained sampling space, and the analytic
gradient of the unconstrained log-posterior.

Natural parameters are ordered ``(mu, omega, alpha, phi, beta, *shape)``
with shape ``(nu,)`` for Student-t and GED and ``(eta, nu)`` for GT.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Literal

import numpy as np
from scipy.special import expit, log_ndtr, ndtr

from gjrzv._recursion import gjr_filter, gjr_filter_many, loglik_grad
from gjrzv.distributions import ErrorDist, kernel_constants, log_density, shape_names

__all__ = [
    "DataError",
    "GjrParams",
    "PriorSpec",
    "GjrPosterior",
    "param_names",
    "variance_recursion",
    "log_likelihood",
    "pointwise_log_likelihood",
    "log_prior",
    "transform",
    "inverse_transform",
    "to_natural",
    "log_posterior_unconstrained",
    "grad_log_posterior_unconstrained",
]

H1Policy = Literal["unconditional", "sample"]

_BASE_NAMES = ("mu", "omega", "alpha", "phi", "beta")
_LOG_2PI = np.log(2.0 * np.pi)


class DataError(ValueError):
    """Raised for unusable input series."""


def param_names(kind: str) -> tuple[str, ...]:
    return _BASE_NAMES + shape_names(kind)


@dataclass(frozen=True)
class GjrParams:
    """Natural-space GJR-GARCH(1,1) parameters plus the error distribution."""

    mu: float
    omega: float
    alpha: float
    phi: float
    beta: float
    dist: ErrorDist = field(default_factory=ErrorDist.normal)

    @property
    def persistence(self) -> float:
        return self.alpha + 0.5 * self.phi + self.beta

    @property
    def unconditional_variance(self) -> float:
        return self.omega / (1.0 - self.persistence)

    @property
    def names(self) -> tuple[str, ...]:
        return param_names(self.dist.kind)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [[self.mu, self.omega, self.alpha, self.phi, self.beta], self.dist.shape]
        )

    @classmethod
    def from_vector(cls, vec, kind: str) -> GjrParams:
        vec = np.asarray(vec, dtype=float)
        return cls(
            float(vec[0]),
            float(vec[1]),
            float(vec[2]),
            float(vec[3]),
            float(vec[4]),
            ErrorDist.from_shape(kind, vec[5:]),
        )

    def in_support(self) -> bool:
        return (
            self.omega > 0.0
            and 0.0 < self.alpha < 1.0
            and 0.0 < self.phi < 2.0
            and 0.0 < self.beta < 1.0
        )

    def is_stationary(self) -> bool:
        return self.persistence < 1.0


@dataclass(frozen=True)
class PriorSpec:
    """Variances of the (truncated) normal priors, all centred at zero."""

    mu: float = 1000.0
    omega: float = 1000.0
    alpha: float = 1000.0
    phi: float = 1000.0
    beta: float = 1000.0
    nu: float = 1000.0
    eta: float = 1000.0

    def __post_init__(self) -> None:
        for name, value in self.__dict__.items():
            if not value > 0.0:
                raise ValueError(f"prior variance for {name} must be positive, got {value}")

    @classmethod
    def all(cls, variance: float) -> PriorSpec:
        return cls(*([float(variance)] * 7))


def _check_finite(x: np.ndarray, name: str = "series") -> None:
    bad = np.flatnonzero(~np.isfinite(x))
    if bad.size:
        raise DataError(f"{name} has a non-finite value at index {bad[0]}")


def _initial_variance(nat: np.ndarray, h1: H1Policy, x: np.ndarray):
    """h_1 and its gradient over (mu, omega, alpha, phi, beta)."""
    if h1 == "sample":
        return float(np.var(x)), np.zeros(5)
    if h1 != "unconditional":
        raise ValueError(f"unknown h1 policy {h1!r}")
    omega = nat[1]
    p = 1.0 - nat[2] - 0.5 * nat[3] - nat[4]
    if not p > 0.0:
        return np.nan, np.zeros(5)
    return omega / p, np.array([0.0, 1.0 / p, omega / p**2, 0.5 * omega / p**2, omega / p**2])


def variance_recursion(y, params: GjrParams, h1: H1Policy | float = "unconditional"):
    """
    Conditional variances ``h_t`` for the mean-zero series ``y``.

    Parameters
    ----------
    y : array_like
        Residual series ``x - mu``.
    params : GjrParams
        Model parameters.
    h1 : {"unconditional", "sample"} or float
        Initial variance: the unconditional variance implied by ``params``,
        the sample variance of ``y``, or an explicit value.
    """
    y = np.asarray(y, dtype=float)
    if y.ndim != 1 or y.size < 1:
        raise DataError("series must be one-dimensional with at least one observation")
    _check_finite(y)
    if isinstance(h1, str):
        h0, _ = _initial_variance(params.to_vector(), h1, y)
        if not np.isfinite(h0):
            raise ValueError("unconditional variance requires alpha + phi/2 + beta < 1")
    else:
        h0 = float(h1)
    h, _ = gjr_filter(y, params.omega, params.alpha, params.phi, params.beta, h0, np.zeros(5), False)
    return h


def pointwise_log_likelihood(x, params: GjrParams, h1: H1Policy | float = "unconditional"):
    """Per-observation conditional log-likelihood terms ``log p(y_t | F_{t-1})``."""
    x = np.asarray(x, dtype=float)
    y = x - params.mu
    h = variance_recursion(y, params, h1)
    return log_density(y / np.sqrt(h), params.dist) - 0.5 * np.log(h)


def log_likelihood(x, params: GjrParams, h1: H1Policy | float = "unconditional") -> float:
    """Sum over t of ``log f(y_t / sqrt(h_t)) - log(h_t) / 2``."""
    return float(np.sum(pointwise_log_likelihood(x, params, h1)))


def _tn_log_norm(lo: float, hi: float, sd: float) -> float:
    """log P(lo < N(0, sd**2) < hi)."""
    if np.isinf(hi):
        return float(log_ndtr(-lo / sd))
    return float(np.log(ndtr(hi / sd) - ndtr(lo / sd)))


def _shape_support(kind: str, shape: np.ndarray) -> bool:
    if kind == "normal":
        return True
    if kind == "t":
        return shape[0] > 2.0
    if kind == "ged":
        return shape[0] > 0.0
    eta, nu = shape
    return eta > 1.0 and nu > 1.0 / eta


@lru_cache(maxsize=64)
def _prior_constants(kind: str, s: PriorSpec):
    """Prior variances and the parameter-free part of the log prior."""
    variances = [s.mu, s.omega, s.alpha, s.phi, s.beta]
    bounds = [(-np.inf, np.inf), (0.0, np.inf), (0.0, 1.0), (0.0, 2.0), (0.0, 1.0)]
    if kind in ("t", "ged"):
        variances.append(s.nu)
        bounds.append((2.0 if kind == "t" else 0.0, np.inf))
    elif kind == "gt":
        variances += [s.eta, s.nu]
        bounds.append((1.0, np.inf))  # nu's truncation depends on eta
    var = np.array(variances)
    const = float(np.sum(-0.5 * (_LOG_2PI + np.log(var))))
    for (lo, hi), v in zip(bounds, var):
        if np.isfinite(lo) or np.isfinite(hi):
            const -= _tn_log_norm(lo, hi, np.sqrt(v))
    var.flags.writeable = False
    return var, const


def _log_prior_nat(nat: np.ndarray, kind: str, s: PriorSpec, enforce_stationarity: bool, grad: bool):
    _, omega, alpha, phi, beta = nat[:5]
    ok = (
        omega > 0.0
        and 0.0 < alpha < 1.0
        and 0.0 < phi < 2.0
        and 0.0 < beta < 1.0
        and _shape_support(kind, nat[5:])
    )
    if ok and enforce_stationarity:
        ok = alpha + 0.5 * phi + beta < 1.0
    if not ok:
        return -np.inf, (np.full(nat.size, np.nan) if grad else None)
    var, const = _prior_constants(kind, s)
    lp = const - 0.5 * float(np.dot(nat, nat / var))
    if kind == "gt":
        # nu is truncated to (1/eta, inf), so its normalizer moves with eta
        sd = np.sqrt(s.nu)
        t = -1.0 / (nat[5] * sd)
        log_z = float(log_ndtr(t))
        lp -= log_z
    if not grad:
        return lp, None
    g = -nat / var
    if kind == "gt":
        mills = np.exp(-0.5 * t * t - 0.5 * _LOG_2PI - log_z)
        g[5] -= mills / (nat[5] ** 2 * sd)
    return lp, g


def log_prior(params: GjrParams, prior: PriorSpec, enforce_stationarity: bool = True) -> float:
    """
    Sum of truncated-normal log prior densities, including the truncation
    normalizers. Returns ``-inf`` outside the support (and, when
    ``enforce_stationarity`` is set, outside ``alpha + phi/2 + beta < 1``).
    """
    lp, _ = _log_prior_nat(params.to_vector(), params.dist.kind, prior, enforce_stationarity, False)
    return lp


# --- transforms --------------------------------------------------------------


def _shape_offset(kind: str) -> float:
    return {"t": 2.0, "ged": 0.0, "gt": 1.0}[kind]


def transform(params: GjrParams):
    """
    Map natural parameters to the unconstrained space.

    Returns
    -------
    theta : ndarray
        ``(mu, log omega, logit alpha, log(phi / (2 - phi)), logit beta, *shape*)``
        with ``log(nu - 2)`` (t), ``log nu`` (GED), and ``(log(eta - 1),
        log(nu - 2/eta))`` (GT).
    log_jacobian : float
        ``log |d natural / d theta|``.
    """
    kind = params.dist.kind
    nat = params.to_vector()
    mu, omega, alpha, phi, beta = nat[:5]
    theta = [
        mu,
        np.log(omega),
        np.log(alpha) - np.log1p(-alpha),
        np.log(phi) - np.log(2.0 - phi),
        np.log(beta) - np.log1p(-beta),
    ]
    if kind in ("t", "ged"):
        theta.append(np.log(nat[5] - _shape_offset(kind)))
    elif kind == "gt":
        eta, nu = nat[5], nat[6]
        theta += [np.log(eta - 1.0), np.log(nu - 2.0 / eta)]
    theta = np.array(theta, dtype=float)
    return theta, _log_jacobian(nat, theta)


def _log_jacobian(nat: np.ndarray, theta: np.ndarray) -> float:
    _, omega, alpha, phi, beta = nat[:5]
    lj = (
        math.log(omega)
        + math.log(alpha)
        + math.log1p(-alpha)
        + math.log(phi)
        + math.log1p(-0.5 * phi)
        + math.log(beta)
        + math.log1p(-beta)
    )
    return lj + float(np.sum(theta[5:]))


def to_natural(theta, kind: str) -> np.ndarray:
    """Vectorized inverse transform; works on a vector or an ``(N, d)`` array."""
    theta = np.asarray(theta, dtype=float)
    out = np.empty_like(theta)
    out[..., 0] = theta[..., 0]
    out[..., 1] = np.exp(theta[..., 1])
    out[..., 2] = expit(theta[..., 2])
    out[..., 3] = 2.0 * expit(theta[..., 3])
    out[..., 4] = expit(theta[..., 4])
    if kind in ("t", "ged"):
        out[..., 5] = _shape_offset(kind) + np.exp(theta[..., 5])
    elif kind == "gt":
        eta = 1.0 + np.exp(theta[..., 5])
        out[..., 5] = eta
        out[..., 6] = 2.0 / eta + np.exp(theta[..., 6])
    return out


def inverse_transform(theta, kind: str) -> GjrParams:
    return GjrParams.from_vector(to_natural(theta, kind), kind)


def _chain_rule(g_nat: np.ndarray, nat: np.ndarray, theta: np.ndarray, kind: str) -> np.ndarray:
    """Gradient in theta of (target in natural space) + log-Jacobian."""
    _, omega, alpha, phi, beta = nat[:5]
    g = np.empty_like(g_nat)
    g[0] = g_nat[0]
    g[1] = g_nat[1] * omega + 1.0
    g[2] = g_nat[2] * alpha * (1.0 - alpha) + 1.0 - 2.0 * alpha
    g[3] = g_nat[3] * phi * (1.0 - 0.5 * phi) + 1.0 - phi
    g[4] = g_nat[4] * beta * (1.0 - beta) + 1.0 - 2.0 * beta
    if nat.size > 5:
        g[5:] = g_nat[5:] * np.exp(theta[5:]) + 1.0
    if kind == "gt":
        eta = nat[5]
        g[5] += g_nat[6] * (-2.0 * (eta - 1.0) / eta**2)
    return g


# --- likelihood + gradient in natural space ---------------------------------


def _loglik_nat(nat: np.ndarray, x: np.ndarray, kind: str, h1: H1Policy, grad: bool):
    h0, dh0 = _initial_variance(nat, h1, x)
    if not np.isfinite(h0) or h0 <= 0.0:
        return -np.inf, None
    try:
        dist = ErrorDist.from_shape(kind, nat[5:])
    except ValueError:
        return -np.inf, None
    code, consts = kernel_constants(dist)
    ll, g7 = loglik_grad(x, nat[0], nat[1], nat[2], nat[3], nat[4], h0, dh0, code, consts, grad)
    return ll, (g7[: nat.size] if grad else None)


def _evaluate(theta, x, kind, prior, h1, enforce_stationarity, grad):
    theta = np.asarray(theta, dtype=float)
    bad = (-np.inf, np.full(theta.size, np.nan) if grad else None)
    with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
        nat = to_natural(theta, kind)
        lp, gp = _log_prior_nat(nat, kind, prior, enforce_stationarity, grad)
        if not np.isfinite(lp):
            return bad
        ll, gl = _loglik_nat(nat, x, kind, h1, grad)
        try:
            lj = _log_jacobian(nat, theta)
        except ValueError:  # boundary reached in floating point
            return bad
        total = ll + lp + lj
        if not np.isfinite(total):
            return bad
        if not grad:
            return total, None
        g = _chain_rule(gl + gp, nat, theta, kind)
    if not np.all(np.isfinite(g)):
        return bad
    return total, g


def log_posterior_unconstrained(
    theta,
    x,
    kind: str,
    prior: PriorSpec | None = None,
    h1: H1Policy = "unconditional",
    enforce_stationarity: bool = True,
) -> float:
    """Log-likelihood + log-prior + log-Jacobian at ``inverse_transform(theta)``."""
    x = np.asarray(x, dtype=float)
    lp, _ = _evaluate(theta, x, kind, prior or PriorSpec(), h1, enforce_stationarity, False)
    return lp


def grad_log_posterior_unconstrained(
    theta,
    x,
    kind: str,
    prior: PriorSpec | None = None,
    h1: H1Policy = "unconditional",
    enforce_stationarity: bool = True,
) -> np.ndarray:
    """Analytic gradient of :func:`log_posterior_unconstrained` in ``theta``."""
    x = np.asarray(x, dtype=float)
    _, g = _evaluate(theta, x, kind, prior or PriorSpec(), h1, enforce_stationarity, True)
    return g


class GjrPosterior:
    """
    Unconstrained log-posterior of a GJR-GARCH(1,1) model for one series.

    Calling the object returns ``(log_posterior, gradient)``, the interface
    the samplers expect.

    Parameters
    ----------
    x : array_like
        Observed (demeaning not required) return series.
    kind : {"normal", "t", "ged", "gt"}
        Error distribution.
    prior : PriorSpec, optional
        Prior variances; defaults to 1000 for every parameter.
    h1 : {"unconditional", "sample"}
        Initial-variance policy.
    enforce_stationarity : bool
        Give zero prior mass to ``alpha + phi/2 + beta >= 1``.
    """

    def __init__(
        self,
        x,
        kind: str = "normal",
        prior: PriorSpec | None = None,
        h1: H1Policy = "unconditional",
        enforce_stationarity: bool = True,
    ) -> None:
        x = np.ascontiguousarray(x, dtype=float)
        if x.ndim != 1 or x.size < 1:
            raise DataError("series must be one-dimensional with at least one observation")
        _check_finite(x)
        if kind not in ("normal", "t", "ged", "gt"):
            raise ValueError(f"unknown distribution kind {kind!r}")
        if h1 not in ("unconditional", "sample"):
            raise ValueError(f"unknown h1 policy {h1!r}")
        self.x = x
        self.x.flags.writeable = False
        self.kind = kind
        self.prior = prior or PriorSpec()
        self.h1 = h1
        self.enforce_stationarity = enforce_stationarity

    @property
    def names(self) -> tuple[str, ...]:
        return param_names(self.kind)

    @property
    def dim(self) -> int:
        return len(self.names)

    def __call__(self, theta):
        return _evaluate(theta, self.x, self.kind, self.prior, self.h1, self.enforce_stationarity, True)

    value_and_grad = __call__

    def logp(self, theta) -> float:
        return _evaluate(
            theta, self.x, self.kind, self.prior, self.h1, self.enforce_stationarity, False
        )[0]

    def grad(self, theta) -> np.ndarray:
        return self(theta)[1]

    def to_natural(self, theta) -> np.ndarray:
        return to_natural(theta, self.kind)

    def loglik(self, theta) -> float:
        """Log-likelihood alone at ``inverse_transform(theta)``."""
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            nat = to_natural(np.asarray(theta, dtype=float), self.kind)
        return float(_loglik_nat(nat, self.x, self.kind, self.h1, False)[0])

    def params(self, theta) -> GjrParams:
        return inverse_transform(theta, self.kind)

    def initial_point(self) -> np.ndarray:
        """Unconstrained image of a generic starting point inside the stationary region."""
        shape = {"normal": [], "t": [8.0], "ged": [2.0], "gt": [2.0, 8.0]}[self.kind]
        p = GjrParams.from_vector(
            [float(np.mean(self.x)), 0.1 * float(np.var(self.x)), 0.05, 0.1, 0.8, *shape], self.kind
        )
        return transform(p)[0]

    def _h1_values(self, nat: np.ndarray) -> np.ndarray:
        if self.h1 == "sample":
            return np.full(nat.shape[0], float(np.var(self.x)))
        return nat[:, 1] / (1.0 - nat[:, 2] - 0.5 * nat[:, 3] - nat[:, 4])

    def variances(self, nat: np.ndarray) -> np.ndarray:
        """Conditional variance paths, one row per natural-space parameter row."""
        nat = np.atleast_2d(np.asarray(nat, dtype=float))
        return gjr_filter_many(self.x, np.ascontiguousarray(nat[:, :5]), self._h1_values(nat))

    def pointwise(self, nat: np.ndarray) -> np.ndarray:
        """``(N, n)`` matrix of conditional log-likelihood terms for natural-space rows."""
        nat = np.atleast_2d(np.asarray(nat, dtype=float))
        h = self.variances(nat)
        y = self.x[None, :] - nat[:, :1]
        e = y / np.sqrt(h)
        out = np.empty_like(h)
        for i in range(nat.shape[0]):
            dist = ErrorDist.from_shape(self.kind, nat[i, 5:])
            out[i] = log_density(e[i], dist)
        return out - 0.5 * np.log(h)

    def with_data(self, x) -> GjrPosterior:
        return GjrPosterior(x, self.kind, self.prior, self.h1, self.enforce_stationarity)

    def __repr__(self) -> str:
        return f"GjrPosterior(n={self.x.size}, kind={self.kind!r}, h1={self.h1!r})"
