"""
Standardized (zero mean, unit variance) error distributions for GJR-GARCH
models: Normal, Student-t, generalized error (GED) and generalized t (GT).

Every density is parameterized so that ``e = y / sqrt(h)`` has variance one;
the conditional density of ``y`` is then ``h**-0.5 * f(y / sqrt(h))``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.random import Generator
from scipy.special import betaln, digamma, gammaln

__all__ = [
    "ErrorDist",
    "log_density",
    "log_density_grad",
    "sample",
    "ged_lambda",
    "gt_moment",
]

Kind = Literal["normal", "t", "ged", "gt"]
KINDS: tuple[str, ...] = ("normal", "t", "ged", "gt")

_LOG_2PI = np.log(2.0 * np.pi)
_LOG2 = np.log(2.0)


@dataclass(frozen=True)
class ErrorDist:
    """
    Tagged error distribution.

    Parameters
    ----------
    kind : {"normal", "t", "ged", "gt"}
        Distribution family.
    nu : float, optional
        Degrees of freedom (``t``, ``nu > 2``), GED shape (``ged``, ``nu > 0``)
        or the second GT shape (``gt``, ``nu > 2 / eta``).
    eta : float, optional
        First GT shape parameter (``eta > 0``).

    Notes
    -----
    The GT family needs ``nu * eta > 2`` for a finite variance, which is what
    standardization requires.
    """

    kind: Kind
    nu: float | None = None
    eta: float | None = None

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}; expected one of {KINDS}")
        if self.kind == "normal":
            if self.nu is not None or self.eta is not None:
                raise ValueError("normal distribution takes no shape parameters")
            return
        if self.nu is None or not np.isfinite(self.nu):
            raise ValueError(f"{self.kind} distribution requires a finite nu")
        if self.kind == "t" and not self.nu > 2.0:
            raise ValueError(f"Student-t requires nu > 2, got nu={self.nu}")
        if self.kind == "ged" and not self.nu > 0.0:
            raise ValueError(f"GED requires nu > 0, got nu={self.nu}")
        if self.kind == "gt":
            if self.eta is None or not np.isfinite(self.eta) or not self.eta > 0.0:
                raise ValueError(f"GT requires eta > 0, got eta={self.eta}")
            if not self.nu > 2.0 / self.eta:
                raise ValueError(
                    f"GT requires nu > 2/eta for unit variance, got nu={self.nu}, eta={self.eta}"
                )
        elif self.eta is not None:
            raise ValueError(f"{self.kind} distribution does not take eta")

    @classmethod
    def normal(cls) -> ErrorDist:
        return cls("normal")

    @classmethod
    def student_t(cls, nu: float) -> ErrorDist:
        return cls("t", nu=float(nu))

    @classmethod
    def ged(cls, nu: float) -> ErrorDist:
        return cls("ged", nu=float(nu))

    @classmethod
    def generalized_t(cls, eta: float, nu: float) -> ErrorDist:
        return cls("gt", nu=float(nu), eta=float(eta))

    @classmethod
    def from_shape(cls, kind: str, shape) -> ErrorDist:
        """Build from a kind and a shape vector ordered as :attr:`shape`."""
        shape = np.atleast_1d(np.asarray(shape, dtype=float))
        if kind == "normal":
            return cls("normal")
        if kind == "gt":
            return cls("gt", nu=float(shape[1]), eta=float(shape[0]))
        return cls(kind, nu=float(shape[0]))  # type: ignore[arg-type]

    @property
    def shape(self) -> np.ndarray:
        """Shape parameters, ordered ``()``, ``(nu,)`` or ``(eta, nu)`` for GT."""
        if self.kind == "normal":
            return np.empty(0)
        if self.kind == "gt":
            return np.array([self.eta, self.nu])
        return np.array([self.nu])

    @property
    def shape_names(self) -> tuple[str, ...]:
        return shape_names(self.kind)

    @property
    def n_shape(self) -> int:
        return len(self.shape_names)


def shape_names(kind: str) -> tuple[str, ...]:
    return {"normal": (), "t": ("nu",), "ged": ("nu",), "gt": ("eta", "nu")}[kind]


def ged_lambda(nu: float) -> float:
    """Scale ``lambda`` making the GED with shape ``nu`` unit variance."""
    log_lam = -_LOG2 / nu + 0.5 * (gammaln(1.0 / nu) - gammaln(3.0 / nu))
    return float(np.exp(log_lam))


def gt_moment(r: float, eta: float, nu: float) -> float:
    """Absolute moment ``E|X|**r`` of the unscaled generalized t."""
    if not nu > r / eta:
        return np.inf
    return float(
        np.exp(r / eta * np.log(nu) + betaln((r + 1.0) / eta, nu - r / eta) - betaln(1.0 / eta, nu))
    )


def _gt_log_k(eta: float, nu: float) -> float:
    # k = s**eta / nu, where s**2 is the variance of the unscaled GT
    return 0.5 * eta * (betaln(3.0 / eta, nu - 2.0 / eta) - betaln(1.0 / eta, nu))


def log_density(e, dist: ErrorDist):
    """
    Log-density of the standardized error at ``e``.

    Parameters
    ----------
    e : float or ndarray
        Standardized residuals.
    dist : ErrorDist
        Error distribution.

    Returns
    -------
    float or ndarray
        ``log f(e)`` with the same shape as ``e``.
    """
    e = np.asarray(e, dtype=float)
    if dist.kind == "normal":
        out = -0.5 * _LOG_2PI - 0.5 * e * e
    elif dist.kind == "t":
        nu = dist.nu
        c = gammaln(0.5 * (nu + 1.0)) - gammaln(0.5 * nu) - 0.5 * np.log(np.pi * (nu - 2.0))
        out = c - 0.5 * (nu + 1.0) * np.log1p(e * e / (nu - 2.0))
    elif dist.kind == "ged":
        nu = dist.nu
        log_lam = np.log(ged_lambda(nu))
        c = np.log(nu) - log_lam - (1.0 + 1.0 / nu) * _LOG2 - gammaln(1.0 / nu)
        out = c - 0.5 * (np.abs(e) / np.exp(log_lam)) ** nu
    else:
        eta, nu = dist.eta, dist.nu
        log_k = _gt_log_k(eta, nu)
        c = np.log(eta) - _LOG2 - betaln(1.0 / eta, nu) + log_k / eta
        out = c - (nu + 1.0 / eta) * np.log1p(np.exp(log_k) * np.abs(e) ** eta)
    return out if out.ndim else float(out)


def log_density_grad(e, dist: ErrorDist):
    """
    Partial derivatives of :func:`log_density`.

    Returns
    -------
    de : float or ndarray
        Derivative with respect to ``e``.
    dshape : ndarray
        Derivatives with respect to the shape parameters, with a leading axis
        of length ``dist.n_shape`` (ordered as ``dist.shape``).

    Notes
    -----
    At ``e == 0`` the ``|e|**nu`` terms of the GED and GT are given a zero
    derivative.
    """
    e = np.asarray(e, dtype=float)
    scalar = e.ndim == 0
    e = np.atleast_1d(e)
    ae = np.abs(e)
    sgn = np.sign(e)
    nz = ae > 0
    with np.errstate(divide="ignore"):
        log_ae = np.where(nz, np.log(np.where(nz, ae, 1.0)), 0.0)

    if dist.kind == "normal":
        de = -e
        dshape = np.empty((0,) + e.shape)
    elif dist.kind == "t":
        nu = dist.nu
        m = nu - 2.0
        de = -(nu + 1.0) * e / (m + e * e)
        dnu = (
            0.5 * digamma(0.5 * (nu + 1.0))
            - 0.5 * digamma(0.5 * nu)
            - 0.5 / m
            - 0.5 * np.log1p(e * e / m)
            + 0.5 * (nu + 1.0) * e * e / (m * (m + e * e))
        )
        dshape = dnu[None, :]
    elif dist.kind == "ged":
        nu = dist.nu
        lam = ged_lambda(nu)
        log_lam = np.log(lam)
        dlog_lam = _LOG2 / nu**2 + 0.5 * (-digamma(1.0 / nu) + 3.0 * digamma(3.0 / nu)) / nu**2
        # T = 0.5 * (|e| / lam) ** nu
        T = np.where(nz, 0.5 * np.exp(nu * (log_ae - log_lam)), 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            de = np.where(nz, -nu * T / np.where(nz, ae, 1.0) * sgn, 0.0)
        dT = T * ((log_ae - log_lam) - nu * dlog_lam)
        dnu = 1.0 / nu - dlog_lam + _LOG2 / nu**2 + digamma(1.0 / nu) / nu**2 - dT
        dshape = dnu[None, :]
    else:
        eta, nu = dist.eta, dist.nu
        a1, b1 = 1.0 / eta, nu
        a3, b3 = 3.0 / eta, nu - 2.0 / eta
        psi_ab = digamma(nu + 1.0 / eta)  # a1 + b1 == a3 + b3
        dA1_deta = (digamma(a1) - psi_ab) * (-1.0 / eta**2)
        dA1_dnu = digamma(b1) - psi_ab
        dA3_deta = (digamma(a3) - psi_ab) * (-3.0 / eta**2) + (digamma(b3) - psi_ab) * (2.0 / eta**2)
        dA3_dnu = digamma(b3) - psi_ab
        A1 = betaln(a1, b1)
        A3 = betaln(a3, b3)
        log_k = 0.5 * eta * (A3 - A1)
        dlogk_deta = 0.5 * (A3 - A1) + 0.5 * eta * (dA3_deta - dA1_deta)
        dlogk_dnu = 0.5 * eta * (dA3_dnu - dA1_dnu)
        p = nu + 1.0 / eta
        u = np.where(nz, np.exp(log_k + eta * log_ae), 0.0)
        L = np.log1p(u)
        with np.errstate(divide="ignore", invalid="ignore"):
            de = np.where(nz, -p * eta * u / ((1.0 + u) * np.where(nz, ae, 1.0)) * sgn, 0.0)
        du_deta = u * (dlogk_deta + log_ae)
        du_dnu = u * dlogk_dnu
        deta = (
            1.0 / eta
            - dA1_deta
            + 0.5 * (dA3_deta - dA1_deta)
            + L / eta**2
            - p * du_deta / (1.0 + u)
        )
        dnu = -dA1_dnu + 0.5 * (dA3_dnu - dA1_dnu) - L - p * du_dnu / (1.0 + u)
        dshape = np.stack([deta, dnu])

    if scalar:
        return float(de[0]), dshape[:, 0]
    return de, dshape


def sample(dist: ErrorDist, rng: Generator, size=None):
    """
    Draw standardized errors.

    Parameters
    ----------
    dist : ErrorDist
        Distribution to sample.
    rng : numpy.random.Generator
        Source of randomness.
    size : int or tuple, optional
        Output shape; a scalar float is returned when omitted.
    """
    if dist.kind == "normal":
        out = rng.standard_normal(size)
    elif dist.kind == "t":
        nu = dist.nu
        out = rng.standard_t(nu, size) * np.sqrt((nu - 2.0) / nu)
    elif dist.kind == "ged":
        nu = dist.nu
        g = rng.gamma(1.0 / nu, 2.0, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        out = sign * ged_lambda(nu) * g ** (1.0 / nu)
    else:
        eta, nu = dist.eta, dist.nu
        g = rng.gamma(1.0 / eta, 1.0, size)
        b = rng.gamma(nu, 1.0, size)
        sign = np.where(rng.random(size) < 0.5, -1.0, 1.0)
        scale = 1.0 / np.sqrt(gt_moment(2.0, eta, nu))
        out = sign * scale * (nu * g / b) ** (1.0 / eta)
    return float(out) if size is None else out


def kernel_constants(dist: ErrorDist) -> tuple[int, np.ndarray]:
    """Kind code and per-call constants consumed by the compiled likelihood kernel."""
    if dist.kind == "normal":
        return 0, np.zeros(8)
    if dist.kind == "t":
        nu = dist.nu
        m = nu - 2.0
        const = gammaln(0.5 * (nu + 1.0)) - gammaln(0.5 * nu) - 0.5 * np.log(np.pi * m)
        dnu_const = 0.5 * digamma(0.5 * (nu + 1.0)) - 0.5 * digamma(0.5 * nu) - 0.5 / m
        return 1, np.array([nu, m, const, dnu_const, 0.0, 0.0, 0.0, 0.0])
    if dist.kind == "ged":
        nu = dist.nu
        log_lam = np.log(ged_lambda(nu))
        const = np.log(nu) - log_lam - (1.0 + 1.0 / nu) * _LOG2 - gammaln(1.0 / nu)
        dlog_lam = _LOG2 / nu**2 + 0.5 * (-digamma(1.0 / nu) + 3.0 * digamma(3.0 / nu)) / nu**2
        dnu_const = 1.0 / nu - dlog_lam + _LOG2 / nu**2 + digamma(1.0 / nu) / nu**2
        return 2, np.array([nu, log_lam, const, dlog_lam, dnu_const, 0.0, 0.0, 0.0])
    eta, nu = dist.eta, dist.nu
    a1, b1 = 1.0 / eta, nu
    a3, b3 = 3.0 / eta, nu - 2.0 / eta
    psi_ab = digamma(nu + 1.0 / eta)
    dA1_deta = (digamma(a1) - psi_ab) * (-1.0 / eta**2)
    dA1_dnu = digamma(b1) - psi_ab
    dA3_deta = (digamma(a3) - psi_ab) * (-3.0 / eta**2) + (digamma(b3) - psi_ab) * (2.0 / eta**2)
    dA3_dnu = digamma(b3) - psi_ab
    A1 = betaln(a1, b1)
    A3 = betaln(a3, b3)
    log_k = 0.5 * eta * (A3 - A1)
    const = np.log(eta) - _LOG2 - A1 + log_k / eta
    dlogk_deta = 0.5 * (A3 - A1) + 0.5 * eta * (dA3_deta - dA1_deta)
    dlogk_dnu = 0.5 * eta * (dA3_dnu - dA1_dnu)
    deta_const = 1.0 / eta - dA1_deta + 0.5 * (dA3_deta - dA1_deta)
    dnu_const = -dA1_dnu + 0.5 * (dA3_dnu - dA1_dnu)
    return 3, np.array(
        [eta, nu + 1.0 / eta, log_k, const, dlogk_deta, dlogk_dnu, deta_const, dnu_const]
    )
