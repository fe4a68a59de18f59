"""
Hamiltonian Monte Carlo and pilot-tuned random-walk Metropolis samplers
working on an unconstrained parameter vector.

A *target* is any callable ``target(theta) -> (log_prob, grad_log_prob)``.
The random-walk sampler additionally uses ``target.logp(theta)`` when
present, so that proposals do not pay for a gradient.
"""

from __future__ import annotations

import warnings
from collections.abc import Callable
from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.random import Generator
from scipy.linalg import cho_solve, cholesky

__all__ = [
    "ChainSample",
    "DivergentTrajectory",
    "HmcConfig",
    "RwmConfig",
    "TuningWarning",
    "hmc_sample",
    "leapfrog",
    "rwm_sample",
    "tune_epsilon",
]

Target = Callable[[np.ndarray], tuple[float, np.ndarray]]


class DivergentTrajectory(ArithmeticError):
    """A leapfrog trajectory hit a non-finite gradient."""


class TuningWarning(UserWarning):
    pass


@dataclass(frozen=True)
class HmcConfig:
    """
    Settings for :func:`hmc_sample`.

    ``epsilon=None`` tunes the step size with :func:`tune_epsilon` so that
    the acceptance rate of short test chains lands in ``target_window``.
    Each iteration draws its step size uniformly from
    ``epsilon * (1 +/- jitter)``; a fixed trajectory length can otherwise
    resonate with the target and stall the chain along some directions.
    """

    epsilon: float | None = None
    n_steps: int = 20
    mass: np.ndarray | None = None
    n_draws: int = 1000
    n_burnin: int = 1000
    seed: int = 0
    target_window: tuple[float, float] = (0.7, 0.9)
    tune_draws: int = 100
    jitter: float = 0.2

    def __post_init__(self) -> None:
        if self.epsilon is not None and not self.epsilon > 0:
            raise ValueError("epsilon must be positive")
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if self.n_draws < 1 or self.n_burnin < 0:
            raise ValueError("n_draws must be >= 1 and n_burnin >= 0")
        if not 0.0 <= self.jitter < 1.0:
            raise ValueError("jitter must lie in [0, 1)")
        if self.mass is not None:
            m = np.asarray(self.mass, dtype=float)
            if m.ndim != 2 or m.shape[0] != m.shape[1] or not np.allclose(m, m.T):
                raise ValueError("mass matrix must be square and symmetric")
            if np.any(np.linalg.eigvalsh(m) <= 0):
                raise ValueError("mass matrix must be positive definite")


@dataclass(frozen=True)
class RwmConfig:
    """
    Settings for :func:`rwm_sample`.

    The pilot chain proposes from ``N(theta, eps_pilot * I)``; the main chain
    proposes from ``N(theta, eps_scale * M)`` with ``M`` the pilot covariance
    and ``eps_scale`` adapted during burn-in toward ``target_acceptance``.
    """

    eps_pilot: float = 1e-3
    pilot_draws: int = 2000
    eps_scale: float | None = None
    target_acceptance: float = 0.8
    n_draws: int = 1000
    n_burnin: int = 1000
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.eps_pilot > 0:
            raise ValueError("eps_pilot must be positive")
        if self.pilot_draws < 2:
            raise ValueError("pilot_draws must be >= 2")
        if self.eps_scale is not None and not self.eps_scale > 0:
            raise ValueError("eps_scale must be positive")
        if not 0.0 < self.target_acceptance < 1.0:
            raise ValueError("target_acceptance must lie in (0, 1)")
        if self.n_draws < 1 or self.n_burnin < 0:
            raise ValueError("n_draws must be >= 1 and n_burnin >= 0")


@dataclass(frozen=True, eq=False)
class ChainSample:
    """
    Retained posterior draws in the unconstrained space.

    Attributes
    ----------
    draws : ndarray
        ``(N, d)`` draws.
    logp : ndarray
        Log-posterior at each draw.
    grads : ndarray
        ``(N, d)`` gradient of the log-posterior at each draw.
    acceptance_rate : float
        Fraction of accepted proposals after burn-in.
    """

    draws: np.ndarray
    logp: np.ndarray
    grads: np.ndarray
    acceptance_rate: float
    seed: int | None = None
    sampler: str = ""
    epsilon: float | None = None
    config: dict = field(default_factory=dict)
    warnings: tuple[str, ...] = ()
    n_divergent: int = 0

    def __post_init__(self) -> None:
        for name in ("draws", "logp", "grads"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if self.draws.ndim != 2:
            raise ValueError("draws must be two-dimensional")
        if self.grads.shape != self.draws.shape or self.logp.shape != (self.draws.shape[0],):
            raise ValueError("draws, logp and grads disagree in shape")

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def dim(self) -> int:
        return self.draws.shape[1]

    def split(self) -> tuple[ChainSample, ChainSample]:
        """First and second halves, for single-chain fit/estimate splits."""
        half = self.n_draws // 2
        parts = []
        for sl in (slice(0, half), slice(half, 2 * half)):
            parts.append(
                ChainSample(
                    self.draws[sl],
                    self.logp[sl],
                    self.grads[sl],
                    self.acceptance_rate,
                    self.seed,
                    self.sampler,
                    self.epsilon,
                    self.config,
                    self.warnings,
                    self.n_divergent,
                )
            )
        return parts[0], parts[1]


# --- HMC ---------------------------------------------------------------------


class _Mass:
    def __init__(self, mass, dim: int) -> None:
        if mass is None:
            self.identity = True
        else:
            self.identity = False
            self.mass = np.asarray(mass, dtype=float)
            if self.mass.shape != (dim, dim):
                raise ValueError(f"mass matrix must be {dim}x{dim}")
            self.chol = cholesky(self.mass, lower=True)

    def inv(self, r: np.ndarray) -> np.ndarray:
        return r if self.identity else cho_solve((self.chol, True), r)

    def kinetic(self, r: np.ndarray) -> float:
        with np.errstate(over="ignore", invalid="ignore"):
            return 0.5 * float(r @ self.inv(r))

    def draw(self, rng: Generator, dim: int) -> np.ndarray:
        z = rng.standard_normal(dim)
        return z if self.identity else self.chol @ z


def leapfrog(theta, r, epsilon: float, n_steps: int, grad, mass=None, grad0=None):
    """
    Integrate Hamiltonian dynamics with ``n_steps`` leapfrog steps.

    Parameters
    ----------
    theta, r : ndarray
        Position and momentum.
    epsilon : float
        Step size.
    n_steps : int
        Number of leapfrog steps.
    grad : callable
        Gradient of the log target (the negative potential gradient).
    mass : ndarray, optional
        Mass matrix; identity when omitted.
    grad0 : ndarray, optional
        ``grad(theta)`` if already known.

    Returns
    -------
    theta, r : ndarray
        End point of the trajectory.

    Raises
    ------
    DivergentTrajectory
        If a gradient along the way is not finite.
    """
    theta = np.array(theta, dtype=float)
    r = np.array(r, dtype=float)
    m = mass if isinstance(mass, _Mass) else _Mass(mass, theta.size)
    g = np.asarray(grad(theta) if grad0 is None else grad0, dtype=float)
    if not np.all(np.isfinite(g)):
        raise DivergentTrajectory("non-finite gradient at the starting point")
    r = r + 0.5 * epsilon * g
    for i in range(n_steps):
        theta = theta + epsilon * m.inv(r)
        g = np.asarray(grad(theta), dtype=float)
        if not np.all(np.isfinite(g)):
            raise DivergentTrajectory(f"non-finite gradient at leapfrog step {i + 1}")
        r = r + (epsilon if i < n_steps - 1 else 0.5 * epsilon) * g
    return theta, r


class _HmcKernel:
    def __init__(self, target: Target, n_steps: int, mass: _Mass, jitter: float = 0.0) -> None:
        self.target = target
        self.n_steps = n_steps
        self.mass = mass
        self.jitter = jitter
        self._last_lp = -np.inf
        self._g_last = None

    def _grad(self, theta):
        # the trajectory ends on a gradient call at its end point, so the
        # cached value is the log-target there
        lp, g = self.target(theta)
        self._last_lp = lp
        self._g_last = g
        return g

    def step(self, theta, lp, g, epsilon, rng: Generator):
        """One HMC transition; returns (theta, lp, g, accepted, divergent)."""
        r0 = self.mass.draw(rng, theta.size)
        h0 = -lp + self.mass.kinetic(r0)
        if self.jitter:
            epsilon = epsilon * (1.0 + self.jitter * (2.0 * rng.random() - 1.0))
        try:
            th1, r1 = leapfrog(theta, r0, epsilon, self.n_steps, self._grad, self.mass, grad0=g)
        except DivergentTrajectory:
            rng.random()  # keep the stream aligned with a regular step
            return theta, lp, g, False, True
        lp1 = self._last_lp
        g1 = self._g_last
        h1 = -lp1 + self.mass.kinetic(r1)
        log_u = np.log(rng.random())
        if np.isfinite(h1) and log_u < h0 - h1:
            return th1, lp1, g1, True, False
        return theta, lp, g, False, False


def _start(target: Target, init):
    theta = np.array(init, dtype=float)
    lp, g = target(theta)
    if not np.isfinite(lp) or not np.all(np.isfinite(g)):
        raise ValueError("initial point has a non-finite log-posterior or gradient")
    return theta, float(lp), np.asarray(g, dtype=float)


def _tune(kernel: _HmcKernel, theta, lp, g, window, epsilon0, test_draws, max_iter, rng):
    lo_w, hi_w = window
    eps = float(epsilon0)
    small = large = None  # brackets: acceptance too high / too low
    best = (np.inf, eps)
    for _ in range(max_iter):
        acc = 0
        for _ in range(test_draws):
            theta, lp, g, accepted, _div = kernel.step(theta, lp, g, eps, rng)
            acc += accepted
        rate = acc / test_draws
        miss = max(lo_w - rate, rate - hi_w, 0.0)
        if miss < best[0]:
            best = (miss, eps)
        if miss == 0.0:
            return eps, theta, lp, g, True
        if rate > hi_w:
            small = eps
            eps = eps * 2.0 if large is None else np.sqrt(small * large)
        else:
            large = eps
            eps = eps / 2.0 if small is None else np.sqrt(small * large)
    return best[1], theta, lp, g, False


def tune_epsilon(
    target: Target,
    init,
    n_steps: int = 20,
    window: tuple[float, float] = (0.7, 0.9),
    epsilon0: float = 0.1,
    test_draws: int = 100,
    max_iter: int = 30,
    mass=None,
    seed: int | Generator = 0,
    jitter: float = 0.2,
) -> float:
    """
    Find an HMC step size whose acceptance rate falls inside ``window``.

    Short test chains of ``test_draws`` iterations are run, doubling the step
    size while acceptance is above the window and halving it while below;
    once the window is bracketed the search bisects geometrically. Each test
    chain continues from where the previous one stopped.

    Returns the best step size found; a :class:`TuningWarning` is issued
    when ``max_iter`` rounds do not hit the window.
    """
    rng = seed if isinstance(seed, Generator) else np.random.default_rng(seed)
    theta, lp, g = _start(target, init)
    kernel = _HmcKernel(target, n_steps, _Mass(mass, theta.size), jitter)
    eps, *_, ok = _tune(kernel, theta, lp, g, window, epsilon0, test_draws, max_iter, rng)
    if not ok:
        warnings.warn(f"step-size search did not reach {window}; using {eps:.4g}", TuningWarning)
    return eps


def _config_echo(cfg) -> dict:
    out = asdict(cfg)
    for k, v in out.items():
        if isinstance(v, np.ndarray):
            out[k] = v.tolist()
        elif isinstance(v, tuple):
            out[k] = list(v)
    return out


def hmc_sample(target: Target, cfg: HmcConfig, init) -> ChainSample:
    """
    Hamiltonian Monte Carlo with full momentum refresh from ``N(0, M)``.

    Parameters
    ----------
    target : callable
        ``theta -> (log_prob, grad)``.
    cfg : HmcConfig
        Sampler settings.
    init : array_like
        Starting point with a finite log-posterior.

    Returns
    -------
    ChainSample
        ``cfg.n_draws`` draws retained after ``cfg.n_burnin`` burn-in steps.
    """
    theta, lp, g = _start(target, init)
    tune_rng, rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    kernel = _HmcKernel(target, cfg.n_steps, _Mass(cfg.mass, theta.size), cfg.jitter)
    notes = []
    eps = cfg.epsilon
    if eps is None:
        eps, theta, lp, g, ok = _tune(
            kernel, theta, lp, g, cfg.target_window, 0.1, cfg.tune_draws, 30, tune_rng
        )
        if not ok:
            msg = f"step-size search did not reach {cfg.target_window}; using {eps:.4g}"
            warnings.warn(msg, TuningWarning)
            notes.append(msg)

    d = theta.size
    draws = np.empty((cfg.n_draws, d))
    grads = np.empty((cfg.n_draws, d))
    logp = np.empty(cfg.n_draws)
    accepted = divergent = 0
    for it in range(cfg.n_burnin + cfg.n_draws):
        theta, lp, g, acc, div = kernel.step(theta, lp, g, eps, rng)
        k = it - cfg.n_burnin
        if k >= 0:
            accepted += acc
            divergent += div
            draws[k], grads[k], logp[k] = theta, g, lp
    rate = accepted / cfg.n_draws
    if not 0.05 <= rate <= 0.995:
        notes.append(f"acceptance rate {rate:.3f} outside [0.05, 0.995]")
    return ChainSample(
        draws, logp, grads, rate, cfg.seed, "hmc", float(eps), _config_echo(cfg), tuple(notes), divergent
    )


# --- random-walk Metropolis ---------------------------------------------------


def _rwm_chain(logp_fn, theta, lp, chol, n_iter, rng, adapt=None):
    """Run a random-walk chain; ``adapt=(log_scale, target)`` adapts the scale."""
    d = theta.size
    out = np.empty((n_iter, d))
    out_lp = np.empty(n_iter)
    log_scale = 0.0 if adapt is None else adapt[0]
    accepted = 0
    for i in range(n_iter):
        prop = theta + np.exp(0.5 * log_scale) * (chol @ rng.standard_normal(d))
        lp_prop = logp_fn(prop)
        log_ratio = lp_prop - lp if np.isfinite(lp_prop) else -np.inf
        if np.log(rng.random()) < log_ratio:
            theta, lp = prop, lp_prop
            accepted += 1
        if adapt is not None:
            log_scale += (i + 1) ** -0.6 * (min(1.0, np.exp(min(log_ratio, 0.0))) - adapt[1])
        out[i] = theta
        out_lp[i] = lp
    return out, out_lp, theta, lp, accepted / max(n_iter, 1), log_scale


def _pilot_covariance(pilot: np.ndarray, eps_pilot: float):
    cov = np.atleast_2d(np.cov(pilot, rowvar=False))
    try:
        cholesky(cov, lower=True)
        if np.linalg.cond(cov) < 1e12:
            return cov, None
    except np.linalg.LinAlgError:
        pass
    var = np.var(pilot, axis=0, ddof=1)
    var = np.where(var > 0, var, eps_pilot)
    return np.diag(var), "singular pilot covariance; using its diagonal"


def rwm_sample(target: Target, cfg: RwmConfig, init) -> ChainSample:
    """
    Random-walk Metropolis with a pilot-estimated proposal covariance.

    A pilot chain with proposal covariance ``eps_pilot * I`` yields the
    sample covariance ``M``; the main chain proposes from
    ``N(theta, eps_scale * M)`` with ``eps_scale`` adapted by a decaying
    stochastic-approximation step during burn-in and frozen afterwards.
    Gradients are evaluated at the retained draws for later use as control
    variates.
    """
    theta, lp, _ = _start(target, init)
    logp_fn = getattr(target, "logp", None) or (lambda th: target(th)[0])
    pilot_rng, rng = (np.random.default_rng(s) for s in np.random.SeedSequence(cfg.seed).spawn(2))
    d = theta.size
    notes = []

    pilot, _, theta, lp, _, _ = _rwm_chain(
        logp_fn, theta, lp, np.sqrt(cfg.eps_pilot) * np.eye(d), cfg.pilot_draws, pilot_rng
    )
    cov, note = _pilot_covariance(pilot, cfg.eps_pilot)
    if note:
        warnings.warn(note, TuningWarning)
        notes.append(note)
    chol = cholesky(cov, lower=True)

    scale0 = cfg.eps_scale if cfg.eps_scale is not None else 2.38**2 / d
    log_scale = np.log(scale0)
    if cfg.n_burnin:
        *_, theta, lp, _, log_scale = _rwm_chain(
            logp_fn, theta, lp, chol, cfg.n_burnin, rng, adapt=(log_scale, cfg.target_acceptance)
        )
    draws, logp, theta, lp, rate, _ = _rwm_chain(
        logp_fn, theta, lp, chol * np.exp(0.5 * log_scale), cfg.n_draws, rng
    )

    grads = np.empty_like(draws)
    prev = None
    for i in range(cfg.n_draws):
        if prev is None or not np.array_equal(draws[i], draws[i - 1]):
            prev = np.asarray(target(draws[i])[1], dtype=float)
        grads[i] = prev
    if not 0.05 <= rate <= 0.995:
        notes.append(f"acceptance rate {rate:.3f} outside [0.05, 0.995]")
    echo = _config_echo(cfg)
    echo["pilot_covariance"] = cov.tolist()
    return ChainSample(
        draws, logp, grads, rate, cfg.seed, "rwm", float(np.exp(log_scale)), echo, tuple(notes)
    )
