"""
Simulated GJR-GARCH series and the repeated-sampling comparison of raw and
ZV-adjusted posterior means.

For every replication one series is simulated and shared by all methods
(paired design). Each sampler runs two independent chains: ZV
coefficients are fitted on the first and the estimates come from the
second.
"""

from __future__ import annotations

import csv
import io
import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.random import Generator

from gjrzv import distributions
from gjrzv.model import GjrParams, GjrPosterior, PriorSpec
from gjrzv.samplers import HmcConfig, RwmConfig, hmc_sample, rwm_sample
from gjrzv.zv import estimate

__all__ = [
    "METHODS",
    "DEFAULT_TRUTH",
    "StudyConfig",
    "StudyResult",
    "run_study",
    "simulate_series",
]

METHODS = ("HMC", "ZV-HMC-L", "ZV-HMC-Q", "RWM", "ZV-RWM-L", "ZV-RWM-Q")
DEFAULT_TRUTH = GjrParams(mu=0.0, omega=0.05, alpha=0.05, phi=0.1, beta=0.85)


def simulate_series(truth: GjrParams, n: int, rng: Generator, burn: int = 500) -> np.ndarray:
    """
    Simulate ``n`` observations of a stationary GJR-GARCH(1,1) process.

    The recursion starts at the unconditional variance and the first
    ``burn`` values are discarded.

    Parameters
    ----------
    truth : GjrParams
        Data-generating parameters; must satisfy ``alpha + phi/2 + beta < 1``.
    n : int
        Length of the returned series.
    rng : numpy.random.Generator
        Source of the standardized errors.
    burn : int
        Pre-sample values to discard.
    """
    if not truth.is_stationary():
        raise ValueError("truth must satisfy alpha + phi/2 + beta < 1")
    if n < 1 or burn < 0:
        raise ValueError("n must be >= 1 and burn >= 0")
    total = n + burn
    eps = np.asarray(distributions.sample(truth.dist, rng, size=total), dtype=float)
    y = np.empty(total)
    h = truth.unconditional_variance
    for t in range(total):
        if t > 0:
            yp = y[t - 1]
            h = truth.omega + (truth.alpha + (truth.phi if yp <= 0.0 else 0.0)) * yp * yp + truth.beta * h
        y[t] = eps[t] * math.sqrt(h)
    return y[burn:] + truth.mu


@dataclass(frozen=True)
class StudyConfig:
    """
    Settings for :func:`run_study`.

    ``hmc`` and ``rwm`` give draw counts and tuning; their seeds are ignored
    and replaced by seeds derived from ``seed``. A sampler set to ``None``
    is skipped along with its ZV rows.
    """

    m: int = 20
    sizes: tuple[int, ...] = (200, 500)
    truth: GjrParams = DEFAULT_TRUTH
    hmc: HmcConfig | None = field(default_factory=lambda: HmcConfig(n_draws=2000, n_burnin=1000))
    rwm: RwmConfig | None = field(default_factory=lambda: RwmConfig(n_draws=2000, n_burnin=1000))
    prior: PriorSpec = field(default_factory=lambda: PriorSpec.all(1000.0))
    diagonal: bool = False
    seed: int = 0
    burn: int = 500

    def __post_init__(self) -> None:
        if self.m < 1:
            raise ValueError("m must be >= 1")
        if not self.sizes or min(self.sizes) < 2:
            raise ValueError("sizes must be a non-empty list of lengths >= 2")
        if not self.truth.is_stationary():
            raise ValueError("truth must satisfy alpha + phi/2 + beta < 1")
        if self.hmc is None and self.rwm is None:
            raise ValueError("at least one sampler is required")

    @property
    def methods(self) -> tuple[str, ...]:
        out = ()
        if self.hmc is not None:
            out += METHODS[:3]
        if self.rwm is not None:
            out += METHODS[3:]
        return out


def _replication(cfg: StudyConfig, n: int, n_index: int, rep: int):
    """Estimates and within-chain MCSEs of every method for one replication."""
    ss = np.random.SeedSequence([cfg.seed, n_index, rep])
    data_ss, *chain_ss = ss.spawn(5)
    chain_seeds = [int(s.generate_state(1)[0]) for s in chain_ss]
    x = simulate_series(cfg.truth, n, np.random.default_rng(data_ss), cfg.burn)
    post = GjrPosterior(x, cfg.truth.dist.kind, cfg.prior)
    init = post.initial_point()
    est, se, accept = {}, {}, {}
    runs = []
    if cfg.hmc is not None:
        c1 = hmc_sample(post, replace(cfg.hmc, seed=chain_seeds[0]), init)
        c2 = hmc_sample(post, replace(cfg.hmc, seed=chain_seeds[1], epsilon=c1.epsilon), init)
        runs.append(("HMC", c1, c2))
    if cfg.rwm is not None:
        c1 = rwm_sample(post, replace(cfg.rwm, seed=chain_seeds[2]), init)
        c2 = rwm_sample(post, replace(cfg.rwm, seed=chain_seeds[3]), init)
        runs.append(("RWM", c1, c2))
    for name, c1, c2 in runs:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            z = estimate(c1, c2, to_natural=post.to_natural, names=post.names, diagonal=cfg.diagonal)
        est[name], se[name] = z.raw, z.raw_se
        est[f"ZV-{name}-L"], se[f"ZV-{name}-L"] = z.linear, z.linear_se
        est[f"ZV-{name}-Q"], se[f"ZV-{name}-Q"] = z.quadratic, z.quadratic_se
        accept[name] = (c1.acceptance_rate, c2.acceptance_rate)
    return est, se, accept


@dataclass(frozen=True)
class StudyResult:
    """
    Per-replication records and their aggregates.

    ``estimates[n][method]`` and ``mcse[n][method]`` are ``(m_ok, p)``
    arrays over successful replications. In the summary, ``se`` is the mean
    within-chain batch-means MCSE and ``sd`` the standard deviation of the
    point estimates across replications.
    """

    config: StudyConfig
    names: tuple[str, ...]
    estimates: dict
    mcse: dict
    acceptance: dict
    failures: dict
    runtime: float

    def summary(self) -> list[dict]:
        truth = self.config.truth.to_vector()
        rows = []
        for n in self.config.sizes:
            for j, name in enumerate(self.names):
                for method in self.config.methods:
                    est = self.estimates[n][method]
                    ok = est.shape[0]
                    rows.append(
                        dict(
                            n=n,
                            parameter=name,
                            method=method,
                            bias=float(np.mean(est[:, j] - truth[j])) if ok else math.nan,
                            se=float(np.mean(self.mcse[n][method][:, j])) if ok else math.nan,
                            sd=float(np.std(est[:, j], ddof=1)) if ok > 1 else math.nan,
                            replications=ok,
                            failures=self.failures[n],
                        )
                    )
        return rows

    def cell(self, n: int, parameter: str, method: str) -> dict:
        for row in self.summary():
            if (row["n"], row["parameter"], row["method"]) == (n, parameter, method):
                return row
        raise KeyError((n, parameter, method))

    def to_csv(self) -> str:
        buf = io.StringIO()
        fields = ["n", "parameter", "method", "bias", "se", "sd", "replications", "failures"]
        w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
        w.writeheader()
        for row in self.summary():
            w.writerow({k: (f"{v:.8g}" if isinstance(v, float) else v) for k, v in row.items()})
        return buf.getvalue()

    def format_table(self) -> str:
        """Bias and SE per parameter and method, one block per sample size."""
        methods = self.config.methods
        rows = {(r["n"], r["parameter"], r["method"]): r for r in self.summary()}
        lines = []
        head = f"{'':>8}" + "".join(f"{m:>22}" for m in methods)
        sub = f"{'':>8}" + "".join(f"{'Bias':>11}{'SE':>11}" for _ in methods)
        for n in self.config.sizes:
            lines.append(f"n = {n}  (replications: {self.estimates[n][methods[0]].shape[0]},"
                         f" failures: {self.failures[n]})")
            lines += [head, sub]
            for name in self.names:
                cells = "".join(
                    f"{rows[(n, name, m)]['bias']:>11.5f}{rows[(n, name, m)]['se']:>11.5f}" for m in methods
                )
                lines.append(f"{name:>8}{cells}")
            lines.append("")
        return "\n".join(lines)


def run_study(cfg: StudyConfig, progress=None) -> StudyResult:
    """
    Run the repeated-sampling study.

    Parameters
    ----------
    cfg : StudyConfig
        Study settings.
    progress : callable, optional
        Called as ``progress(n, rep, ok)`` after each replication.

    Returns
    -------
    StudyResult
        A failing replication is counted in ``failures`` and left out of
        the aggregates.
    """
    t0 = time.perf_counter()
    names = cfg.truth.names
    estimates, mcse, acceptance, failures = {}, {}, {}, {}
    for n_index, n in enumerate(cfg.sizes):
        est_rows = {m: [] for m in cfg.methods}
        se_rows = {m: [] for m in cfg.methods}
        acc_rows = []
        failures[n] = 0
        for rep in range(cfg.m):
            try:
                est, se, acc = _replication(cfg, n, n_index, rep)
            except (ValueError, ArithmeticError, np.linalg.LinAlgError):
                failures[n] += 1
                ok = False
            else:
                ok = all(np.all(np.isfinite(est[m])) for m in cfg.methods)
                if ok:
                    for m in cfg.methods:
                        est_rows[m].append(est[m])
                        se_rows[m].append(se[m])
                    acc_rows.append(acc)
                else:
                    failures[n] += 1
            if progress is not None:
                progress(n, rep, ok)
        p = len(names)
        estimates[n] = {m: np.array(v).reshape(-1, p) for m, v in est_rows.items()}
        mcse[n] = {m: np.array(v).reshape(-1, p) for m, v in se_rows.items()}
        acceptance[n] = acc_rows
    return StudyResult(cfg, names, estimates, mcse, acceptance, failures, time.perf_counter() - t0)
