"""
Finding the observation that moves the posterior most.

The example series in ``data/example_returns.csv`` has Student-t errors and
a planted crash of eight unconditional standard deviations at observation
600. We fit a Student-t GJR-GARCH model and rank observations by the
Kullback-Leibler divergence between the full posterior and the posterior
with that observation deleted. The same analysis is available from the
command line as ``gjrzv fit`` followed by ``gjrzv diagnose``.

Run with ``python3 demos/02_influential_observations.py`` (under a minute).
"""

from pathlib import Path

from gjrzv import GjrPosterior, HmcConfig, hmc_sample
from gjrzv.cli import ingest
from gjrzv.diagnostics import influence

data = Path(__file__).resolve().parent.parent / "data" / "example_returns.csv"
dates, x = ingest(data, mode="returns")
post = GjrPosterior(x, "t")
chain = hmc_sample(post, HmcConfig(n_draws=1500, n_burnin=1000, seed=3), post.initial_point())

report = influence(chain, post)
print(f"{'rank':>4} {'t':>5} {'date':>11} {'return':>9} {'KL':>8} {'share':>6}")
for rank, i in enumerate(report.top(5), start=1):
    print(f"{rank:>4} {i + 1:>5} {dates[i]:>11} {x[i]:9.3f} {report.kl[i]:8.4f} {report.proportion[i]:6.2f}")
