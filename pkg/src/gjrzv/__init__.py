"""
Bayesian GJR-GARCH(1,1) with Hamiltonian and random-walk samplers,
zero-variance control variates, case-deletion influence and model
comparison criteria.
"""

from gjrzv.criteria import CriteriaReport, chain_criteria, compute_criteria, pointwise_loglik
from gjrzv.diagnostics import InfluenceReport, influence, influence_proportions, kl_estimates
from gjrzv.distributions import ErrorDist
from gjrzv.model import DataError, GjrParams, GjrPosterior, PriorSpec
from gjrzv.samplers import ChainSample, HmcConfig, RwmConfig, hmc_sample, rwm_sample
from gjrzv.simulate import StudyConfig, StudyResult, run_study, simulate_series
from gjrzv.zv import ZvEstimate, estimate

__version__ = "0.1.0"

__all__ = [
    "ChainSample",
    "CriteriaReport",
    "DataError",
    "ErrorDist",
    "GjrParams",
    "GjrPosterior",
    "HmcConfig",
    "InfluenceReport",
    "PriorSpec",
    "RwmConfig",
    "StudyConfig",
    "StudyResult",
    "ZvEstimate",
    "chain_criteria",
    "compute_criteria",
    "estimate",
    "hmc_sample",
    "influence",
    "influence_proportions",
    "kl_estimates",
    "pointwise_loglik",
    "rwm_sample",
    "run_study",
    "simulate_series",
]
