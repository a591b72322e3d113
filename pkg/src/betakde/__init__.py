"""Beta kernel density estimation on [0, 1] with exact risk functionals."""

__version__ = "0.1.0"

from .densities import (
    Cosine,
    HolderClass,
    Linear,
    Sawtooth,
    Uniform,
    declared_memberships,
    density_from_spec,
    holder_seminorm,
)
from .estimator import BetaKernelDensity, theoretical_bandwidth
from .exceptions import DomainError, QuadratureConvergenceError
from .kernel import BetaKernel, a_b, a_b_r_form, c_factor
from .quadrature import Quadrature
from .risk import (
    RiskEstimate,
    bias_at,
    dn,
    integrated_bias,
    integrated_variance_term,
    lower_bound_check,
    mc_risk,
    variance_at,
)
from .specfun import BetaParams, beta_logpdf, beta_moments, beta_sample, log_beta, log_gamma, make_rng, r_function

__all__ = [
    "BetaKernel",
    "BetaKernelDensity",
    "BetaParams",
    "Cosine",
    "DomainError",
    "HolderClass",
    "Linear",
    "Quadrature",
    "QuadratureConvergenceError",
    "RiskEstimate",
    "Sawtooth",
    "Uniform",
    "a_b",
    "a_b_r_form",
    "beta_logpdf",
    "beta_moments",
    "beta_sample",
    "bias_at",
    "c_factor",
    "declared_memberships",
    "density_from_spec",
    "dn",
    "holder_seminorm",
    "integrated_bias",
    "integrated_variance_term",
    "log_beta",
    "log_gamma",
    "make_rng",
    "lower_bound_check",
    "mc_risk",
    "r_function",
    "theoretical_bandwidth",
    "variance_at",
]
