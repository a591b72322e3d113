"""The beta kernel ``K_{t,b}`` and its closed-form functionals.

``K_{t,b}`` is the ``Beta(t/b + 1, (1 - t)/b + 1)`` density: a smoothing
kernel on [0, 1] whose mode sits at the evaluation point ``t``.
"""

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .specfun import (
    BetaParams,
    beta_logpdf,
    beta_moments,
    beta_sample,
    log_beta,
    r_function,
)

__all__ = [
    "BetaKernel",
    "a_b",
    "a_b_r_form",
    "c_factor",
    "c_factor_asymptotic",
]

_LOG_2PI = np.log(2.0 * np.pi)


def _check_bandwidth(b):
    # b = 1 is admitted: the kernel is still a proper beta density there
    if not (np.isfinite(b) and 0.0 < b <= 1.0):
        raise DomainError(f"bandwidth must lie in (0, 1], got {b!r}")


def _check_t(t, closed=True):
    t = np.asarray(t, dtype=float)
    if closed:
        bad = ~(t >= 0.0) | ~(t <= 1.0)
    else:
        bad = ~(t > 0.0) | ~(t < 1.0)
    if np.any(bad):
        interval = "[0, 1]" if closed else "(0, 1)"
        raise DomainError(f"t must lie in {interval}")
    return t


@dataclass(frozen=True)
class BetaKernel:
    """Beta kernel with mode ``t`` in [0, 1] and bandwidth ``b`` in (0, 1]."""

    t: float
    b: float

    def __post_init__(self):
        _check_bandwidth(self.b)
        _check_t(self.t)

    @property
    def shapes(self):
        return BetaParams(self.t / self.b + 1.0, (1.0 - self.t) / self.b + 1.0)

    def logpdf(self, x):
        return beta_logpdf(self.shapes, x)

    def evaluate(self, x):
        """Kernel density at ``x``; exact zero where an exponent is positive."""
        return np.exp(self.logpdf(x))

    def mean_shift(self):
        """``E(xi) - t`` for ``xi ~ K_{t,b}``, equal to ``b (1 - 2t) / (1 + 2b)``."""
        return self.b * (1.0 - 2.0 * self.t) / (1.0 + 2.0 * self.b)

    def variance(self):
        return beta_moments(self.shapes)[1]

    def delta1(self):
        """Second-order part of the mean shift beyond ``b (1 - 2t)``."""
        b = self.b
        return -2.0 * b * b * (1.0 - 2.0 * self.t) / (1.0 + 2.0 * b)

    def delta2(self):
        """Second-order part of the variance beyond ``b t (1 - t)``."""
        # expanded so the O(b) terms cancel symbolically
        b, t = self.b, self.t
        tt = t * (1.0 - t)
        num = 1.0 + b - tt * (7.0 + 16.0 * b + 12.0 * b * b)
        return b * b * num / ((1.0 + 2.0 * b) ** 2 * (1.0 + 3.0 * b))

    def peak_height(self):
        """``K_{t,b}(t)`` through the Stirling ratio; requires ``0 < t < 1``."""
        t, b = self.t, self.b
        _check_t(t, closed=False)
        num = r_function(t / b) * r_function((1.0 - t) / b) * np.sqrt(b) * (1.0 + 1.0 / b)
        return float(num / (r_function(1.0 / b) * np.sqrt(2.0 * np.pi * t * (1.0 - t))))

    def sample(self, rng, size=None):
        return beta_sample(self.shapes, rng, size)


def a_b(t, b):
    """Squared-kernel mass ``A_b(t) = int K_{t,b}(x)^2 dx``.

    Vectorised over ``t``. Equals
    ``B(2t/b + 1, 2(1-t)/b + 1) / B(t/b + 1, (1-t)/b + 1)^2``.
    """
    _check_bandwidth(b)
    t = _check_t(t)
    u, v = t / b, (1.0 - t) / b
    out = np.exp(log_beta(2.0 * u + 1.0, 2.0 * v + 1.0) - 2.0 * log_beta(u + 1.0, v + 1.0))
    return float(out) if np.ndim(out) == 0 else out


def c_factor(b):
    """Exact prefactor of the Stirling-ratio form of ``A_b``.

    ``c(b) = b (1 + 1/b)^2 (1 + 1/(2/b + 1))^(2/b + 1) / (e sqrt(2 pi (2/b + 1)))``.
    Behaves like ``b^(-1/2) / (2 sqrt(pi))`` as ``b -> 0``.
    """
    _check_bandwidth(b)
    s = 2.0 / b + 1.0
    log_c = (
        -1.0 - 0.5 * _LOG_2PI + np.log(b) + 2.0 * np.log1p(1.0 / b)
        - 0.5 * np.log(s) + s * np.log1p(1.0 / s)
    )
    return float(np.exp(log_c))


def c_factor_asymptotic(b):
    """``e^-1 b (1 + 1/b)^(3/2) (1 + (2/b + 5/2)^-1)^(2/b + 3) / (2 sqrt(pi))``.

    Agrees with :func:`c_factor` up to a relative ``O(b^3)`` term.
    """
    _check_bandwidth(b)
    log_c = (
        -1.0 - np.log(2.0 * np.sqrt(np.pi)) + np.log(b) + 1.5 * np.log1p(1.0 / b)
        + (2.0 / b + 3.0) * np.log1p(1.0 / (2.0 / b + 2.5))
    )
    return float(np.exp(log_c))


def a_b_r_form(t, b):
    """``A_b(t)`` rebuilt from ``c(b)`` and Stirling ratios; needs ``0 < t < 1``."""
    _check_bandwidth(b)
    t = _check_t(t, closed=False)
    R = r_function
    u, v = t / b, (1.0 - t) / b
    ratio = (
        R(u) ** 2 * R(v) ** 2 * R(2.0 / b + 1.0)
        / (R(2.0 * u) * R(2.0 * v) * R(1.0 / b + 1.0) ** 2)
    )
    out = c_factor(b) * ratio / np.sqrt(t * (1.0 - t))
    return float(out) if np.ndim(out) == 0 else out
