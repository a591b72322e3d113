"""Exact risk functionals, Monte Carlo risk, and the bound checks.

Notation: ``B_t = E f_hat(t) - f(t)`` is the pointwise bias and
``Z_t = f_hat(t) - E f_hat(t)`` the centred stochastic term, so
``E Z_t^2 = (int K^2 f - (int K f)^2) / n``.
"""

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .estimator import BetaKernelDensity
from .exceptions import DomainError, QuadratureConvergenceError
from .quadrature import Quadrature
from .specfun import log_beta, make_rng

__all__ = [
    "LowerBoundReport",
    "RiskEstimate",
    "bias_at",
    "check_convergence",
    "dn",
    "integrated_bias",
    "integrated_variance_term",
    "kernel_moments",
    "lower_bound_check",
    "mc_centered_moment",
    "mc_risk",
    "moment_upper_bound",
    "variance_at",
    "worker_count",
]

WORKERS_ENV = "BETAKDE_WORKERS"


def _default_q(b, q):
    return Quadrature.for_bandwidth(b) if q is None else q


_NODE_BUDGET = 1 << 21


def kernel_moments(density, b, t, q=None):
    """``(int K_{t,b} f, int K_{t,b}^2 f)`` at each ``t`` by quadrature."""
    q = _default_q(b, q)
    t = np.atleast_1d(np.asarray(t, dtype=float))
    bp = density.breakpoints
    m1 = np.empty(t.size)
    m2 = np.empty(t.size)
    # nodes per t are bounded by the window resolution; size chunks from a probe
    probe = q.inner_rule(t[: min(t.size, 8)], b, bp)[0].size / min(t.size, 8)
    step = max(1, int(_NODE_BUDGET / max(probe, 1.0) / 2))
    for i in range(0, t.size, step):
        tc = t[i:i + step]
        x, w, owner = q.inner_rule(tc, b, bp)
        tt = tc[owner]
        u = tc / b
        lnb = log_beta(u + 1.0, (1.0 - tc) / b + 1.0)
        k = np.exp(tt / b * np.log(x) + (1.0 - tt) / b * np.log1p(-x) - lnb[owner])
        wf = w * density.pdf(x) * k
        m1[i:i + step] = np.bincount(owner, wf, minlength=tc.size)
        m2[i:i + step] = np.bincount(owner, wf * k, minlength=tc.size)
    return m1, m2


@lru_cache(maxsize=64)
def _grid_moments(density, b, q, cuts=None):
    nodes = q.rule(density.breakpoints if cuts is None else cuts)[0]
    m1, m2 = kernel_moments(density, b, nodes, q)
    f = density.pdf(nodes)
    for a in (m1, m2, f):
        a.flags.writeable = False
    return m1, m2, f


def _unwrap(out, t):
    return float(out[0]) if np.ndim(t) == 0 else out


def bias_at(density, b, t, q=None):
    """Pointwise bias ``int K_{t,b}(x) f(x) dx - f(t)``."""
    m1, _ = kernel_moments(density, b, t, q)
    return _unwrap(m1 - density.pdf(np.atleast_1d(t)), t)


def variance_at(density, b, n, t, q=None):
    """``E Z_t^2 = var(K_{t,b}(X_1)) / n`` by quadrature."""
    m1, m2 = kernel_moments(density, b, t, q)
    return _unwrap((m2 - m1 * m1) / n, t)


def integrated_bias(density, b, p, q=None):
    """``(int_0^1 |B_t|^p dt)^(1/p)``."""
    if p < 1:
        raise DomainError("p must be >= 1")
    q = _default_q(b, q)
    cuts = density.breakpoints
    m1, _, f = _grid_moments(density, b, q)
    bias = m1 - f
    if not (p == int(p) and int(p) % 2 == 0):
        # |B|^p has a kink wherever B changes sign; put a cut on each one
        roots = _sign_changes(density, b, q, q.rule(cuts)[0], bias)
        if roots.size:
            cuts = tuple(np.unique(np.concatenate([cuts, roots])).tolist())
            m1, _, f = _grid_moments(density, b, q, cuts)
            bias = m1 - f
    return float(q.integrate(np.abs(bias) ** p, breakpoints=cuts) ** (1.0 / p))


def _sign_changes(density, b, q, nodes, bias, noise=1e-9):
    scale = np.max(np.abs(bias), initial=0.0)
    if scale == 0.0:
        return np.empty(0)
    big = np.abs(bias) > noise * scale
    idx = np.flatnonzero(big)
    # consecutive significant values of opposite sign bracket a root
    flip = np.sign(bias[idx[1:]]) != np.sign(bias[idx[:-1]])
    lo, hi = idx[:-1][flip], idx[1:][flip]

    def g(t):
        return float(kernel_moments(density, b, t, q)[0][0] - density.pdf(t))

    return np.array([brentq(g, nodes[i], nodes[j], xtol=1e-15, rtol=1e-15) for i, j in zip(lo, hi)])


def integrated_variance_term(density, b, n, p, q=None):
    """``int_0^1 (E Z_t^2)^(p/2) dt`` (no ``2^-p`` factor)."""
    if p < 1:
        raise DomainError("p must be >= 1")
    q = _default_q(b, q)
    m1, m2, _ = _grid_moments(density, b, q)
    var = np.maximum(m2 - m1 * m1, 0.0) / n
    return float(q.integrate(var ** (p / 2.0), breakpoints=density.breakpoints))


def dn(b, p):
    """``int_{1/2}^{1-b} (1 - t)^(-p/4) dt`` in closed form."""
    if not (0.0 < b < 1.0) or p < 1:
        raise DomainError("need 0 < b < 1 and p >= 1")
    if b >= 0.5:
        return 0.0
    if p == 4:
        return float(np.log(1.0 / (2.0 * b)))
    e = 1.0 - p / 4.0
    return float((0.5**e - b**e) / e)


def check_convergence(fn, q, rtol=1e-6, atol=0.0):
    """Evaluate ``fn(q)`` and ``fn(q.refined())``; raise if they differ by more than ``rtol``.

    Differences are measured relative to ``max(|fine|, atol / rtol)``, so a
    quantity that is zero up to rounding passes once it is below ``atol``.
    Returns the value on ``q`` together with the observed relative change.
    """
    coarse = np.asarray(fn(q), dtype=float)
    fine = np.asarray(fn(q.refined()), dtype=float)
    floor = atol / rtol if rtol > 0 else 0.0
    scale = np.maximum(np.maximum(np.abs(fine), floor), np.finfo(float).tiny)
    change = float(np.max(np.abs(coarse - fine) / scale))
    if change > rtol:
        raise QuadratureConvergenceError(
            f"refining the quadrature moved the result by {change:.3g} (gate {rtol:g})"
        )
    return coarse, change


@dataclass(frozen=True)
class RiskEstimate:
    """Monte Carlo estimate of ``(E ||f_hat - f||_p^p)^(1/p)``.

    ``loss_mean`` and ``loss_stderr`` live on the ``p``-power scale;
    ``value`` and ``stderr`` on the root scale (delta method).
    """

    value: float
    stderr: float
    reps: int
    p: float
    loss_mean: float
    loss_stderr: float


def worker_count():
    """Worker processes for replications; ``BETAKDE_WORKERS`` or all cores."""
    env = os.environ.get(WORKERS_ENV)
    if env:
        n = int(env)
        if n < 1:
            raise ValueError(f"{WORKERS_ENV} must be >= 1")
        return n
    return os.cpu_count() or 1


def _replicate_losses(density, b, n, p, seed, q, indices):
    nodes, weights, runs = q.rule(density.breakpoints)
    f = density.pdf(nodes)
    est = BetaKernelDensity(bandwidth=b)
    out = np.empty(len(indices))
    for i, r in enumerate(indices):
        est.fit(density.sample(n, make_rng(seed, r)))
        fh = est.evaluate_on_runs(nodes, runs) if runs else est.evaluate_grid(nodes)
        out[i] = np.abs(fh - f) ** p @ weights
    return out


def _map_replications(worker, args, reps, workers):
    workers = worker_count() if workers is None else workers
    workers = max(1, min(workers, reps))
    blocks = [list(chunk) for chunk in np.array_split(np.arange(reps), workers) if chunk.size]
    if workers == 1:
        return worker(*args, blocks[0])
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = pool.map(worker, *zip(*[(*args, blk) for blk in blocks]))
        return np.concatenate(list(parts))


def mc_risk(density, b, n, p, reps, seed, q=None, workers=None):
    """Monte Carlo ``L^p`` risk of the beta kernel estimator.

    Replication ``r`` draws its sample from stream ``(seed, r)``; the loss
    ``||f_hat - f||_p^p`` uses the same Simpson rule ``q`` as the exact
    functionals. Losses are reduced in replication order, so the result does
    not depend on ``workers``.
    """
    if reps < 2:
        raise DomainError("reps must be >= 2")
    if p < 1:
        raise DomainError("p must be >= 1")
    q = _default_q(b, q)
    losses = _map_replications(_replicate_losses, (density, b, n, p, seed, q), reps, workers)
    mean = float(np.mean(losses))
    se_p = float(np.std(losses, ddof=1) / np.sqrt(reps))
    value = mean ** (1.0 / p)
    se = se_p / (p * value ** (p - 1.0)) if value > 0 else 0.0
    return RiskEstimate(value, se, reps, float(p), mean, se_p)


def _replicate_pointwise(density, b, n, t, seed, indices):
    est = BetaKernelDensity(bandwidth=b)
    out = np.empty((len(indices), t.size))
    for i, r in enumerate(indices):
        out[i] = est.fit(density.sample(n, make_rng(seed, r))).evaluate(t)
    return out


def mc_centered_moment(density, b, n, t, p, reps, seed, q=None, workers=None):
    """Monte Carlo ``E |Z_t|^p`` at each ``t`` with its standard error.

    The centring ``E f_hat(t)`` is the exact ``int K_{t,b} f``.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    m1, _ = kernel_moments(density, b, t, q)
    vals = _map_replications(_replicate_pointwise, (density, b, n, t, seed), reps, workers)
    z = np.abs(vals - m1) ** p
    return z.mean(axis=0), z.std(axis=0, ddof=1) / np.sqrt(reps)


def moment_upper_bound(v, sup_norm, n, p):
    """Shape of the moment bound for a mean of ``n`` centred i.i.d. terms.

    ``(v/n)^(p/2)`` for ``p <= 2``; ``v sup^(p-2) / n^(p-1) + (v/n)^(p/2)`` for
    ``p > 2``. The multiplicative constant is taken as 1.
    """
    if v < 0 or sup_norm < 0:
        raise DomainError("v and sup_norm must be >= 0")
    base = (v / n) ** (p / 2.0)
    if p <= 2:
        return base
    return v * sup_norm ** (p - 2.0) / n ** (p - 1.0) + base


@dataclass(frozen=True)
class LowerBoundReport:
    """Outcome of the two convexity lower bounds against an MC risk."""

    risk_p_upper: float
    bias_bound: float
    variance_bound: float
    bias_ok: bool
    variance_ok: bool

    @property
    def bias_margin(self):
        return self.risk_p_upper - self.bias_bound

    @property
    def variance_margin(self):
        return self.risk_p_upper - self.variance_bound

    @property
    def ok(self):
        return self.bias_ok and self.variance_ok


def lower_bound_check(density, b, n, p, mc, q=None, slack=4.0):
    """Check ``E||f_hat - f||_p^p >= int |B_t|^p`` and ``>= 2^-p int (E Z_t^2)^(p/2)``.

    The MC side is allowed ``slack`` standard errors (on the ``p``-power
    scale). Failures are reported, not raised.
    """
    if mc.p != p:
        raise ValueError("mc was produced with a different p")
    upper = mc.loss_mean + slack * mc.loss_stderr
    bias_bound = integrated_bias(density, b, p, q) ** p
    var_bound = 2.0**-p * integrated_variance_term(density, b, n, p, q)
    return LowerBoundReport(upper, bias_bound, var_bound, upper >= bias_bound, upper >= var_bound)
