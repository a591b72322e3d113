"""Beta kernel density estimator on [0, 1]."""

import math
import numbers

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import DomainError
from .specfun import log_beta

__all__ = ["BetaKernelDensity", "theoretical_bandwidth"]

# max change of log K over one recurrence chunk; keeps rescaled terms finite
_MAX_DRIFT = 600.0
_CHUNK_ELEMENTS = 1 << 22


def theoretical_bandwidth(n, beta, c=1.0):
    """Rate-optimal bandwidth ``c * n^(-2/(2 beta + 1))``.

    Raises
    ------
    DomainError
        If the result is not in (0, 1), e.g. ``c`` too large for ``n``.
    """
    if not (isinstance(n, numbers.Integral) and n >= 1):
        raise DomainError("n must be a positive integer")
    if not (beta > 0 and c > 0):
        raise DomainError("beta and c must be positive")
    b = c * float(n) ** (-2.0 / (2.0 * beta + 1.0))
    if not (0.0 < b < 1.0):
        raise DomainError(f"bandwidth {b!r} not in (0, 1); increase n or lower c")
    return b


def _validate_sample(X):
    X = check_array(X, ensure_2d=False, dtype=np.float64)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single feature, got shape {X.shape}")
        X = X[:, 0]
    if X.size == 0:
        raise ValueError("empty sample")
    if np.any((X < 0.0) | (X > 1.0)):
        raise DomainError("sample points must lie in [0, 1]")
    return X


class BetaKernelDensity(BaseEstimator):
    """Beta kernel density estimator.

    ``f_hat(t) = mean_k K_{t,b}(X_k)`` where ``K_{t,b}`` is the
    ``Beta(t/b + 1, (1 - t)/b + 1)`` density. The kernel changes shape with
    ``t`` and never puts mass outside [0, 1].

    Parameters
    ----------
    bandwidth : float, default=0.05
        Smoothing parameter ``b`` in (0, 1). The kernel's spread at ``t`` is
        about ``sqrt(b t (1 - t))``.

    Attributes
    ----------
    sample_ : ndarray of shape (n_samples,)
        Training points, in the order given.
    n_samples_ : int
    """

    def __init__(self, bandwidth=0.05):
        self.bandwidth = bandwidth

    def fit(self, X, y=None):
        b = self.bandwidth
        if not (isinstance(b, numbers.Real) and 0.0 < b < 1.0):
            raise DomainError(f"bandwidth must lie in (0, 1), got {b!r}")
        X = _validate_sample(X)
        self.sample_ = X
        self.n_samples_ = X.size
        inner = X[(X > 0.0) & (X < 1.0)]
        self._log_x = np.log(inner)
        self._log_1mx = np.log1p(-inner)
        self._n_at_0 = int(np.count_nonzero(X == 0.0))
        self._n_at_1 = int(np.count_nonzero(X == 1.0))
        return self

    def _endpoint_mass(self, t):
        # K_{t,b}(0) is non-zero only for t = 0, K_{t,b}(1) only for t = 1
        peak = 1.0 / self.bandwidth + 1.0
        return peak * (self._n_at_0 * (t == 0.0) + self._n_at_1 * (t == 1.0))

    def _kernel_sums(self, t):
        b = self.bandwidth
        u, v = t / b, (1.0 - t) / b
        lnb = log_beta(u + 1.0, v + 1.0)
        out = np.empty(t.size)
        rows = max(1, _CHUNK_ELEMENTS // max(1, self._log_x.size))
        for i in range(0, t.size, rows):
            sl = slice(i, i + rows)
            z = np.multiply.outer(u[sl], self._log_x)
            z += np.multiply.outer(v[sl], self._log_1mx)
            z -= lnb[sl, None]
            np.exp(z, out=z)
            out[sl] = z.sum(axis=1)
        return out + self._endpoint_mass(t)

    def evaluate(self, t):
        """Estimate at ``t`` (scalar or array) in [0, 1]."""
        check_is_fitted(self, "sample_")
        t = np.asarray(t, dtype=float)
        if np.any(~(t >= 0.0) | ~(t <= 1.0)):
            raise DomainError("t must lie in [0, 1]")
        out = self._kernel_sums(t.reshape(-1)) / self.n_samples_
        return float(out[0]) if t.ndim == 0 else out.reshape(t.shape)

    def evaluate_grid(self, grid):
        """Estimate on a sorted grid in [0, 1]; exact ``O(n G)`` summation."""
        grid = np.asarray(grid, dtype=float)
        if grid.ndim != 1:
            raise DomainError("grid must be one-dimensional")
        if np.any(np.diff(grid) < 0):
            raise DomainError("grid must be sorted in increasing order")
        return self.evaluate(grid)

    def score_samples(self, X):
        """Log of the estimate at each row of ``X`` (sklearn convention)."""
        X = _validate_sample(X)
        with np.errstate(divide="ignore"):
            return np.log(self.evaluate(X))

    def score(self, X, y=None):
        return float(np.sum(self.score_samples(X)))

    def evaluate_on_runs(self, nodes, runs):
        """Estimate at ``nodes`` made of uniform runs ``(start, stop, h)``.

        Along a run the kernel obeys
        ``K_{t+h}(x) = K_t(x) exp(h logit(x) / b) B_t / B_{t+h}``, so each
        chunk needs one exact row of exponentials and then only products.
        Chunks are cut so that no term's log moves by more than
        ``_MAX_DRIFT``, which bounds both overflow and the loss from terms
        that underflow at a chunk start. Agrees with :meth:`evaluate` to
        rounding.
        """
        check_is_fitted(self, "sample_")
        nodes = np.asarray(nodes, dtype=float)
        b = self.bandwidth
        lnb = log_beta(nodes / b + 1.0, (1.0 - nodes) / b + 1.0)
        logit = self._log_x - self._log_1mx
        umax = float(np.abs(logit).max()) if logit.size else 0.0
        out = np.empty(nodes.size)
        for start, stop, h in runs:
            jumps = np.abs(np.diff(lnb[start:stop]))
            step = h * umax / b + (float(jumps.max()) if jumps.size else 0.0)
            length = max(1, int(_MAX_DRIFT / step)) if step > 0 else stop - start
            ratio = np.exp((h / b) * logit)
            for c0 in range(start, stop, length):
                c1 = min(c0 + length, stop)
                t0 = nodes[c0]
                p = np.exp((t0 / b) * self._log_x + ((1.0 - t0) / b) * self._log_1mx - lnb[c0])
                out[c0] = p.sum()
                for j in range(c0 + 1, c1):
                    p *= ratio
                    out[j] = p.sum() * math.exp(lnb[c0] - lnb[j])
        out += self._endpoint_mass(nodes)
        return out / self.n_samples_
