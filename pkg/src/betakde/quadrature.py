"""Composite Simpson rules for the t- and x-integrals.

Two rules are needed. Integrals over ``t`` (integrated bias, integrated
variance, ``L^p`` losses) use :class:`Quadrature`: uniform Simpson panels on
[0, 1] with optional geometric refinement of the first and last stretch, where
variance integrands vary on the scale ``b``. Integrals over ``x`` against a
kernel use :func:`kernel_rule`, which places Simpson panels on a window around
the kernel's mass and splits it at the integrand's breakpoints.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import BetaParams, beta_moments

__all__ = ["Quadrature", "kernel_rule", "kernel_rules", "simpson_weights"]

_EDGE_PANELS = 32


def simpson_weights(m, h):
    """Weights of composite Simpson with ``m`` (even) panels of width ``h``."""
    if m < 2 or m % 2:
        raise ValueError("Simpson needs an even, positive number of panels")
    w = np.full(m + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def _odd_near(x):
    k = int(round(x))
    return k if k % 2 else k + 1


@dataclass(frozen=True)
class Quadrature:
    """Composite Simpson rule on [0, 1].

    Parameters
    ----------
    panels : int
        Number of uniform panels (even); ``panels + 1`` uniform nodes.
    boundary_scale : float or None
        When set, the outer ``32`` panels at each end are replaced by octaves
        ``[e/2, e], [e/4, e/2], ...`` down to ``boundary_scale / 8``, each with
        ``sub_panels`` Simpson panels, so features of width
        ``boundary_scale`` at 0 and 1 are resolved.
    sub_panels : int
        Panels per refined octave (even).
    inner_nodes_per_sd, inner_min_panels : int
        Resolution handed to :func:`kernel_rule` for the ``x``-integrals that
        sit under each ``t`` node.
    """

    panels: int = 2000
    boundary_scale: float | None = None
    sub_panels: int = 16
    inner_nodes_per_sd: int = 24
    inner_min_panels: int = 256

    def __post_init__(self):
        if self.panels < 2 or self.panels % 2:
            raise ValueError("panels must be even and >= 2")
        if self.sub_panels < 2 or self.sub_panels % 2:
            raise ValueError("sub_panels must be even and >= 2")
        if self.boundary_scale is not None and not self.boundary_scale > 0:
            raise ValueError("boundary_scale must be positive")

    @classmethod
    def for_bandwidth(cls, b):
        """Default rule for bandwidth ``b``: ``G = max(2001, odd near 20/sqrt(b))``."""
        g = max(2001, _odd_near(20.0 / math.sqrt(b)))
        return cls(panels=g - 1, boundary_scale=b)

    def refined(self):
        """Same rule with every panel, in ``t`` and in ``x``, halved."""
        return Quadrature(
            2 * self.panels,
            self.boundary_scale,
            2 * self.sub_panels,
            2 * self.inner_nodes_per_sd,
            2 * self.inner_min_panels,
        )

    def inner_rule(self, t, b, breakpoints=(0.0, 1.0)):
        """Flattened :func:`kernel_rules` at this rule's inner resolution."""
        return kernel_rules(t, b, breakpoints, self.inner_nodes_per_sd, self.inner_min_panels)

    def _pieces(self):
        h = 1.0 / self.panels
        if self.boundary_scale is None or self.panels < 4 * _EDGE_PANELS:
            return [(0.0, 1.0, self.panels)]
        edge = _EDGE_PANELS * h
        cuts = [edge]
        while cuts[-1] > self.boundary_scale / 8.0:
            cuts.append(cuts[-1] / 2.0)
        cuts.append(0.0)
        left = [(cuts[i + 1], cuts[i], self.sub_panels) for i in range(len(cuts) - 1)][::-1]
        right = [(1.0 - hi, 1.0 - lo, m) for lo, hi, m in left[::-1]]
        middle = (edge, 1.0 - edge, self.panels - 2 * _EDGE_PANELS)
        return left + [middle] + right

    def _uniform_rule(self):
        nodes, weights, runs = [], [], []
        start = 0
        for lo, hi, m in self._pieces():
            h = (hi - lo) / m
            x = lo + h * np.arange(m + 1)
            x[-1] = hi
            w = simpson_weights(m, h)
            if nodes:
                weights[-1][-1] += w[0]
                x, w = x[1:], w[1:]
                runs.append((start - 1, start + x.size, h))
            else:
                runs.append((0, x.size, h))
            nodes.append(x)
            weights.append(w)
            start += x.size
        return np.concatenate(nodes), np.concatenate(weights), tuple(runs)

    def _split_rule(self, cuts):
        # every segment ends on a breakpoint of the integrand: smoothstep map
        xs, ws = [], []
        for a, c in zip(cuts[:-1], cuts[1:]):
            m = max(64, math.ceil(_PEAK_STRETCH * self.panels * (c - a)))
            m += m % 2
            x, w = _mapped_simpson(a, c, m)
            xs.append(x)
            ws.append(w)
        return np.concatenate(xs), np.concatenate(ws), ()

    @lru_cache(maxsize=32)
    def rule(self, breakpoints=(0.0, 1.0)):
        """``(nodes, weights, runs)`` for integrands with kinks at ``breakpoints``.

        Without interior breakpoints this is the uniform rule (plus boundary
        octaves). Otherwise [0, 1] is cut at every breakpoint and each
        segment gets a smoothstep-mapped Simpson rule, dense enough that no
        spacing exceeds the uniform one; ``runs`` is then empty because no stretch of
        nodes is uniformly spaced.
        """
        bp = np.unique(np.asarray(breakpoints, dtype=float))
        inner = bp[(bp > 0.0) & (bp < 1.0)]
        if inner.size == 0:
            return self._uniform_rule()
        return self._split_rule(np.concatenate([[0.0], inner, [1.0]]))

    @property
    def nodes(self):
        return self.rule()[0]

    @property
    def weights(self):
        return self.rule()[1]

    @property
    def runs(self):
        """``(start, stop, h)`` slices of ``nodes`` with uniform spacing ``h``."""
        return self.rule()[2]

    @property
    def size(self):
        return self.nodes.size

    def integrate(self, values, axis=-1, breakpoints=(0.0, 1.0)):
        w = self.rule(breakpoints)[1]
        return np.tensordot(np.asarray(values, dtype=float), w, axes=([axis], [0]))


# largest node spacing the map produces, relative to unmapped panels
_PEAK_STRETCH = 140.0 / 64.0


def _smoothstep(s):
    # septic: flat to third order at both ends, so |x - c|^beta becomes s^(4 beta)
    return s**4 * (35.0 + s * (-84.0 + s * (70.0 - 20.0 * s)))


def _smoothstep_prime(s):
    return 140.0 * s**3 * (1.0 - s) ** 3


def _mapped_simpson(a, c, m):
    """Simpson on ``[a, c]`` after the septic smoothstep; endpoints dropped (zero weight)."""
    length = c - a
    s = np.arange(1, m) / m
    w = simpson_weights(m, 1.0 / m)[1:-1]
    return a + length * _smoothstep(s), w * length * _smoothstep_prime(s)


def kernel_rules(t, b, breakpoints=(0.0, 1.0), nodes_per_sd=24, min_panels=256, width=40.0):
    """Nodes and weights for ``int_0^1 K_{t,b}(x) g(x) dx`` at many ``t`` at once.

    For each ``t`` the window is the kernel mean plus or minus ``width``
    standard deviations, clipped to [0, 1] and split at every breakpoint
    inside it. Each piece is mapped through a septic smoothstep, which
    removes endpoint singularities of the ``|x - c|^beta`` type, and gets
    Simpson panels at ``nodes_per_sd`` per kernel standard deviation with at
    least ``min_panels`` over the whole window. Piece endpoints carry zero
    weight and are left out, so every node is strictly inside (0, 1).

    Returns
    -------
    x, w : ndarray
        Flattened nodes and weights for all ``t``.
    owner : ndarray of int
        Index into ``t`` of each node.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    alpha = t / b + 1.0
    total = 1.0 / b + 2.0
    mean = alpha / total
    sd = np.sqrt(mean * (1.0 - mean) / (total + 1.0))
    lo = np.maximum(0.0, mean - width * sd)
    hi = np.minimum(1.0, mean + width * sd)
    bp = np.unique(np.asarray(breakpoints, dtype=float))
    i0 = np.searchsorted(bp, lo, side="right")
    i1 = np.searchsorted(bp, hi, side="left")
    counts = np.maximum(i1 - i0, 0) + 1
    owner_p = np.repeat(np.arange(t.size), counts)
    j = np.arange(owner_p.size) - np.repeat(np.cumsum(counts) - counts, counts)
    last = bp.size - 1
    a = np.where(j == 0, lo[owner_p], bp[np.clip(i0[owner_p] + j - 1, 0, last)])
    c = np.where(j == counts[owner_p] - 1, hi[owner_p], bp[np.clip(i0[owner_p] + j, 0, last)])
    length = c - a
    dens = np.maximum(nodes_per_sd / sd, min_panels / (hi - lo))
    m = np.maximum(8, np.ceil(dens[owner_p] * length).astype(np.int64))
    m += m % 2
    per = m - 1
    piece = np.repeat(np.arange(m.size), per)
    k = np.arange(piece.size) - np.repeat(np.cumsum(per) - per, per) + 1
    mp = m[piece]
    s = k / mp
    lp = length[piece]
    simpson = np.where(k % 2 == 1, 4.0, 2.0) / (3.0 * mp)
    x = a[piece] + lp * _smoothstep(s)
    w = simpson * lp * _smoothstep_prime(s)
    return x, w, owner_p[piece]


def kernel_rule(t, b, breakpoints=(0.0, 1.0), nodes_per_sd=24, min_panels=256, width=40.0):
    """Single-``t`` version of :func:`kernel_rules`; returns ``(x, w)``."""
    x, w, _ = kernel_rules(float(t), b, breakpoints, nodes_per_sd, min_panels, width)
    return x, w
