"""Test densities on [0, 1] and Hölder-class membership checks.

``Uniform``, ``Linear`` and ``Sawtooth`` are the extremal densities used to
show where beta kernel estimators lose minimaxity; ``Cosine`` is a fixed
smooth density for rate experiments (the sawtooth changes with ``b``).
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

__all__ = [
    "Cosine",
    "HolderClass",
    "Linear",
    "Sawtooth",
    "Uniform",
    "declared_memberships",
    "density_from_spec",
    "holder_seminorm",
]


def _check_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x >= 0.0) | ~(x <= 1.0)):
        raise DomainError("x must lie in [0, 1]")
    return x


def _out(values, like):
    return float(values) if np.ndim(like) == 0 else values


def _rejection_sample(density, envelope, n, rng):
    out = np.empty(n)
    filled = 0
    while filled < n:
        m = max(16, int(1.25 * (n - filled) * envelope))
        x = rng.random(m)
        u = rng.random(m)
        keep = x[u * envelope <= density.pdf(x)]
        take = min(keep.size, n - filled)
        out[filled:filled + take] = keep[:take]
        filled += take
    return out


class _Density:
    breakpoints = (0.0, 1.0)

    def derivative(self, x, order=0):
        if order == 0:
            return self.pdf(x)
        raise DomainError(f"{self.spec} has no derivative of order {order}")


@dataclass(frozen=True)
class Uniform(_Density):
    """``f(x) = 1`` on [0, 1]."""

    def pdf(self, x):
        x = _check_x(x)
        return _out(np.ones_like(x), x)

    def derivative(self, x, order=0):
        if order == 0:
            return self.pdf(x)
        x = _check_x(x)
        return _out(np.zeros_like(x), x)

    def cdf(self, x):
        return _check_x(x) * 1.0

    def sample(self, n, rng):
        return rng.random(n)

    @property
    def spec(self):
        return "uniform"


@dataclass(frozen=True)
class Linear(_Density):
    """``f(x) = 2x`` on [0, 1]."""

    def pdf(self, x):
        x = _check_x(x)
        return 2.0 * x

    def derivative(self, x, order=0):
        if order == 0:
            return self.pdf(x)
        x = _check_x(x)
        return _out(np.full_like(x, 2.0 if order == 1 else 0.0), x)

    def cdf(self, x):
        x = _check_x(x)
        return x * x

    def inverse_cdf(self, u):
        return np.sqrt(u)

    def sample(self, n, rng):
        return self.inverse_cdf(rng.random(n))

    @property
    def spec(self):
        return "linear"


@dataclass(frozen=True)
class Cosine(_Density):
    """``f(x) = 1 + a cos(2 pi x)`` with ``0 < a < 1``.

    Belongs to the Hölder class with ``beta = 2`` and ``L = 4 pi^2 a``.
    """

    a: float = 0.1

    def __post_init__(self):
        if not (0.0 < self.a < 1.0):
            raise DomainError(f"cosine amplitude must lie in (0, 1), got {self.a!r}")

    def pdf(self, x):
        x = _check_x(x)
        return 1.0 + self.a * np.cos(2.0 * np.pi * x)

    def derivative(self, x, order=0):
        x = _check_x(x)
        if order == 0:
            return self.pdf(x)
        w = 2.0 * np.pi
        return self.a * w**order * np.cos(w * x + order * np.pi / 2.0)

    def cdf(self, x):
        x = _check_x(x)
        return x + self.a * np.sin(2.0 * np.pi * x) / (2.0 * np.pi)

    def sample(self, n, rng):
        return _rejection_sample(self, 1.0 + self.a, n, rng)

    @property
    def spec(self):
        return f"cosine:a={self.a!r}"


@dataclass(frozen=True)
class Sawtooth(_Density):
    """Alternating-bump density tied to a bandwidth ``b``.

    On cell ``k`` (``[(k-1)/(2N), k/(2N))``, the last one closed) the density is
    ``1 + L_beta (-1)^(k+1) ((4N)^-beta - |x - t_k|^beta)`` with
    ``t_k = (2k - 1)/(4N)``, ``N = floor(b^(-1/2) / 20)`` and
    ``L_beta = (L/2) min(1, 1/beta)``. Needs ``b <= 1/400`` so that ``N >= 1``.
    """

    beta: float
    L: float
    b: float
    n_bumps: int = field(init=False, repr=False)
    amplitude: float = field(init=False, repr=False)

    def __post_init__(self):
        if not (0.0 < self.beta <= 2.0):
            raise DomainError(f"sawtooth beta must lie in (0, 2], got {self.beta!r}")
        if not (self.L > 0.0):
            raise DomainError("sawtooth L must be > 0")
        if not (0.0 < self.b < 1.0):
            raise DomainError("sawtooth b must lie in (0, 1)")
        # tolerance guards exact integers such as b = 1e-4 -> 5
        n = math.floor(self.b ** -0.5 / 20.0 * (1.0 + 1e-12))
        if n < 1:
            raise DomainError(f"sawtooth needs b <= 1/400 (N >= 1), got b={self.b!r}")
        object.__setattr__(self, "n_bumps", n)
        object.__setattr__(self, "amplitude", 0.5 * self.L * min(1.0, 1.0 / self.beta))

    @property
    def height(self):
        """Bump height ``(4N)^-beta``; the density ranges over ``1 +/- L_beta * height``."""
        return (4.0 * self.n_bumps) ** -self.beta

    @property
    def centers(self):
        n2 = 2 * self.n_bumps
        return (2.0 * np.arange(1, n2 + 1) - 1.0) / (4.0 * self.n_bumps)

    @property
    def breakpoints(self):
        n2 = 2 * self.n_bumps
        edges = np.arange(n2 + 1) / n2
        return tuple(np.sort(np.concatenate([edges, self.centers])))

    def _cell(self, x):
        n2 = 2 * self.n_bumps
        k = np.minimum(np.floor(x * n2).astype(int) + 1, n2)
        sign = np.where(k % 2 == 1, 1.0, -1.0)
        offset = x - (2.0 * k - 1.0) / (4.0 * self.n_bumps)
        return k, sign, offset

    def pdf(self, x):
        x = _check_x(x)
        _, sign, offset = self._cell(x)
        out = 1.0 + self.amplitude * sign * (self.height - np.abs(offset) ** self.beta)
        return _out(out, x)

    def derivative(self, x, order=0):
        if order == 0:
            return self.pdf(x)
        if order != 1 or self.beta <= 1.0:
            raise DomainError(
                f"sawtooth with beta={self.beta} has no derivative of order {order}"
            )
        x = _check_x(x)
        _, sign, offset = self._cell(x)
        out = -self.amplitude * sign * self.beta * np.sign(offset) * np.abs(offset) ** (self.beta - 1.0)
        return _out(out, x)

    def cdf(self, x):
        x = _check_x(x)
        k, sign, offset = self._cell(x)
        n2 = 2 * self.n_bumps
        h, bp1 = self.height, self.beta + 1.0
        half = 1.0 / (4.0 * self.n_bumps)
        # odd cells add +c, even cells -c; full pairs cancel
        c = h / n2 - 2.0 * half**bp1 / bp1
        full_odd_excess = np.where((k - 1) % 2 == 1, c, 0.0)
        G_x = np.sign(offset) * np.abs(offset) ** bp1 / bp1
        G_a = -(half**bp1) / bp1
        partial = h * (offset + half) - (G_x - G_a)
        out = x + self.amplitude * (full_odd_excess + sign * partial)
        return _out(out, x)

    def sample(self, n, rng):
        return _rejection_sample(self, 1.0 + self.amplitude * self.height, n, rng)

    @property
    def spec(self):
        return f"sawtooth:beta={self.beta!r},L={self.L!r}"


@dataclass(frozen=True)
class HolderClass:
    """Hölder class ``Sigma(beta, L)``; ``m`` is the largest integer below ``beta``."""

    beta: float
    L: float

    def __post_init__(self):
        if not (self.beta > 0 and self.L > 0):
            raise DomainError("Hölder class needs beta > 0 and L > 0")

    @property
    def m(self):
        return math.ceil(self.beta) - 1

    def contains(self, density, grid_size=10_000):
        return holder_seminorm(density, self, grid_size) <= self.L


def holder_seminorm(density, cls, grid_size=10_000, chunk=256):
    """Largest Hölder quotient of ``density``'s ``m``-th derivative on a grid.

    Returns ``max |f^(m)(x) - f^(m)(y)| / |x - y|^(beta - m)`` over distinct
    pairs of a uniform ``grid_size``-point grid on [0, 1].
    """
    if grid_size < 10:
        raise DomainError("grid_size must be >= 10")
    x = np.linspace(0.0, 1.0, grid_size)
    v = np.asarray(density.derivative(x, cls.m), dtype=float)
    gamma = cls.beta - cls.m
    best = 0.0
    for start in range(0, grid_size - 1, chunk):
        stop = min(start + chunk, grid_size - 1)
        xi, vi = x[start:stop, None], v[start:stop, None]
        xj, vj = x[None, start + 1:], v[None, start + 1:]
        dx = xj - xi
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.abs(vj - vi) / np.abs(dx) ** gamma
        q[dx <= 0] = 0.0
        best = max(best, float(q.max()))
    return best


def declared_memberships():
    """Every ``(density, HolderClass)`` pair the experiments rely on.

    Sawtooth instances are listed at each bandwidth used by the sawtooth and
    bound-suite runs, since their bump count depends on ``b``.
    """
    pairs = [(Uniform(), HolderClass(beta, 1.0)) for beta in (0.5, 1.0, 1.5, 2.0, 2.5, 3.0)]
    pairs += [(Linear(), HolderClass(beta, 1.0)) for beta in (2.5, 3.0, 4.0)]
    pairs.append((Cosine(0.1), HolderClass(2.0, 4.0 * math.pi**2 * 0.1)))
    pairs += [
        (Sawtooth(beta, 1.0, b), HolderClass(beta, 1.0))
        for beta in (0.5, 1.5)
        for b in (1e-3, 1e-4, 1e-5)
    ]
    return pairs


def _parse_kv(body):
    out = {}
    for item in filter(None, body.split(",")):
        if "=" not in item:
            raise ValueError(f"expected key=value, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = float(v)
    return out


def density_from_spec(spec, b=None):
    """Build a density from ``uniform``, ``linear``, ``cosine:a=0.1`` or
    ``sawtooth:beta=1.5,L=1``. The sawtooth takes ``b`` from the caller."""
    name, _, body = spec.strip().partition(":")
    params = _parse_kv(body)
    name = name.lower()
    if name == "uniform" and not params:
        return Uniform()
    if name == "linear" and not params:
        return Linear()
    if name == "cosine":
        return Cosine(params.get("a", 0.1))
    if name == "sawtooth":
        if b is None:
            raise ValueError("sawtooth density needs the run's bandwidth b")
        if set(params) - {"beta", "L"}:
            raise ValueError(f"unknown sawtooth parameters in {spec!r}")
        return Sawtooth(params.get("beta", 1.0), params.get("L", 1.0), b)
    raise ValueError(f"unrecognised density spec {spec!r}")
