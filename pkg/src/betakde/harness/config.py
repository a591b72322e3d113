"""Experiment configuration: a validated, JSON-serialisable record."""

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields

from ..densities import density_from_spec
from ..exceptions import DomainError

TAGS = ("rate", "bias-floor", "sawtooth-bias", "log-factor", "lemma4-check", "bound-suite")


def _increasing(name, grid):
    if any(not (a < c) for a, c in zip(grid[:-1], grid[1:])):
        raise DomainError(f"{name} must be strictly increasing")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything an experiment run depends on.

    Grids are stored as tuples of floats (``n_grid`` as ints). ``tolerances``
    holds the pass/fail thresholds the run is judged by, so they travel with
    the config rather than living in code. ``cases`` is used by the
    bound suite only: a list of ``(density spec, p, b)`` triples.
    ``panels`` fixes the ``t``-rule size; ``None`` picks it from ``b``.
    ``gate_rtol`` is the refinement gate on exact functionals (``None`` to skip).
    """

    tag: str
    density: str = "uniform"
    n_grid: tuple = ()
    b_grid: tuple = ()
    p: float = 2.0
    beta: float = 2.0
    L: float = 1.0
    c: float = 1.0
    reps: int = 200
    seed: int = 0
    panels: int | None = None
    t_grid: tuple = ()
    mc_b_grid: tuple = ()
    draws: int = 100_000
    control_p: float | None = None
    n: int = 10_000
    cases: tuple = ()
    gate_rtol: float | None = 1e-6
    tolerances: dict = field(default_factory=dict)

    def __post_init__(self):
        conv = {
            "n_grid": tuple(int(v) for v in self.n_grid),
            "b_grid": tuple(float(v) for v in self.b_grid),
            "t_grid": tuple(float(v) for v in self.t_grid),
            "mc_b_grid": tuple(float(v) for v in self.mc_b_grid),
            "cases": tuple((str(s), float(p), float(b)) for s, p, b in self.cases),
            "tolerances": dict(sorted((str(k), float(v)) for k, v in self.tolerances.items())),
            "p": float(self.p),
            "beta": float(self.beta),
            "L": float(self.L),
            "c": float(self.c),
            "reps": int(self.reps),
            "seed": int(self.seed),
            "draws": int(self.draws),
            "n": int(self.n),
            "panels": None if self.panels is None else int(self.panels),
            "control_p": None if self.control_p is None else float(self.control_p),
            "gate_rtol": None if self.gate_rtol is None else float(self.gate_rtol),
        }
        for k, v in conv.items():
            object.__setattr__(self, k, v)
        self.validate()

    def validate(self):
        if self.tag not in TAGS:
            raise DomainError(f"unknown experiment tag {self.tag!r}; expected one of {', '.join(TAGS)}")
        _increasing("n_grid", self.n_grid)
        _increasing("b_grid", self.b_grid)
        _increasing("t_grid", self.t_grid)
        _increasing("mc_b_grid", self.mc_b_grid)
        if any(n < 1 for n in self.n_grid) or self.n < 1:
            raise DomainError("sample sizes must be >= 1")
        if any(not (0.0 < b < 1.0) for b in self.b_grid + self.mc_b_grid):
            raise DomainError("bandwidths must lie in (0, 1)")
        if any(not (0.0 <= t <= 1.0) for t in self.t_grid):
            raise DomainError("t_grid must lie in [0, 1]")
        if self.p < 1 or (self.control_p is not None and self.control_p < 1):
            raise DomainError("p must be >= 1")
        if not (self.beta > 0 and self.L > 0 and self.c > 0):
            raise DomainError("beta, L and c must be positive")
        if self.reps < 2 or self.draws < 2:
            raise DomainError("reps and draws must be >= 2")
        if not (0 <= self.seed < 2**64):
            raise DomainError("seed must be a 64-bit unsigned integer")
        if self.panels is not None and (self.panels < 2 or self.panels % 2):
            raise DomainError("panels must be even and >= 2")
        if self.gate_rtol is not None and not self.gate_rtol > 0:
            raise DomainError("gate_rtol must be positive")
        needs = {
            "rate": ("n_grid",),
            "bias-floor": ("b_grid",),
            "sawtooth-bias": ("b_grid",),
            "log-factor": ("b_grid",),
            "lemma4-check": ("b_grid",),
            "bound-suite": ("cases",),
        }[self.tag]
        for name in needs:
            if not getattr(self, name):
                raise DomainError(f"{self.tag} needs a non-empty {name}")
        # parse specs now so typos fail before any work is done
        if self.tag != "sawtooth-bias" and not self.density.startswith("sawtooth"):
            density_from_spec(self.density)
        for spec, p, b in self.cases:
            density_from_spec(spec, b=b)
            if p < 1:
                raise DomainError("case p must be >= 1")

    def to_dict(self):
        d = asdict(self)
        for k in ("n_grid", "b_grid", "t_grid", "mc_b_grid"):
            d[k] = list(d[k])
        d["cases"] = [list(c) for c in self.cases]
        return d

    def to_json(self):
        """Canonical JSON: sorted keys, no whitespace, so equal configs hash equally."""
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, d):
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise DomainError(f"unknown config keys: {', '.join(sorted(extra))}")
        if "tag" not in d:
            raise DomainError("config needs a 'tag'")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise DomainError(f"config is not valid JSON: {exc}") from None
        if not isinstance(d, dict):
            raise DomainError("config must be a JSON object")
        return cls.from_dict(d)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    @property
    def sha256(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()
