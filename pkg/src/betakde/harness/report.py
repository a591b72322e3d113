"""Experiment reports, least-squares slope fits, and CSV/JSON output."""

import csv
import io
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .. import __version__
from ..exceptions import DomainError
from .config import ExperimentConfig


def slope_fit(xs, ys):
    """Ordinary least squares of ``ln y`` on ``ln x``.

    Returns ``(slope, intercept, slope_stderr, r_squared)``. With two points
    the standard error is reported as 0.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise DomainError("need two equal-length 1-d sequences with at least 2 points")
    if np.any(x <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DomainError("slope_fit needs finite positive entries")
    lx, ly = np.log(x), np.log(y)
    dx = lx - lx.mean()
    sxx = float(dx @ dx)
    if sxx == 0.0:
        raise DomainError("x-grid is degenerate")
    dy = ly - ly.mean()
    slope = float(dx @ dy) / sxx
    intercept = float(ly.mean() - slope * lx.mean())
    resid = ly - (intercept + slope * lx)
    sse = float(resid @ resid)
    syy = float(dy @ dy)
    r2 = 1.0 if syy == 0.0 else max(0.0, 1.0 - sse / syy)
    se = math.sqrt(sse / (x.size - 2) / sxx) if x.size > 2 else 0.0
    return slope, intercept, se, r2


def format_value(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.17g}"


@dataclass(frozen=True)
class Table:
    columns: tuple
    rows: tuple

    def column(self, name):
        i = self.columns.index(name)
        return [r[i] for r in self.rows]


@dataclass(frozen=True)
class ExperimentReport:
    """Result of one experiment run.

    ``table`` is the main CSV body. ``x_column``, ``y_column`` and
    ``err_column`` name the columns behind :attr:`rows` and the slope fit.
    ``checks`` maps each criterion named in the config tolerances to pass/fail;
    ``summary`` carries any scalar diagnostics. ``extra`` holds secondary tables.
    """

    config: ExperimentConfig
    table: Table
    x_column: str | None = None
    y_column: str | None = None
    err_column: str | None = None
    slope: float | None = None
    intercept: float | None = None
    slope_stderr: float | None = None
    r_squared: float | None = None
    summary: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    @property
    def rows(self):
        """``(abscissa, value, stderr)`` triples; stderr is 0 for exact functionals."""
        if self.x_column is None:
            return []
        xs = self.table.column(self.x_column)
        ys = self.table.column(self.y_column)
        es = self.table.column(self.err_column) if self.err_column else [0.0] * len(xs)
        return list(zip(xs, ys, es))

    @property
    def passed(self):
        return all(self.checks.values())

    def metadata(self):
        return {
            "version": __version__,
            "tag": self.config.tag,
            "seed": self.config.seed,
            "config_sha256": self.config.sha256,
            "config": self.config.to_json(),
        }

    def to_csv(self, table=None):
        table = self.table if table is None else table
        return render_csv(table.columns, table.rows, self.metadata())

    def to_dict(self):
        def clean(v):
            if isinstance(v, (bool, np.bool_)):
                return bool(v)
            if isinstance(v, (int, np.integer)):
                return int(v)
            if isinstance(v, (float, np.floating)):
                v = float(v)
                return v if math.isfinite(v) else repr(v)
            return v

        return {
            "metadata": {**self.metadata(), "config": self.config.to_dict()},
            "x_column": self.x_column,
            "y_column": self.y_column,
            "slope": clean(self.slope),
            "intercept": clean(self.intercept),
            "slope_stderr": clean(self.slope_stderr),
            "r_squared": clean(self.r_squared),
            "summary": {k: clean(v) for k, v in self.summary.items()},
            "checks": {k: bool(v) for k, v in self.checks.items()},
            "passed": self.passed,
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    def write(self, out_dir):
        """Write ``<tag>.csv``, ``<tag>.json`` and one CSV per extra table; return the paths."""
        os.makedirs(out_dir, exist_ok=True)
        stem = self.config.tag
        paths = []
        for name, text in [(f"{stem}.csv", self.to_csv()), (f"{stem}.json", self.to_json())] + [
            (f"{stem}_{k}.csv", self.to_csv(t)) for k, t in sorted(self.extra.items())
        ]:
            path = os.path.join(out_dir, name)
            with open(path, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            paths.append(path)
        return paths


def render_csv(columns, rows, metadata):
    """CSV text with ``# key: value`` metadata lines above the header row."""
    buf = io.StringIO()
    for k, v in metadata.items():
        buf.write(f"# {k}: {v}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows([format_value(v) for v in r] for r in rows)
    return buf.getvalue()


def read_csv(text):
    """Parse :func:`render_csv` output into ``(metadata, columns, rows)``.

    Numeric cells become floats; anything else stays a string.
    """
    meta, lines = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            meta[key] = value
        elif line.strip():
            lines.append(line)
    if not lines:
        raise DomainError("CSV has no header row")
    body = list(csv.reader(lines))
    columns = tuple(body[0])

    def cell(s):
        try:
            return float(s)
        except ValueError:
            return s

    rows = [tuple(cell(s) for s in r) for r in body[1:]]
    if any(len(r) != len(columns) for r in rows):
        raise DomainError("CSV rows do not match the header")
    return meta, columns, rows


def config_from_csv(text):
    """Recover the :class:`ExperimentConfig` echoed in a report's CSV header."""
    meta, _, _ = read_csv(text)
    if "config" not in meta:
        raise DomainError("CSV header carries no config")
    return ExperimentConfig.from_json(meta["config"])
