"""End-to-end acceptance runs.

Each test prints one PASS/FAIL line (collected in the "acceptance" section of
the pytest summary) and then asserts. Tolerances are pinned here or in the
JSON files under ``configs/``.
"""

import math
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from betakde.densities import Uniform, declared_memberships, holder_seminorm
from betakde.harness import ExperimentConfig, run_experiment
from betakde.kernel import BetaKernel, a_b, a_b_r_form
from betakde.quadrature import kernel_rule
from betakde.risk import dn, mc_centered_moment, variance_at

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

pytestmark = pytest.mark.slow


def _run(name, workers="1", monkeypatch=None):
    if monkeypatch is not None:
        monkeypatch.setenv("BETAKDE_WORKERS", workers)
    return run_experiment(ExperimentConfig.load(CONFIGS / name))


def _checks(rep):
    return ", ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in sorted(rep.checks.items()))


def test_kernel_normalization(verdict):
    worst = 0.0
    for b in (0.5, 0.1, 0.01, 0.001):
        for t in np.linspace(0.0, 1.0, 11):
            x, w = kernel_rule(t, b)
            worst = max(worst, abs(w @ BetaKernel(t, b).evaluate(x) - 1.0))
    ok = worst <= 1e-6
    verdict("kernel normalization", ok, f"max |int K - 1| = {worst:.3g} (tol 1e-6)")
    assert ok


def test_kernel_moment_closed_forms(verdict, monkeypatch):
    rep = _run("lemma4.json", monkeypatch=monkeypatch)
    s = rep.summary
    detail = (
        f"{_checks(rep)}; max z = {s['moment_z_max']:.3g} (tol 4), "
        f"sup|d1|/b^2 = {s['sup_delta1_over_b2_max']:.6g} (tol 2), "
        f"sup|d2|/b^2 spread from median = {s['delta2_max_deviation_from_median']:.3g} (tol 0.10)"
    )
    verdict("kernel moment closed forms", rep.passed, detail)
    assert rep.passed


# a_b * sqrt(b t (1-t)) -> 1/(2 sqrt(pi)) ~ 0.2821; the band is fixed ahead of the run
C_LO, C_HI = 0.25, 0.32


def test_variance_kernel_identities(verdict):
    quad_err = r_err = 0.0
    lo, hi = math.inf, -math.inf
    for b in (1e-2, 1e-3, 1e-4):
        for t in np.linspace(0.1, 0.9, 9):
            exact = a_b(t, b)
            x, w = kernel_rule(t, b)
            quad_err = max(quad_err, abs(w @ BetaKernel(t, b).evaluate(x) ** 2 / exact - 1))
            r_err = max(r_err, abs(a_b_r_form(t, b) / exact - 1))
            v = exact * math.sqrt(b * t * (1 - t))
            lo, hi = min(lo, v), max(hi, v)
    ok = quad_err <= 1e-6 and r_err <= 1e-10 and C_LO <= lo and hi <= C_HI
    verdict(
        "variance kernel identities",
        ok,
        f"quadrature rel err {quad_err:.3g} (tol 1e-6), R-form rel err {r_err:.3g} (tol 1e-10), "
        f"normalized range [{lo:.4f}, {hi:.4f}] in [{C_LO}, {C_HI}]",
    )
    assert ok


@pytest.fixture(scope="module")
def rate_report():
    prev = os.environ.get("BETAKDE_WORKERS")
    os.environ["BETAKDE_WORKERS"] = "1"
    try:
        return run_experiment(ExperimentConfig.load(CONFIGS / "rate.json"))
    finally:
        if prev is None:
            del os.environ["BETAKDE_WORKERS"]
        else:
            os.environ["BETAKDE_WORKERS"] = prev


def test_rate_slope(verdict, rate_report):
    rep = rate_report
    verdict(
        "L2 risk rate for cosine density",
        rep.passed,
        f"slope {rep.slope:.4f} +- {rep.slope_stderr:.4f} (target -0.40 +- 0.05), r^2 {rep.r_squared:.4f} (min 0.98)",
    )
    assert rep.passed


@pytest.mark.parametrize("p", [1, 2])
def test_linear_bias_floor(verdict, p):
    rep = _run(f"bias_floor_p{p}.json")
    verdict(
        f"order-b bias floor, linear density, p={p}",
        rep.passed,
        f"slope {rep.slope:.4f} (target 1 +- 0.02), closed-form rel err "
        f"{rep.summary['max_closed_form_rel_error']:.3g} (tol 1e-6)",
    )
    assert rep.passed


@pytest.mark.parametrize("name", ["sawtooth_beta05.json", "sawtooth_beta15.json"])
def test_sawtooth_bias_floor(verdict, name):
    rep = _run(name)
    s = rep.summary
    verdict(
        f"sawtooth bias floor, beta={rep.config.beta}",
        rep.passed,
        f"ratio/b^(beta/2) in [{s['ratio_min']:.4g}, {s['ratio_max']:.4g}], smallest-b over largest-b "
        f"{s['smallest_over_largest_b_ratio']:.3f} (min 0.5), {_checks(rep)}",
    )
    assert rep.passed


def test_log_factor(verdict):
    rep = _run("log_factor.json")
    s = rep.summary
    dn_err = abs(dn(1e-3, 4) / math.log(1 / 2e-3) - 1)
    ok = rep.passed and dn_err <= 1e-12
    verdict(
        "log factor at p=4",
        ok,
        f"ratio spread {s['ratio_spread']:.3f} (max 2), p=2 control growth {s['control_growth']:.3f} "
        f"(max 1.5), d_n closed-form err {max(dn_err, s['dn_closed_form_rel_error']):.3g} (tol 1e-12)",
    )
    assert ok


def test_lower_bounds(verdict):
    rep = _run("bound_suite.json")
    t = rep.table
    rows = [dict(zip(t.columns, r)) for r in t.rows]
    detail = "; ".join(
        f"{r['density']} p={r['p']:g}: upper {r['risk_p_upper']:.3g} vs bias {r['bias_bound']:.3g}, "
        f"variance {r['variance_bound']:.3g}"
        for r in rows
    )
    verdict("risk lower bounds", rep.passed, detail)
    assert rep.passed


def test_second_moment_identity(verdict, monkeypatch):
    monkeypatch.setenv("BETAKDE_WORKERS", "1")
    t = np.array([0.25, 0.5, 0.75])
    b, n = 0.01, 500
    mc, se = mc_centered_moment(Uniform(), b, n, t, 2, reps=2000, seed=20240601)
    exact = variance_at(Uniform(), b, n, t)
    z = np.abs(mc - exact) / se
    ok = bool(np.all(z <= 4))
    verdict("pointwise second moment", ok, "z = " + ", ".join(f"{v:.2f}" for v in z) + " (max 4)")
    assert ok


def test_holder_memberships(verdict):
    bad = []
    worst = 0.0
    pairs = declared_memberships()
    for d, cls in pairs:
        v = holder_seminorm(d, cls, 10_000)
        worst = max(worst, v / cls.L)
        if v > cls.L:
            bad.append(f"{d!r} in {cls!r}")
    ok = not bad
    verdict("Hölder memberships", ok, f"{len(pairs)} pairs, max seminorm/L = {worst:.6f}" + (f", violations: {bad}" if bad else ""))
    assert ok


def test_determinism_across_workers(verdict, rate_report, tmp_path):
    """The rate run through the CLI with two workers must match the in-process one-worker CSV."""
    env = {**os.environ, "BETAKDE_WORKERS": "2"}
    out = tmp_path / "w2"
    proc = subprocess.run(
        [sys.executable, "-m", "betakde", "experiment", "rate", "--config", str(CONFIGS / "rate.json"), "--out", str(out)],
        env=env, capture_output=True, text=True,
    )
    same = proc.returncode == 0 and (out / "rate.csv").read_text() == rate_report.to_csv()
    lemma = []
    for workers in ("1", "3"):
        d = tmp_path / f"l{workers}"
        subprocess.run(
            [sys.executable, "-m", "betakde", "experiment", "lemma4-check", "--config", str(CONFIGS / "lemma4.json"),
             "--out", str(d)],
            env={**os.environ, "BETAKDE_WORKERS": workers}, capture_output=True, text=True,
        )
        lemma.append((d / "lemma4-check.csv").read_bytes() + (d / "lemma4-check_moments.csv").read_bytes())
    ok = same and lemma[0] == lemma[1]
    verdict(
        "byte-identical CSV across worker counts",
        ok,
        f"rate 1 vs 2 workers {'identical' if same else 'DIFFERENT'}, lemma4 1 vs 3 workers "
        f"{'identical' if lemma[0] == lemma[1] else 'DIFFERENT'}",
    )
    assert ok
