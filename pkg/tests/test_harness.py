import json
import math

import numpy as np
import pytest

from betakde.exceptions import DomainError
from betakde.harness import (
    ExperimentConfig,
    config_from_csv,
    penalized_bandwidth,
    read_csv,
    run_experiment,
    slope_fit,
)
from betakde.harness.cli import main
from betakde.harness.plot import render_svg
from betakde.specfun import make_rng


def test_slope_fit_examples():
    xs = [1.0, 2.0, 5.0, 10.0]
    s, i, se, r2 = slope_fit(xs, xs)
    assert s == pytest.approx(1.0, abs=1e-14) and r2 == pytest.approx(1.0)
    ys = [3.0 * x**-0.4 for x in xs]
    s, i, se, r2 = slope_fit(xs, ys)
    assert s == pytest.approx(-0.4, abs=1e-12)
    assert math.exp(i) == pytest.approx(3.0, rel=1e-12)
    rng = make_rng(42)
    x = np.geomspace(1, 100, 8)
    y = x**2 * (1 + 0.01 * rng.standard_normal(8))
    s, _, se, _ = slope_fit(x, y)
    assert s == pytest.approx(2.0, abs=0.1)
    assert 0 < se < 0.05


def test_slope_fit_errors():
    with pytest.raises(DomainError):
        slope_fit([1.0], [1.0])
    with pytest.raises(DomainError):
        slope_fit([1.0, 2.0], [1.0, -1.0])
    with pytest.raises(DomainError):
        slope_fit([2.0, 2.0], [1.0, 3.0])
    with pytest.raises(DomainError):
        slope_fit([1.0, 2.0], [1.0, 2.0, 3.0])


def test_config_validation():
    with pytest.raises(DomainError):
        ExperimentConfig(tag="nope")
    with pytest.raises(DomainError):
        ExperimentConfig(tag="bias-floor", density="linear", b_grid=[0.1, 0.01])
    with pytest.raises(DomainError):
        ExperimentConfig(tag="rate", density="cosine:a=0.1")
    with pytest.raises(DomainError):
        ExperimentConfig.from_dict({"tag": "rate", "n_grid": [10], "extra": 1})
    with pytest.raises(DomainError):
        ExperimentConfig.from_json("[1, 2]")
    with pytest.raises(ValueError):
        ExperimentConfig(tag="rate", density="gauss", n_grid=[100])


def test_config_round_trip():
    cfg = ExperimentConfig(tag="rate", density="cosine:a=0.1", n_grid=[1024, 4096], p=2, reps=4, seed=9,
                           tolerances={"slope_target": -0.4})
    again = ExperimentConfig.from_json(cfg.to_json())
    assert again == cfg
    assert again.sha256 == cfg.sha256
    assert ExperimentConfig.from_json(json.dumps({**cfg.to_dict(), "p": 2})).sha256 == cfg.sha256


def _small_bias_floor():
    return ExperimentConfig(tag="bias-floor", density="linear", b_grid=[1e-3, 1e-2], p=2,
                            gate_rtol=None, tolerances={"slope_target": 1.0, "slope_tol": 0.02})


def test_report_consistency_and_round_trip():
    cfg = _small_bias_floor()
    rep = run_experiment(cfg)
    xs, ys, _ = zip(*rep.rows)
    s, i, se, r2 = slope_fit(xs, ys)
    assert s == pytest.approx(rep.slope, abs=1e-12)
    assert i == pytest.approx(rep.intercept, abs=1e-12)
    csv_text = rep.to_csv()
    assert config_from_csv(csv_text) == cfg
    assert run_experiment(config_from_csv(csv_text)).to_csv() == csv_text
    meta, cols, rows = read_csv(csv_text)
    assert cols == ("b", "integrated_bias", "ratio")
    assert meta["config_sha256"] == cfg.sha256
    assert meta["version"] and meta["seed"] == "0"
    # 17 significant digits round-trip exactly
    assert rows[0][1] == rep.table.rows[0][1]


def test_rate_rejects_sawtooth():
    cfg = ExperimentConfig(tag="rate", density="sawtooth:beta=1.5,L=1", n_grid=[1000, 2000], reps=2)
    with pytest.raises(DomainError):
        run_experiment(cfg)


def test_sawtooth_needs_small_b():
    cfg = ExperimentConfig(tag="sawtooth-bias", density="sawtooth", beta=1.5, b_grid=[1e-3, 0.01], p=1)
    with pytest.raises(DomainError):
        run_experiment(cfg)


def test_lemma4_small():
    cfg = ExperimentConfig(tag="lemma4-check", b_grid=[1e-3, 1e-2], t_grid=[0.5], mc_b_grid=[0.1], draws=2000,
                           tolerances={"delta1_max": 2.0})
    rep = run_experiment(cfg)
    assert rep.checks["delta1_bound"]
    assert rep.summary["delta1_at_half"] == 0.0
    assert rep.extra["moments"].columns[0] == "t"


def test_penalized_bandwidth():
    n, beta = 10_000, 2.0
    b0, g0 = penalized_bandwidth(n, beta)
    grid = np.geomspace(1e-8, 0.999, 20001)
    g = grid ** (beta / 2) + np.abs(np.log(grid)) / np.sqrt(n * np.sqrt(grid))
    assert g0 <= g.min() + 1e-12
    assert b0 == pytest.approx(grid[np.argmin(g)], rel=1e-2)


def test_cli_kernel_eval(capsys):
    assert main(["kernel-eval", "--t", "0.5", "--b", "0.5", "--x", "0.5"]) == 0
    assert capsys.readouterr().out.strip() == "1.5"


def test_cli_usage_errors(tmp_path, capsys):
    assert main([]) == 2
    assert main(["kernel-eval", "--t", "0.5"]) == 2
    assert main(["kernel-eval", "--t", "0.5", "--b", "2", "--x", "0.5"]) == 2
    assert main(["risk", "--density", "gauss", "--b", "0.1", "--n", "10"]) == 2
    bad = tmp_path / "bad.txt"
    bad.write_text("0.2\n1.7\n")
    assert main(["estimate", "--input", str(bad), "--b", "0.1"]) == 2
    bad.write_text("0.2\nabc\n")
    assert main(["estimate", "--input", str(bad), "--b", "0.1"]) == 2
    assert main(["estimate", "--input", str(tmp_path / "missing.txt"), "--b", "0.1"]) == 2
    cfg = tmp_path / "c.json"
    cfg.write_text(_small_bias_floor().to_json())
    assert main(["experiment", "rate", "--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert main(["--version"]) == 0
    capsys.readouterr()


def test_cli_gate_failure_exit_code(tmp_path):
    cfg = ExperimentConfig(tag="bias-floor", density="linear", b_grid=[1e-4, 1e-3], p=1, panels=8,
                           gate_rtol=1e-12)
    path = tmp_path / "c.json"
    path.write_text(cfg.to_json())
    assert main(["experiment", "bias-floor", "--config", str(path), "--out", str(tmp_path / "o")]) == 1


def test_cli_estimate_and_plot(tmp_path):
    sample = tmp_path / "s.txt"
    sample.write_text("\n".join(str(v) for v in make_rng(1).random(50)) + "\n")
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out1, out2):
        assert main(["estimate", "--input", str(sample), "--b", "0.05", "--grid", "11", "--out", str(out)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    meta, cols, rows = read_csv(out1.read_text())
    assert cols == ("t", "density") and len(rows) == 11
    assert {"version", "seed", "config_sha256"} <= set(meta)

    cfg = tmp_path / "c.json"
    cfg.write_text(_small_bias_floor().to_json())
    assert main(["experiment", "bias-floor", "--config", str(cfg), "--out", str(tmp_path / "r")]) == 0
    svg = tmp_path / "p.svg"
    assert main(["plot", "--in", str(tmp_path / "r" / "bias-floor.csv"), "--out", str(svg)]) == 0
    text = svg.read_text()
    assert text.startswith("<svg") and text.count("<circle") == 2
    assert main(["plot", "--in", str(out1), "--out", str(svg), "--y", "nope"]) == 2


def test_cli_risk_deterministic(tmp_path):
    args = ["risk", "--density", "sawtooth:beta=1.5,L=1", "--b", "0.002", "--n", "300", "--p", "2",
            "--reps", "3", "--seed", "77", "--panels", "400"]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    meta, cols, rows = read_csv(a.read_text())
    assert meta["seed"] == "77"
    assert rows[0][0] == "sawtooth:beta=1.5,L=1.0"


def test_render_svg_defaults():
    text = run_experiment(_small_bias_floor()).to_csv()
    svg = render_svg(text)
    assert "integrated_bias vs b" in svg
