import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from betakde.densities import Cosine, Uniform
from betakde.estimator import BetaKernelDensity, theoretical_bandwidth
from betakde.exceptions import DomainError
from betakde.kernel import BetaKernel
from betakde.quadrature import Quadrature
from betakde.specfun import make_rng


def test_fit_stores_sample():
    x = np.array([0.1, 0.4, 0.9])
    est = BetaKernelDensity(bandwidth=0.5).fit(x)
    assert est.n_samples_ == 3
    np.testing.assert_array_equal(est.sample_, x)


def test_single_point_is_the_kernel():
    est = BetaKernelDensity(0.5).fit([0.5])
    assert est.evaluate(0.5) == pytest.approx(1.5, rel=1e-14)
    ts = np.linspace(0, 1, 11)
    np.testing.assert_allclose(est.evaluate(ts), [BetaKernel(t, 0.5).evaluate(0.5) for t in ts], rtol=1e-13)


def test_duplicate_points():
    a = BetaKernelDensity(0.05).fit([0.3]).evaluate(np.linspace(0, 1, 21))
    b = BetaKernelDensity(0.05).fit([0.3, 0.3]).evaluate(np.linspace(0, 1, 21))
    np.testing.assert_allclose(a, b, rtol=1e-14)


def test_endpoint_samples_vanish_inside():
    est = BetaKernelDensity(0.1).fit([0.0, 1.0, 1.0])
    assert np.all(est.evaluate(np.linspace(0.01, 0.99, 50)) == 0.0)
    assert est.evaluate(0.0) > 0 and est.evaluate(1.0) > 0


def test_validation():
    with pytest.raises((ValueError, DomainError)):
        BetaKernelDensity(0.1).fit([])
    with pytest.raises(DomainError):
        BetaKernelDensity(0.1).fit([0.2, 1.2])
    with pytest.raises(DomainError):
        BetaKernelDensity(1.0).fit([0.2])
    with pytest.raises(DomainError):
        BetaKernelDensity(0.0).fit([0.2])
    with pytest.raises(NotFittedError):
        BetaKernelDensity(0.1).evaluate(0.5)
    est = BetaKernelDensity(0.1).fit([0.2])
    with pytest.raises(DomainError):
        est.evaluate(1.5)
    with pytest.raises(DomainError):
        est.evaluate_grid([0.5, 0.2])


def test_sklearn_protocol():
    est = BetaKernelDensity(bandwidth=0.07)
    assert est.get_params() == {"bandwidth": 0.07}
    c = clone(est.set_params(bandwidth=0.02))
    assert c.bandwidth == 0.02
    x = Cosine(0.3).sample(200, make_rng(1)).reshape(-1, 1)
    est.fit(x)
    s = est.score_samples(x[:5])
    assert s.shape == (5,)
    assert est.score(x[:5]) == pytest.approx(s.sum())


def test_grid_bit_identical_to_pointwise():
    est = BetaKernelDensity(0.01).fit(Uniform().sample(500, make_rng(4)))
    grid = np.linspace(0, 1, 301)
    g = est.evaluate_grid(grid)
    pointwise = np.array([est.evaluate(t) for t in grid])
    assert np.array_equal(g, pointwise)
    assert np.array_equal(est.evaluate_grid([0.37]), [est.evaluate(0.37)])


def test_reversed_sample_order():
    x = Cosine(0.5).sample(1000, make_rng(5))
    grid = np.linspace(0, 1, 201)
    a = BetaKernelDensity(0.003).fit(x).evaluate_grid(grid)
    b = BetaKernelDensity(0.003).fit(x[::-1]).evaluate_grid(grid)
    np.testing.assert_allclose(a, b, rtol=1e-12)


@given(st.lists(st.floats(0, 1), min_size=1, max_size=30), st.floats(1e-3, 0.9))
@settings(max_examples=60, deadline=None)
def test_linearity_in_empirical_measure(xs, b):
    ys = [1 - v for v in xs]
    grid = np.linspace(0, 1, 17)
    both = BetaKernelDensity(b).fit(xs + ys).evaluate_grid(grid)
    avg = 0.5 * (BetaKernelDensity(b).fit(xs).evaluate_grid(grid) + BetaKernelDensity(b).fit(ys).evaluate_grid(grid))
    np.testing.assert_allclose(both, avg, rtol=1e-12, atol=1e-300)
    assert np.all(both >= 0)


def test_fast_runs_path_matches_exact():
    q = Quadrature.for_bandwidth(1e-3)
    nodes, _, runs = q.rule()
    est = BetaKernelDensity(1e-3).fit(Cosine(0.1).sample(3000, make_rng(6)))
    fast = est.evaluate_on_runs(nodes, runs)
    exact = est.evaluate_grid(nodes)
    np.testing.assert_allclose(fast, exact, rtol=1e-10, atol=1e-12)


def test_integral_close_to_one_diagnostic():
    # not an invariant; tracked as a diagnostic only
    x = Cosine(0.1).sample(5000, make_rng(8))
    q = Quadrature.for_bandwidth(1e-3)
    total = q.integrate(BetaKernelDensity(1e-3).fit(x).evaluate_grid(q.nodes))
    assert abs(total - 1) < 0.05


@pytest.mark.parametrize(
    "n,beta,c,expected",
    [(1024, 2, 1, 0.0625), (32, 0.5, 1, 0.03125), (10**6, 2, 1, 10**-2.4)],
)
def test_theoretical_bandwidth(n, beta, c, expected):
    assert theoretical_bandwidth(n, beta, c) == pytest.approx(expected, rel=1e-14)


def test_theoretical_bandwidth_out_of_range():
    with pytest.raises(DomainError):
        theoretical_bandwidth(1, 2.0, 1.0)
    with pytest.raises(DomainError):
        theoretical_bandwidth(100, 2.0, 50.0)


def test_unbiased_under_uniform_mc():
    est = BetaKernelDensity(0.01)
    vals = np.array([est.fit(Uniform().sample(500, make_rng(17, r))).evaluate(0.5) for r in range(2000)])
    assert abs(vals.mean() - 1.0) <= 4 * vals.std(ddof=1) / np.sqrt(vals.size)
