import csv
import math

import numpy as np
import pytest

from rssm import (BernoulliMeasure, InvalidSystemError, PerturbationDistribution,
                  SelfSimilarIFS, atomic_approximation, attractor_cover, ball_density,
                  hoelder_exponent_estimate, interior_candidate, lebesgue_upper_bound,
                  moment_scaling, smoothed_density)
from rssm.realization import AtomicApproximation
from rssm.regularity import BALL, FOURIER, SMOOTHED, DensityEstimate, density_estimate


def cloud(positions, weights=None):
    positions = np.asarray(positions, float)
    if weights is None:
        weights = np.full(positions.size, 1.0 / positions.size)
    return AtomicApproximation(0, 1, positions, np.asarray(weights, float), 0.0)


def ball_oracle(positions, weights, x, r):
    return sum(w for y, w in zip(positions, weights) if abs(y - x) <= r) / (2 * r)


def smoothed_oracle(positions, weights, x, r, steps=200_001):
    """Midpoint quadrature of the ball-mass function over [r(1-r), r(1+r)]."""
    inner, outer = r * (1 - r), r * (1 + r)
    h = (outer - inner) / steps
    ell = inner + h * (np.arange(steps) + 0.5)
    d = np.sort(np.abs(np.asarray(positions) - x))
    w = np.asarray(weights)[np.argsort(np.abs(np.asarray(positions) - x))]
    mass = np.concatenate([[0.0], np.cumsum(w)])[np.searchsorted(d, ell, side="right")]
    return mass.sum() * h / (4 * r ** 3)


def test_ball_examples(fractal013, natural013, spline3):
    assert ball_density(cloud([0.0]), 0.0, 0.5) == 1.0
    atomic = atomic_approximation(fractal013, natural013, spline3, 1, 6)
    far = atomic.positions.max() + 0.1 + atomic.tail_radius + 1e-9
    assert ball_density(atomic, far, 0.1) == 0.0
    k = 12
    uniform = cloud((np.arange(2 ** k) + 0.5) / 2 ** k)
    assert ball_density(uniform, 0.5, 0.25) == pytest.approx(1.0, abs=2 ** -k * 2)
    with pytest.raises(InvalidSystemError):
        ball_density(uniform, 0.5, 0.0)


def test_ball_boundary_atoms_count():
    two = cloud([0.0, 1.0], [0.5, 0.5])
    assert ball_density(two, 0.5, 0.5) == pytest.approx(1.0)
    assert ball_density(two, 0.5, 0.4999) == 0.0


def test_ball_matches_direct_count():
    rng = np.random.default_rng(1)
    pos, w = rng.normal(size=300), rng.dirichlet(np.ones(300))
    c = cloud(pos, w)
    for x, r in zip(rng.normal(size=50), rng.uniform(0.01, 1, 50)):
        assert ball_density(c, x, r) == pytest.approx(ball_oracle(pos, w, x, r), abs=1e-12)


def test_smoothed_single_atom():
    for r in (0.05, 0.3, 0.9):
        assert smoothed_density(cloud([0.0]), 0.0, r) == pytest.approx(1 / (2 * r), rel=1e-13)
    with pytest.raises(InvalidSystemError):
        smoothed_density(cloud([0.0]), 0.0, 1.0)


def test_smoothed_atom_at_distance_r():
    r = 0.2
    z = smoothed_density(cloud([0.0]), r, r)
    assert z == pytest.approx(1 / (4 * r), rel=1e-12)  # hand evaluation of the step integral
    low = (1 - r) * ball_density(cloud([0.0]), r, r * (1 - r))
    high = (1 + r) * ball_density(cloud([0.0]), r, r * (1 + r))
    assert low < z < high


def test_smoothed_matches_quadrature():
    rng = np.random.default_rng(2)
    pos, w = rng.uniform(0, 1, 200), rng.dirichlet(np.ones(200))
    c = cloud(pos, w)
    for x, r in zip(rng.uniform(0, 1, 20), rng.uniform(0.02, 0.6, 20)):
        assert smoothed_density(c, x, r) == pytest.approx(smoothed_oracle(pos, w, x, r), rel=1e-4)


def test_sandwich_small_sample():
    rng = np.random.default_rng(3)
    for _ in range(300):
        pos = rng.uniform(-1, 1, rng.integers(1, 60))
        c = cloud(pos, rng.dirichlet(np.ones(pos.size)))
        x, r = rng.uniform(-1.2, 1.2), rng.uniform(1e-3, 0.99)
        z = smoothed_density(c, x, r)
        assert (1 - r) * ball_density(c, x, r * (1 - r)) <= z * (1 + 1e-12)
        assert z <= (1 + r) * ball_density(c, x, r * (1 + r)) * (1 + 1e-12)


def test_ball_density_integrates_to_one(fractal013, natural013, spline3):
    atomic = atomic_approximation(fractal013, natural013, spline3, 6, 9)
    r = 4 * atomic.tail_radius
    lo, hi = atomic.positions.min() - r, atomic.positions.max() + r
    m = 40_000
    h = (hi - lo) / m
    mid = lo + h * (np.arange(m) + 0.5)
    assert ball_density(atomic, mid, r).sum() * h == pytest.approx(1.0, abs=0.02)


def test_density_estimate_container(tmp_path, fractal013, natural013, spline3):
    atomic = atomic_approximation(fractal013, natural013, spline3, 6, 6)
    grid = np.linspace(0, 5, 33)
    for method, par in ((BALL, 0.1), (SMOOTHED, 0.1), (FOURIER, 50.0)):
        est = density_estimate(atomic, grid, method, par)
        assert est.seed == 6 and est.depth == 6 and est.values.shape == grid.shape
        if method != FOURIER:
            assert np.all(est.values >= 0)
    assert est.label == "fourier(cutoff=50)"
    est.write_csv(tmp_path / "d.csv", digest="x")
    lines = (tmp_path / "d.csv").read_text().splitlines()
    assert lines[1].startswith("# method=fourier") and lines[2] == "x,density"
    with pytest.raises(InvalidSystemError):
        DensityEstimate([0, 0], [1, 1], BALL, 0.1)
    with pytest.raises(InvalidSystemError):
        density_estimate(atomic, grid, "kernel", 0.1)


def _estimate(x, f):
    return hoelder_exponent_estimate(DensityEstimate(x, f, BALL, 0.1))


def test_hoelder_examples():
    x = np.linspace(0, 1, 513)
    assert 0.95 <= _estimate(x, x).exponent <= 1.05
    y = np.linspace(-1, 1, 513)
    assert 0.45 <= _estimate(y, np.sqrt(np.abs(y))).exponent <= 0.55
    flat = _estimate(x, np.full_like(x, 3.0))
    assert flat.flat and flat.exponent == math.inf
    with pytest.raises(InvalidSystemError):
        _estimate(x[:10], x[:10])


def test_hoelder_sine_is_lipschitz():
    x = np.linspace(0, 1, 1025)
    est = _estimate(x, np.sin(3 * x))
    assert 0.9 <= est.exponent <= 1.1 and est.residual < 0.1


@pytest.fixture(scope="module")
def small_moments():
    ifs = SelfSimilarIFS([0.45, 0.45, 0.45], [0.0, 1.0, 3.0])
    mu = BernoulliMeasure.natural(ifs)
    dist = PerturbationDistribution.spline(3, 0.1)
    seps = np.geomspace(1e-3, 1e-1, 5)
    pairs = [(2.0, 2.0)] + [(2.0, 2.0 + s) for s in seps] + [(2.0 + seps[2], 2.0)]
    return moment_scaling(ifs, mu, dist, pairs, p=2, trials=100, depth=8, cutoff=100,
                          seed=3, n_boot=200)


def test_moment_examples(small_moments):
    assert small_moments.moments[0] == 0.0
    assert small_moments.moments[-1] == pytest.approx(small_moments.moments[3], rel=1e-12)
    assert small_moments.alpha > 0
    assert small_moments.ci[0] > 0


def test_moment_validation(fractal013, natural013, spline3):
    with pytest.raises(InvalidSystemError):
        moment_scaling(fractal013, natural013, spline3, [(2, 2.1)], p=3, trials=100, depth=4, cutoff=10)
    with pytest.raises(InvalidSystemError):
        moment_scaling(fractal013, natural013, spline3, [(2, 2.1)], p=2, trials=99, depth=4, cutoff=10)
    with pytest.raises(InvalidSystemError):
        moment_scaling(fractal013, natural013, spline3, [(2, 50.0)], p=2, trials=100, depth=4, cutoff=10)


def test_lebesgue_interval_attractor(halves, no_perturbation):
    for n in range(1, 11):
        assert lebesgue_upper_bound(attractor_cover(halves, no_perturbation, 0, n)) == pytest.approx(2.0)


def test_lebesgue_small_dimension(spline3):
    ifs = SelfSimilarIFS([0.3, 0.3], [0.0, 1.0])
    c = (1.0 + spline3.support_radius) / 0.7
    prev = None
    for n in range(1, 13):
        bound = lebesgue_upper_bound(attractor_cover(ifs, spline3, 5, n))
        assert bound <= 0.6 ** n * 2 * c
        if prev is not None:
            assert bound <= prev + 1e-12
            assert bound / prev <= 0.6 + 1e-9
        prev = bound


def test_interior_examples(halves, no_perturbation, spline3):
    for n in (1, 5, 9):
        covers = [attractor_cover(halves, no_perturbation, 0, k) for k in range(1, n + 1)]
        interval, depth = interior_candidate(covers)
        assert interval == pytest.approx((0.0, 2.0), abs=1e-12) and depth == n
    small = SelfSimilarIFS([0.3, 0.3], [0.0, 1.0])
    for seed in range(5):
        covers = [attractor_cover(small, spline3, seed, k) for k in range(6, 11)]
        assert interior_candidate(covers)[0] is None
    with pytest.raises(InvalidSystemError):
        interior_candidate([])


def test_interior_candidates_shrink(fractal013, spline3):
    for seed in range(3):
        covers = [attractor_cover(fractal013, spline3, seed, k) for k in range(1, 11)]
        prev = None
        for n in range(1, 11):
            interval, _ = interior_candidate(covers[:n])
            if interval is None:
                break
            if prev is not None:
                assert prev[0] - 1e-12 <= interval[0] and interval[1] <= prev[1] + 1e-12
            prev = interval
