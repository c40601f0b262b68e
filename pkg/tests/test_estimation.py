import numpy as np
import pytest

from ducb_seek.consensus import InfoPair
from ducb_seek.environment import Grid
from ducb_seek.errors import ConfigError
from ducb_seek.estimation import (Belief, ClosedFormAccumulator, closed_form_belief, init_belief,
                                  kalman_update)


def random_invertible(rng, n, spread=0.05):
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    return q @ np.diag(rng.uniform(1 - spread, 1 + spread, n))


def random_info(rng, n, max_cells=6):
    cells = rng.choice(n, size=int(rng.integers(1, max_cells + 1)), replace=False)
    Y = np.zeros(n)
    y = np.zeros(n)
    Y[cells] = 1.0 / rng.uniform(0.5, 2.0, cells.size)
    y[cells] = Y[cells] * (rng.random(cells.size) * 5 + rng.standard_normal(cells.size))
    return InfoPair(Y, y)


def rel_err(a, b):
    return np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300)


def test_scalar_update():
    z = 3.0
    b = kalman_update(Belief(np.zeros(1), np.eye(1)), np.eye(1), None,
                      InfoPair(np.array([1.0]), np.array([z])))
    assert b.cov[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert b.mean[0] == pytest.approx(z / 2, abs=1e-15)


def test_scalar_closed_form():
    z = 3.0
    acc = ClosedFormAccumulator.start(Belief(np.zeros(1), np.eye(1)))
    acc.add(np.eye(1), InfoPair(np.array([1.0]), np.array([z])))
    b = closed_form_belief(acc)
    assert b.cov[0, 0] == pytest.approx(0.5, abs=1e-15)
    assert b.mean[0] == pytest.approx(z / 2, abs=1e-15)


def test_empty_history_returns_prior(rng):
    prior = Belief(rng.random(4), 3.0 * np.eye(4))
    b = closed_form_belief(ClosedFormAccumulator.start(prior))
    assert np.allclose(b.mean, prior.mean, rtol=1e-14) and np.allclose(b.cov, prior.cov, rtol=1e-14)


def test_no_measurement_is_pure_propagation(rng):
    n = 5
    L = rng.standard_normal((n, n))
    prior = Belief(rng.random(n), L @ L.T + np.eye(n))
    A = random_invertible(rng, n)
    b = kalman_update(prior, A, None, InfoPair(np.zeros(n), np.zeros(n)))
    assert np.allclose(b.cov, A @ prior.cov @ A.T, rtol=1e-13, atol=1e-13)
    assert np.allclose(b.mean, A @ prior.mean, rtol=1e-13)


def test_update_matches_information_form_formula(rng):
    # the gain form used in production against the literal inverse-based expression
    n = 6
    L = rng.standard_normal((n, n))
    prior = Belief(rng.standard_normal(n), L @ L.T + 0.5 * np.eye(n))
    A = random_invertible(rng, n)
    info = random_info(rng, n, 4)
    b = kalman_update(prior, A, None, info)
    G = np.linalg.inv(np.linalg.inv(prior.cov) + np.diag(info.Y))
    assert np.allclose(b.cov, A @ G @ A.T, rtol=1e-10, atol=1e-12)
    expected_mean = A @ (prior.mean + G @ (info.y - info.Y * prior.mean))
    assert np.allclose(b.mean, expected_mean, rtol=1e-10, atol=1e-12)


def test_affine_term_added_to_mean(rng):
    prior = init_belief(Grid(2), 1.0)
    b_vec = np.array([1.0, 0, 0, 2.0])
    b = kalman_update(prior, np.eye(4), b_vec, InfoPair(np.zeros(4), np.zeros(4)))
    assert np.array_equal(b.mean, b_vec)


@pytest.mark.parametrize("seed", range(3))
def test_recursion_matches_closed_form(seed):
    rng = np.random.default_rng(seed)
    n, steps = 25, 50
    prior = init_belief(Grid(5), float(rng.uniform(0.5, 4)), rng.standard_normal(n))
    acc = ClosedFormAccumulator.start(prior)
    belief = prior
    for _ in range(steps):
        A = random_invertible(rng, n)
        info = random_info(rng, n)
        belief = kalman_update(belief, A, None, info)
        acc.add(A, info)
    oracle = closed_form_belief(acc)
    assert rel_err(belief.mean, oracle.mean) <= 1e-8
    assert rel_err(belief.cov, oracle.cov) <= 1e-8


def test_init_belief():
    b = init_belief(Grid(3), 1.0)
    assert np.array_equal(b.cov, np.eye(9)) and np.array_equal(b.mean, np.zeros(9))
    assert np.all(np.diag(init_belief(Grid(3), 4.0).cov) == 4.0)
    with pytest.raises(ConfigError):
        init_belief(Grid(3), 0.0)


def test_measured_information_never_decreases(rng):
    n = 9
    L = rng.standard_normal((n, n))
    prior = Belief(np.zeros(n), L @ L.T + np.eye(n))
    info = random_info(rng, n)
    post = kalman_update(prior, np.eye(n), None, info)
    before = np.diag(np.linalg.inv(prior.cov))
    after = np.diag(np.linalg.inv(post.cov))
    S = info.support
    assert np.all(after[S] >= before[S] - 1e-12)


def test_spd_preserved_over_long_run(rng):
    n = 16
    belief = init_belief(Grid(4), 2.0)
    for _ in range(1000):
        belief = kalman_update(belief, random_invertible(rng, n, 0.02), None, random_info(rng, n, 3))
        assert np.max(np.abs(belief.cov - belief.cov.T)) <= 1e-12 * max(1, np.abs(belief.cov).max())
        assert np.all(np.diag(belief.cov) > 0)
    belief.check()


def test_static_full_observation_converges():
    g = Grid(10)
    n = g.n_cells
    rng = np.random.default_rng(7)
    phi = rng.random(n) * 5
    belief = init_belief(g, 100.0)
    errors = {}
    for k in range(1, 501):
        z = phi + rng.standard_normal(n)
        belief = kalman_update(belief, np.eye(n), None, InfoPair(np.ones(n), z))
        errors[k] = np.linalg.norm(belief.mean - phi)
    assert errors[500] < 0.05 * errors[1]
