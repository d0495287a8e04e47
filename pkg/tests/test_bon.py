import itertools
import math

import numpy as np
import pytest

from blade_rec.bon import (BonConfig, DiscreteDist, bon_exact_distribution,
                           bon_expected_reward, bon_select,
                           static_quantile_reward, vbon_objective_terms)
from blade_rec.estimator import build_reference

TWO_OUTCOMES = """
# outcome prob reward
a 0.6 1.0
b 0.4 2.0
"""


def _brute_force(dist, n):
    rewards = np.asarray(dist.rewards)
    probs = np.zeros(len(dist.outcomes))
    for draw in itertools.product(range(len(dist.outcomes)), repeat=n):
        weight = math.prod(dist.probs[i] for i in draw)
        probs[draw[bon_select(rewards[list(draw)])]] += weight
    return probs


def _random_dist(rng, size):
    probs = rng.dirichlet(np.ones(size))
    probs = probs / probs.sum()
    rewards = rng.permutation(size).astype(float) + rng.uniform(0, 0.5, size)
    return DiscreteDist(tuple(f"y{i}" for i in range(size)),
                        tuple(float(p) for p in probs),
                        tuple(float(r) for r in rewards))


@pytest.mark.parametrize("rewards,expected", [([0.2, 0.9, 0.5], 1),
                                              ([0.7, 0.7], 0),
                                              ([0.3], 0)])
def test_bon_select(rewards, expected):
    assert bon_select(rewards) == expected


def test_bon_select_empty():
    with pytest.raises(ValueError):
        bon_select([])


def test_exact_two_outcomes():
    dist = DiscreteDist.from_table(TWO_OUTCOMES)
    assert dist.outcomes == ("a", "b")
    bon = bon_exact_distribution(dist, 2)
    assert bon.prob_of("a") == pytest.approx(0.36, abs=1e-12)
    assert bon.prob_of("b") == pytest.approx(0.64, abs=1e-12)
    assert bon.rewards == dist.rewards


def test_exact_n_one_is_identity():
    dist = _random_dist(np.random.default_rng(0), 4)
    bon = bon_exact_distribution(dist, 1)
    assert np.max(np.abs(np.subtract(bon.probs, dist.probs))) < 1e-12


@pytest.mark.parametrize("size", [1, 2, 3, 4, 5])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_exact_matches_enumeration(size, n):
    rng = np.random.default_rng(10 * size + n)
    for _ in range(3):
        dist = _random_dist(rng, size)
        exact = np.asarray(bon_exact_distribution(dist, n).probs)
        assert np.max(np.abs(exact - _brute_force(dist, n))) < 1e-12
        assert abs(exact.sum() - 1.0) < 1e-12


def test_exact_matches_monte_carlo():
    rng = np.random.default_rng(2024)
    dist = _random_dist(rng, 4)
    n = 3
    rewards = np.asarray(dist.rewards)
    draws = rng.choice(4, size=(10 ** 6, n), p=np.asarray(dist.probs))
    winners = draws[np.arange(len(draws)), np.argmax(rewards[draws], axis=1)]
    freq = np.bincount(winners, minlength=4) / len(draws)
    exact = np.asarray(bon_exact_distribution(dist, n).probs)
    assert 0.5 * np.abs(freq - exact).sum() < 2e-3


def test_exact_rejects_ties():
    dist = DiscreteDist(("a", "b"), (0.5, 0.5), (1.0, 1.0))
    with pytest.raises(ValueError):
        bon_exact_distribution(dist, 2)
    with pytest.raises(ValueError):
        bon_exact_distribution(DiscreteDist.from_table(TWO_OUTCOMES), 0)


def test_bon_dominates_reference():
    rng = np.random.default_rng(3)
    for size in range(2, 6):
        dist = _random_dist(rng, size)
        values = [bon_expected_reward(dist, n) for n in range(1, 5)]
        assert values[0] == pytest.approx(dist.expected_reward())
        assert all(b > a for a, b in zip(values, values[1:]))


@pytest.mark.parametrize("text", ["a 0.5 1.0\nb 0.4 2.0",
                                  "a 0.5\nb 0.5 2.0",
                                  "a -0.1 1.0\nb 1.1 2.0",
                                  ""])
def test_from_table_invalid(text):
    with pytest.raises(ValueError):
        DiscreteDist.from_table(text)


def test_bon_config():
    assert BonConfig().n == 4
    with pytest.raises(ValueError):
        BonConfig(0)


def test_static_quantile_reward():
    stats = build_reference([1.0, 2.0, 3.0, 4.0])
    assert static_quantile_reward(stats, 5.0, 4, 1e-3) == 0.0
    assert static_quantile_reward(stats, 2.5, 2, 1e-3) == \
        pytest.approx(math.log(0.5))
    assert static_quantile_reward(stats, 7.0, 4, 1e-3) == \
        static_quantile_reward(stats, 4.5, 4, 1e-3)
    assert static_quantile_reward(stats, 0.0, 2, 1e-3) == \
        pytest.approx(math.log(1e-3))


def test_vbon_objective_terms():
    assert vbon_objective_terms(-0.4, -2.0, -2.0) == (-0.4, 0.0, -0.4)
    utility, penalty, total = vbon_objective_terms(0.0, -1.7, -2.0)
    assert (utility, penalty, total) == pytest.approx((0.0, 0.3, -0.3))
    assert vbon_objective_terms(math.log(0.5), -1.0, -1.0)[2] == \
        pytest.approx(math.log(0.5))
    with pytest.raises(ValueError):
        vbon_objective_terms(0.0, -math.inf, -1.0)
