import itertools
import math

import numpy as np
import pytest
from scipy.stats import chisquare

from blade_rec.policy import (Group, PolicyParams, Rollout, grad_logprob,
                              greedy_decode, logprob, sample_list,
                              step_distribution, step_kl)

LN2 = math.log(2)


def _random_params(rng, n_contexts=2, n_items=5, list_len=3):
    return PolicyParams(rng.normal(size=(n_contexts, n_items)), list_len)


def _fd_grad(func, params, h=1e-5):
    grad = np.zeros_like(params.logits)
    for idx in np.ndindex(params.logits.shape):
        plus = params.copy()
        plus.logits[idx] += h
        minus = params.copy()
        minus.logits[idx] -= h
        grad[idx] = (func(plus) - func(minus)) / (2 * h)
    return grad


def _rel_err(analytic, numeric):
    return np.linalg.norm(analytic - numeric) / \
        max(np.linalg.norm(numeric), 1e-8)


@pytest.mark.parametrize("logits,prefix,expected", [
    ([0.0, 0.0, 0.0], [], [1 / 3, 1 / 3, 1 / 3]),
    ([0.0, 0.0, 0.0], [0], [0.0, 0.5, 0.5]),
    ([LN2, 0.0, 0.0], [], [0.5, 0.25, 0.25]),
])
def test_step_distribution(logits, prefix, expected):
    params = PolicyParams([logits], 1)
    probs = step_distribution(params, 0, prefix)
    assert probs == pytest.approx(expected, abs=1e-12)
    assert abs(probs.sum() - 1.0) < 1e-12
    for item in prefix:
        assert probs[item] == 0.0


def test_step_distribution_temperature():
    params = PolicyParams([[LN2, 0.0]], 1)
    probs = step_distribution(params, 0, [], temperature=0.5)
    assert probs == pytest.approx([0.8, 0.2])
    with pytest.raises(ValueError):
        step_distribution(params, 0, [], temperature=0.0)


def test_step_distribution_errors():
    params = PolicyParams.zeros(1, 3, 3)
    with pytest.raises(RuntimeError):
        step_distribution(params, 0, [0, 1, 2])
    with pytest.raises(ValueError):
        step_distribution(params, 0, [1, 1])
    with pytest.raises(ValueError):
        step_distribution(params, 1, [])


def test_params_validation():
    with pytest.raises(ValueError):
        PolicyParams([[0.0, np.inf]], 1)
    with pytest.raises(ValueError):
        PolicyParams([[0.0, 0.0]], 3)
    with pytest.raises(ValueError):
        PolicyParams([0.0, 0.0], 1)


def test_sample_uniform_pairs():
    params = PolicyParams.zeros(1, 3, 2)
    rng = np.random.default_rng(42)
    pairs = list(itertools.permutations(range(3), 2))
    counts = dict.fromkeys(pairs, 0)
    for _ in range(60000):
        counts[sample_list(params, 0, 1.0, rng).items] += 1
    assert sum(counts.values()) == 60000
    assert chisquare(list(counts.values())).pvalue > 1e-3


def test_sample_full_catalog_is_permutation():
    params = PolicyParams(np.random.default_rng(1).normal(size=(1, 6)), 6)
    rollout = sample_list(params, 0, 1.0, np.random.default_rng(2))
    assert sorted(rollout.items) == list(range(6))


def test_sample_deterministic():
    params = _random_params(np.random.default_rng(3))
    first = sample_list(params, 1, 0.8, np.random.default_rng(5))
    second = sample_list(params, 1, 0.8, np.random.default_rng(5))
    assert first == second


def test_sample_rollout_invariants():
    params = _random_params(np.random.default_rng(4), n_items=8,
                            list_len=4)
    rng = np.random.default_rng(6)
    for _ in range(50):
        rollout = sample_list(params, 0, 1.0, rng)
        assert len(set(rollout.items)) == 4
        assert all(lp <= 0 for lp in rollout.step_logprobs)
        assert abs(rollout.total_logprob - sum(rollout.step_logprobs)) < 1e-12
        assert rollout.reward is None


def test_logprob_golden():
    params = PolicyParams.zeros(1, 3, 2)
    for items in itertools.permutations(range(3), 2):
        _, total = logprob(params, 0, items)
        assert total == pytest.approx(math.log(1 / 6), abs=1e-12)
    params = PolicyParams([[LN2, 0.0, 0.0]], 2)
    steps, total = logprob(params, 0, (0, 1))
    assert steps == pytest.approx((math.log(0.5), math.log(0.5)), abs=1e-12)
    assert total == pytest.approx(math.log(0.25), abs=1e-12)


@pytest.mark.parametrize("temperature", [1.0, 0.8])
def test_logprob_replay(temperature):
    rng = np.random.default_rng(7)
    params = _random_params(rng, n_items=7, list_len=4)
    for _ in range(20):
        rollout = sample_list(params, 1, temperature, rng)
        steps, total = logprob(params, 1, rollout.items, temperature)
        assert np.max(np.abs(np.subtract(steps, rollout.step_logprobs))) \
            < 1e-12
        assert abs(total - rollout.total_logprob) < 1e-12


def test_logprob_duplicates_rejected():
    params = PolicyParams.zeros(1, 4, 3)
    with pytest.raises(ValueError):
        logprob(params, 0, (1, 2, 1))
    with pytest.raises(ValueError):
        grad_logprob(params, 0, (1, 9))


def test_grad_logprob_golden():
    params = PolicyParams.zeros(1, 2, 1)
    assert grad_logprob(params, 0, (0,))[0] == pytest.approx([0.5, -0.5])


def test_grad_logprob_other_rows_zero():
    params = _random_params(np.random.default_rng(8), n_contexts=3)
    grad = grad_logprob(params, 1, (0, 2, 4))
    assert not grad[0].any() and not grad[2].any()
    assert grad[1].sum() == pytest.approx(0.0, abs=1e-12)


def test_grad_logprob_finite_differences():
    rng = np.random.default_rng(9)
    for _ in range(100):
        params = _random_params(rng, n_contexts=2, n_items=5, list_len=3)
        temperature = float(rng.choice([1.0, 0.8]))
        items = tuple(int(i) for i in rng.permutation(5)[:3])
        analytic = grad_logprob(params, 0, items, temperature)
        numeric = _fd_grad(lambda p: logprob(p, 0, items, temperature)[1],
                           params)
        assert _rel_err(analytic, numeric) < 1e-4


def test_greedy_decode():
    params = PolicyParams([[5.0, 4.0, 3.0, 2.0, 1.0],
                           [0.0, 0.0, 0.0, 0.0, 0.0]], 3)
    assert greedy_decode(params, 0) == (0, 1, 2)
    assert greedy_decode(params, 1) == (0, 1, 2)
    params = PolicyParams([[0.0, 2.0, 1.0, 3.0]], 3)
    assert greedy_decode(params, 0) == (3, 1, 2)
    assert greedy_decode(params, 0) == greedy_decode(params, 0)


@pytest.mark.parametrize("n_items,list_len", [(3, 1), (4, 2), (5, 3),
                                              (6, 3)])
def test_list_probabilities_sum_to_one(n_items, list_len):
    params = _random_params(np.random.default_rng(n_items), n_contexts=1,
                            n_items=n_items, list_len=list_len)
    total = sum(math.exp(logprob(params, 0, items)[1])
                for items in itertools.permutations(range(n_items),
                                                    list_len))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_step_kl_zero_for_same_policy():
    params = _random_params(np.random.default_rng(10))
    kl, grad = step_kl(params, params.copy(), 0, [1])
    assert kl == 0.0
    assert not grad.any()


def test_step_kl_finite_differences():
    rng = np.random.default_rng(11)
    for _ in range(20):
        params = _random_params(rng)
        ref = _random_params(rng)
        prefix = [int(rng.integers(5))]
        kl, grad_row = step_kl(params, ref, 0, prefix, 0.8)
        assert kl >= 0
        numeric = _fd_grad(lambda p: step_kl(p, ref, 0, prefix, 0.8)[0],
                           params)
        assert _rel_err(grad_row, numeric[0]) < 1e-4
        assert not numeric[1].any()


def test_group_needs_two_rollouts():
    rollout = Rollout(items=(0,), step_logprobs=(0.0,), total_logprob=0.0,
                      reward=1.0)
    with pytest.raises(ValueError):
        Group(context_id=0, rollouts=[rollout])
    group = Group(context_id=0, rollouts=[rollout, rollout])
    assert len(group) == 2
    assert group.rewards.tolist() == [1.0, 1.0]
