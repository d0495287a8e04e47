# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Masked autoregressive list policy.

The policy holds one logit per (context, item). A list of ``K`` items is
generated one item per step; items already in the prefix are masked out and
the remaining logits, divided by the temperature, are normalized with a
softmax. Log-probabilities and their gradients are exact, so every training
objective can be checked against finite differences.
"""
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np
from scipy.special import logsumexp


__author__ = "blade_rec developers"


@dataclass(eq=False)
class PolicyParams:
    """Context-conditioned item logit table.

    Attributes:
        logits (numpy.ndarray): Shape ``(n_contexts, n_items)``.
        list_len (int): Number of items K in a generated list.
    """

    logits: np.ndarray
    list_len: int

    def __post_init__(self):
        self.logits = np.asarray(self.logits, dtype=float)
        if self.logits.ndim != 2:
            raise ValueError(f"logits must be 2-d, got shape "
                             f"{self.logits.shape}")
        if not np.all(np.isfinite(self.logits)):
            raise ValueError("logits must be finite")
        if not 1 <= self.list_len <= self.n_items:
            raise ValueError(f"list_len must be in [1, {self.n_items}], "
                             f"got {self.list_len}")

    @classmethod
    def zeros(cls, n_contexts, n_items, list_len):
        """Uniform policy."""
        return cls(np.zeros((n_contexts, n_items)), list_len)

    @property
    def n_contexts(self):
        """int: Number of context rows."""
        return self.logits.shape[0]

    @property
    def n_items(self):
        """int: Number of item columns."""
        return self.logits.shape[1]

    def copy(self):
        """Return an independent copy."""
        return PolicyParams(self.logits.copy(), self.list_len)


@dataclass
class Rollout:
    """One sampled list with its per-step log-probabilities."""

    items: Tuple[int, ...]
    step_logprobs: Tuple[float, ...]
    total_logprob: float
    reward: Optional[float] = None


@dataclass
class Group:
    """G rollouts sampled for one context."""

    context_id: int
    rollouts: list = field(default_factory=list)

    def __post_init__(self):
        if len(self.rollouts) < 2:
            raise ValueError(f"a group needs at least 2 rollouts, got "
                             f"{len(self.rollouts)}")

    def __len__(self):
        return len(self.rollouts)

    @property
    def rewards(self):
        """numpy.ndarray: Rewards of the rollouts."""
        return np.array([r.reward for r in self.rollouts], dtype=float)


def _check_ctx(params, ctx):
    if not 0 <= ctx < params.n_contexts:
        raise ValueError(f"context {ctx} out of range "
                         f"[0, {params.n_contexts})")


def _check_temperature(temperature):
    if temperature <= 0:
        raise ValueError(f"temperature must be > 0, got {temperature}")


def _masked_scores(params, ctx, prefix, temperature):
    if len(prefix) >= params.n_items:
        raise RuntimeError(f"prefix of {len(prefix)} items exhausts the "
                           f"catalog of {params.n_items}")
    scores = params.logits[ctx] / temperature
    mask = np.zeros(params.n_items, dtype=bool)
    mask[list(prefix)] = True
    return np.where(mask, -np.inf, scores), mask


def step_log_distribution(params, ctx, prefix, temperature=1.0):
    """Log of :py:func:`step_distribution`, ``-inf`` on masked items."""
    scores, _ = _masked_scores(params, ctx, prefix, temperature)
    return scores - logsumexp(scores)


def step_distribution(params, ctx, prefix, temperature=1.0):
    """Next-item distribution given the prefix.

    Args:
        params (PolicyParams): Policy parameters.
        ctx (int): Context id (row of the logit table).
        prefix (list): Items already in the list, no duplicates.
        temperature (float): Softmax temperature, > 0.

    Returns:
        numpy.ndarray: Probabilities over all items, exactly 0 on the prefix.

    Raises:
        RuntimeError: The prefix exhausts the catalog.
    """
    _check_ctx(params, ctx)
    _check_temperature(temperature)
    if len(set(prefix)) != len(prefix):
        raise ValueError(f"prefix has duplicate items: {prefix}")
    return np.exp(step_log_distribution(params, ctx, prefix, temperature))


def sample_list(params, ctx, temperature, rng):
    """Sample one list of ``params.list_len`` items.

    Args:
        params (PolicyParams): Policy parameters.
        ctx (int): Context id.
        temperature (float): Softmax temperature.
        rng (numpy.random.Generator): Random stream, one draw per step.

    Returns:
        Rollout: Sampled list with step log-probabilities.
    """
    _check_ctx(params, ctx)
    _check_temperature(temperature)
    items = []
    step_logprobs = []
    for _ in range(params.list_len):
        logp = step_log_distribution(params, ctx, items, temperature)
        item = int(rng.choice(params.n_items, p=np.exp(logp)))
        items.append(item)
        step_logprobs.append(float(logp[item]))
    return Rollout(items=tuple(items), step_logprobs=tuple(step_logprobs),
                   total_logprob=float(sum(step_logprobs)))


def _check_list(params, items):
    if len(set(items)) != len(items):
        raise ValueError(f"list has duplicate items: {list(items)}")
    if len(items) > params.n_items:
        raise ValueError(f"list longer than catalog: {len(items)}")
    for item in items:
        if not 0 <= item < params.n_items:
            raise ValueError(f"item id {item} out of range "
                             f"[0, {params.n_items})")


def logprob(params, ctx, items, temperature=1.0):
    """Replay a list and return its step and total log-probabilities.

    Returns:
        tuple: ``(step_logprobs, total)``.

    Raises:
        ValueError: Duplicate or invalid item in the list.
    """
    _check_ctx(params, ctx)
    _check_temperature(temperature)
    _check_list(params, items)
    step_logprobs = []
    for step, item in enumerate(items):
        logp = step_log_distribution(params, ctx, items[:step], temperature)
        step_logprobs.append(float(logp[item]))
    return tuple(step_logprobs), float(sum(step_logprobs))


def step_grad_logits(probs, item, temperature):
    """Gradient of one step's log-probability w.r.t. a logit row."""
    grad = -probs / temperature
    grad[item] += 1.0 / temperature
    return grad


def grad_logprob(params, ctx, items, temperature=1.0):
    """Exact gradient of the list log-probability w.r.t. the logit table.

    Returns:
        numpy.ndarray: Same shape as ``params.logits``; rows other than
        ``ctx`` are zero.
    """
    _check_ctx(params, ctx)
    _check_temperature(temperature)
    _check_list(params, items)
    grad = np.zeros_like(params.logits)
    for step, item in enumerate(items):
        probs = np.exp(step_log_distribution(params, ctx, items[:step],
                                             temperature))
        grad[ctx] += step_grad_logits(probs, item, temperature)
    return grad


def greedy_decode(params, ctx):
    """Pick the most likely remaining item at each step, temperature 1.

    Ties go to the lowest item id.
    """
    _check_ctx(params, ctx)
    items = []
    for _ in range(params.list_len):
        logp = step_log_distribution(params, ctx, items)
        # argmax returns the first maximum
        items.append(int(np.argmax(logp)))
    return tuple(items)


def step_kl(params, ref_params, ctx, prefix, temperature=1.0):
    """Exact KL(pi_theta || pi_ref) of one step and its logit gradient.

    Both distributions use the same prefix mask and temperature.

    Returns:
        tuple: ``(kl, grad_row)`` where ``grad_row`` is the gradient w.r.t.
        ``params.logits[ctx]``.
    """
    logp = step_log_distribution(params, ctx, prefix, temperature)
    logq = step_log_distribution(ref_params, ctx, prefix, temperature)
    probs = np.exp(logp)
    live = probs > 0
    log_ratio = np.zeros_like(logp)
    log_ratio[live] = logp[live] - logq[live]
    kl = float(np.sum(probs * log_ratio))
    grad = probs * (log_ratio - kl) / temperature
    return kl, grad
