# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Best-of-N inference and the static BoN alignment objective.

For a finite reference distribution with pairwise distinct rewards the
probability that Best-of-N returns ``y`` is
::

    sum_{k=1..N} C(N, k) F(y)^(N-k) p(y)^k

with ``F(y)`` the probability of a strictly smaller reward. The static
alignment objective rewards a list with ``(N-1) * log F_ref(R(y))`` minus the
log-ratio to the reference policy.

A :py:class:`DiscreteDist` can be read from a small text table, one outcome
per line:
::

    # outcome  prob  reward
    a          0.6   1.0
    b          0.4   2.0
"""
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.special import comb

from .estimator import blade_cdf, proxy_reward


__author__ = "blade_rec developers"

PROB_TOL = 1e-12


@dataclass(frozen=True)
class DiscreteDist:
    """Finite-support distribution with a reward per outcome."""

    outcomes: Tuple[str, ...]
    probs: Tuple[float, ...]
    rewards: Tuple[float, ...]

    def __post_init__(self):
        if not len(self.outcomes) == len(self.probs) == len(self.rewards):
            raise ValueError("outcomes, probs and rewards differ in length")
        if not self.outcomes:
            raise ValueError("distribution must not be empty")
        if any(p < 0 for p in self.probs):
            raise ValueError(f"negative probability in {self.probs}")
        if abs(sum(self.probs) - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {sum(self.probs)!r}")

    def prob_of(self, outcome):
        """Probability of ``outcome``."""
        return self.probs[self.outcomes.index(outcome)]

    def expected_reward(self):
        """float: Mean reward under this distribution."""
        return float(np.dot(self.probs, self.rewards))

    @classmethod
    def from_table(cls, text):
        """Parse ``outcome prob reward`` lines, ``#`` starts a comment."""
        outcomes, probs, rewards = [], [], []
        for lineno, line in enumerate(text.splitlines(), start=1):
            line = line.split('#', 1)[0].strip()
            if not line:
                continue
            fields = line.split()
            if len(fields) != 3:
                raise ValueError(f"line {lineno}: expected 3 fields, "
                                 f"got {len(fields)}")
            outcomes.append(fields[0])
            probs.append(float(fields[1]))
            rewards.append(float(fields[2]))
        return cls(tuple(outcomes), tuple(probs), tuple(rewards))


@dataclass(frozen=True)
class BonConfig:
    """Best-of-N sample count."""

    n: int = 4

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"n must be >= 1, got {self.n}")


def bon_select(rewards):
    """Index of the best candidate, lowest index on ties.

    Args:
        rewards (list): Reward per candidate.

    Raises:
        ValueError: No candidates.
    """
    if len(rewards) == 0:
        raise ValueError("bon_select needs at least one candidate")
    return int(np.argmax(rewards))


def _strict_cdf(dist):
    rewards = np.asarray(dist.rewards)
    probs = np.asarray(dist.probs)
    return np.array([probs[rewards < r].sum() for r in rewards])


def bon_exact_distribution(dist, n):
    """Exact law of the Best-of-N output over ``dist``.

    Args:
        dist (DiscreteDist): Reference distribution, distinct rewards.
        n (int): Number of samples, >= 1.

    Returns:
        DiscreteDist: Same outcomes with Best-of-N probabilities.

    Raises:
        ValueError: Duplicate rewards or ``n < 1``.
    """
    BonConfig(n)
    if len(set(dist.rewards)) != len(dist.rewards):
        raise ValueError("exact BoN law needs pairwise distinct rewards")
    below = _strict_cdf(dist)
    probs = []
    for p_y, f_y in zip(dist.probs, below):
        probs.append(float(sum(comb(n, k, exact=True)
                               * f_y ** (n - k) * p_y ** k
                               for k in range(1, n + 1))))
    return DiscreteDist(dist.outcomes, tuple(probs), dist.rewards)


def bon_expected_reward(dist, n):
    """Expected reward of the Best-of-N output, non-decreasing in ``n``."""
    return bon_exact_distribution(dist, n).expected_reward()


def static_quantile_reward(stats, r, n, cdf_floor):
    """Quantile reward against the frozen reference, ``(n-1) log F_ref(r)``."""
    return proxy_reward(blade_cdf(stats, (), 0.0, r), n, cdf_floor)


def vbon_objective_terms(quantile_reward, logprob_theta, logprob_ref):
    """Split the variational BoN objective of one list into its terms.

    Returns:
        tuple: ``(utility, kl_penalty, total)`` with
        ``total = utility - kl_penalty``.
    """
    if not np.isfinite(logprob_theta) or not np.isfinite(logprob_ref):
        raise ValueError("log-probabilities must be finite")
    kl_penalty = logprob_theta - logprob_ref
    return quantile_reward, kl_penalty, quantile_reward - kl_penalty
