# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Reward CDF estimation for Best-of-N alignment.

The quantile of a reward ``r`` is estimated from strict ``<`` counts. A
frozen reference sample of ``M`` rewards gives the static estimate
``N_ref/M``. The dynamic estimator treats those counts as a Beta prior
``Beta(N_ref, M - N_ref)`` and adds the counts of the current group of ``G``
rollouts scaled by ``tau``:
::

    F(r) = (N_ref(r) + tau * N_batch(r)) / (M + tau * G)

which is the posterior mean. ``tau = 0`` is the static estimator and
``tau = 1`` pools reference and group rewards. The proxy reward used for
training is ``(N - 1) * log F(r)``, floored at ``cdf_floor``.
"""
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np


__author__ = "blade_rec developers"

ESTIMATORS = ('blade', 'static', 'noprior')


@dataclass(frozen=True, eq=False)
class ReferenceStats:
    """Sorted reference rewards of one context.

    Attributes:
        sorted_rewards (numpy.ndarray): Ascending rewards, length M.
        context_id (int): Context the rollouts were drawn for.
    """

    sorted_rewards: np.ndarray
    context_id: int = 0

    @property
    def size(self):
        """int: Number of reference rewards M."""
        return len(self.sorted_rewards)

    @property
    def max(self):
        """float: Largest reference reward."""
        return float(self.sorted_rewards[-1])


@dataclass(frozen=True)
class DynamicConfig:
    """Estimator settings.

    Attributes:
        tau (float): Weight of the group evidence, >= 0.
        bon_n (int): Best-of-N size used in the proxy reward, >= 2.
        cdf_floor (float): Smallest CDF value fed to the log, in (0, 1).
            ``None`` selects half a pooled sample, see
            :py:func:`default_cdf_floor`.
        estimator (str): ``blade``, ``static`` (tau forced to 0) or
            ``noprior`` (group counts only).
    """

    tau: float = 0.3
    bon_n: int = 4
    cdf_floor: Optional[float] = None
    estimator: str = 'blade'

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError(f"tau must be >= 0, got {self.tau}")
        if self.bon_n < 2:
            raise ValueError(f"bon_n must be >= 2, got {self.bon_n}")
        if self.cdf_floor is not None and not 0 < self.cdf_floor < 1:
            raise ValueError(f"cdf_floor must be in (0, 1), "
                             f"got {self.cdf_floor}")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"unknown estimator {self.estimator!r}, "
                             f"expected one of {ESTIMATORS}")

    @property
    def effective_tau(self):
        """float: ``tau`` with the static estimator forcing 0."""
        return 0.0 if self.estimator == 'static' else self.tau


@dataclass(frozen=True)
class BetaPosterior:
    """Beta belief over the CDF value at one threshold."""

    alpha: float
    beta: float

    @property
    def mean(self):
        """float: Posterior mean ``alpha / (alpha + beta)``."""
        return self.alpha / (self.alpha + self.beta)

    @property
    def variance(self):
        """float: Posterior variance."""
        total = self.alpha + self.beta
        return self.alpha * self.beta / (total * total * (total + 1.0))


def build_reference(rewards, context_id=0):
    """Sort reference rewards.

    Raises:
        ValueError: Empty or non-finite input.
    """
    values = np.sort(np.asarray(rewards, dtype=float))
    if values.size == 0:
        raise ValueError("reference rewards must not be empty")
    if not np.all(np.isfinite(values)):
        raise ValueError("reference rewards must be finite")
    values.setflags(write=False)
    return ReferenceStats(sorted_rewards=values, context_id=context_id)


def count_below(stats, r):
    """Number of reference rewards strictly below ``r``."""
    return int(np.searchsorted(stats.sorted_rewards, r, side='left'))


def batch_count_below(group_rewards, r):
    """Number of group rewards strictly below ``r``."""
    return int(np.count_nonzero(np.asarray(group_rewards) < r))


def posterior(stats, group_rewards, tau, r):
    """Beta posterior of the CDF at ``r`` with tau-scaled group counts.

    Returns:
        BetaPosterior: ``Beta(N_ref + tau*N_batch,
        M - N_ref + tau*(G - N_batch))``.
    """
    if tau < 0:
        raise ValueError(f"tau must be >= 0, got {tau}")
    n_ref = count_below(stats, r)
    n_batch = batch_count_below(group_rewards, r)
    size = len(group_rewards)
    return BetaPosterior(alpha=n_ref + tau * n_batch,
                         beta=(stats.size - n_ref) + tau * (size - n_batch))


def blade_cdf(stats, group_rewards, tau, r):
    """Posterior-mean CDF estimate at ``r``.

    ``tau = 0`` returns the static strict empirical CDF ``N_ref/M``.
    """
    return posterior(stats, group_rewards, tau, r).mean


def batch_cdf(group_rewards, r):
    """Group-only strict empirical CDF ``N_batch/G``."""
    return batch_count_below(group_rewards, r) / len(group_rewards)


def default_cdf_floor(ref_size, group_size, tau):
    """Half a pooled sample: ``1 / (2 * (M + tau*G))``."""
    return 1.0 / (2.0 * (ref_size + tau * group_size))


def proxy_reward(fhat, bon_n, cdf_floor):
    """Quantile reward ``(N - 1) * log(max(fhat, cdf_floor))``.

    Non-positive; 0 exactly when ``fhat == 1``.
    """
    if bon_n < 2:
        raise ValueError(f"bon_n must be >= 2, got {bon_n}")
    return (bon_n - 1) * math.log(max(fhat, cdf_floor))


def group_proxy_rewards(stats, group_rewards, cfg):
    """CDF estimates and proxy rewards for every member of a group.

    The group is its own dynamic evidence.

    Args:
        stats (ReferenceStats): Reference of the group's context, unused by
            the ``noprior`` estimator.
        group_rewards (list): Raw rewards of the G rollouts.
        cfg (DynamicConfig): Estimator settings.

    Returns:
        tuple: ``(fhat, proxy)`` arrays of length G.
    """
    size = len(group_rewards)
    if cfg.estimator == 'noprior':
        fhat = np.array([batch_cdf(group_rewards, r) for r in group_rewards])
        floor = cfg.cdf_floor or 1.0 / (2.0 * size)
    else:
        tau = cfg.effective_tau
        fhat = np.array([blade_cdf(stats, group_rewards, tau, r)
                         for r in group_rewards])
        floor = cfg.cdf_floor or default_cdf_floor(stats.size, size, tau)
    proxy = np.array([proxy_reward(f, cfg.bon_n, floor) for f in fhat])
    return fhat, proxy


def indiscrimination_witness(stats, r1, r2):
    """Check that the static CDF cannot tell two supra-reference rewards apart.

    Args:
        stats (ReferenceStats): Reference sample.
        r1 (float): Larger reward.
        r2 (float): Smaller reward, above the reference maximum.

    Returns:
        bool: True iff both static quantiles equal 1.

    Raises:
        ValueError: Not ``r1 > r2 > max(reference)``.
    """
    if not r1 > r2 > stats.max:
        raise ValueError(f"need r1 > r2 > {stats.max}, got r1={r1}, r2={r2}")
    return blade_cdf(stats, [], 0.0, r1) == blade_cdf(stats, [], 0.0, r2) == 1
