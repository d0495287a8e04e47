# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Group relative policy optimization with dynamic BoN proxy rewards.

One training step for a context:

1. snapshot the sampling parameters ``old_params``;
2. sample a group of G lists;
3. score them with the list-wise reward;
4. turn every raw reward into a proxy reward ``(N-1) log F(r)`` where ``F``
   fuses the frozen reference counts with the counts of the same group;
5. normalize proxy rewards into group-relative advantages;
6. take one gradient-ascent step on the clipped surrogate with a per-step
   KL penalty to the frozen reference policy.

The group is drawn once and serves both as the estimator's evidence and as
the optimization batch.
"""
import logging
import math
from dataclasses import dataclass, field, fields
from typing import Dict, List, Optional

import numpy as np

from .envsim import Dataset
from .estimator import (DynamicConfig, ReferenceStats, build_reference,
                        group_proxy_rewards)
from .metrics import RewardSpec, genre_dist, reward
from .policy import (Group, PolicyParams, grad_logprob, greedy_decode,
                     sample_list, step_grad_logits, step_kl,
                     step_log_distribution)


__author__ = "blade_rec developers"

LR_SCHEDULES = ('constant', 'linear')
TEACHERS = ('targets', 'genre')


@dataclass(frozen=True)
class ClipConfig:
    """Surrogate clipping and KL settings."""

    epsilon: float = 0.2
    beta_kl: float = 0.1
    sigma_floor: float = 1e-12

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError(f"epsilon must be in (0, 1], got {self.epsilon}")
        if self.beta_kl < 0:
            raise ValueError(f"beta_kl must be >= 0, got {self.beta_kl}")
        if self.sigma_floor <= 0:
            raise ValueError(f"sigma_floor must be > 0, "
                             f"got {self.sigma_floor}")


@dataclass(frozen=True)
class TrainConfig:
    """Settings of one training step.

    Attributes:
        group_size (int): Rollouts per step G, >= 2.
        dynamic (DynamicConfig): Estimator settings (tau, N, floor).
        reward_spec (RewardSpec): Raw list-wise reward.
        clip (ClipConfig): Surrogate settings.
        temperature (float): Sampling temperature of the group.
        lr (float): Gradient-ascent step size.
        lr_schedule (str): ``constant`` or ``linear`` decay to 0 over
            ``total_steps``.
        total_steps (int): Length of the linear schedule.
        eval_spec (RewardSpec): Reward of the greedy evaluation, defaults to
            ``reward_spec``.
        eval_every (int): Evaluate every this many steps, carrying the last
            value in between.
    """

    group_size: int = 16
    dynamic: DynamicConfig = field(default_factory=DynamicConfig)
    reward_spec: RewardSpec = field(
        default_factory=lambda: RewardSpec('ndcg', 5))
    clip: ClipConfig = field(default_factory=ClipConfig)
    temperature: float = 1.0
    lr: float = 0.1
    lr_schedule: str = 'constant'
    total_steps: int = 0
    eval_spec: Optional[RewardSpec] = None
    eval_every: int = 1

    def __post_init__(self):
        if self.group_size < 2:
            raise ValueError(f"group_size must be >= 2, "
                             f"got {self.group_size}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, "
                             f"got {self.temperature}")
        if self.lr_schedule not in LR_SCHEDULES:
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        if self.eval_every < 1:
            raise ValueError(f"eval_every must be >= 1, "
                             f"got {self.eval_every}")

    def lr_at(self, step):
        """Learning rate of the step with 0-based index ``step``."""
        if self.lr_schedule == 'linear' and self.total_steps > 0:
            return self.lr * max(0.0, 1.0 - step / self.total_steps)
        return self.lr

    @property
    def evaluation_spec(self):
        """RewardSpec: Reward used by the greedy evaluation."""
        return self.eval_spec or self.reward_spec


@dataclass(frozen=True)
class WarmStartConfig:
    """Supervised warm start and reference construction.

    Attributes:
        sft_steps (int): Gradient steps on the teacher lists.
        lr (float): Warm-start step size.
        ref_size (int): Reference rollouts per context M.
        seed (int): Seed of the reference and training random stream.
        list_len (int): List length K.
        teacher (str): ``targets`` or ``genre``, see
            :py:func:`teacher_list`.
        reward_spec (RewardSpec): Reward of the reference rollouts.
        temperature (float): Sampling temperature of the reference rollouts.
    """

    sft_steps: int = 20
    lr: float = 0.1
    ref_size: int = 128
    seed: int = 0
    list_len: int = 5
    teacher: str = 'targets'
    reward_spec: RewardSpec = field(
        default_factory=lambda: RewardSpec('ndcg', 5))
    temperature: float = 1.0

    def __post_init__(self):
        if self.sft_steps < 0:
            raise ValueError(f"sft_steps must be >= 0, got {self.sft_steps}")
        if self.ref_size < 1:
            raise ValueError(f"ref_size must be >= 1, got {self.ref_size}")
        if self.temperature <= 0:
            raise ValueError(f"temperature must be > 0, "
                             f"got {self.temperature}")
        if self.teacher not in TEACHERS:
            raise ValueError(f"unknown teacher {self.teacher!r}, "
                             f"expected one of {TEACHERS}")


@dataclass
class CurvePoint:
    """One row of the training curve."""

    step: int
    mean_raw_reward: float
    mean_proxy_reward: float
    mean_abs_advantage: float
    grad_norm: float
    eval_metric: float

    @classmethod
    def columns(cls):
        """list: Column names in file order."""
        return [f.name for f in fields(cls)]

    def as_row(self):
        """list: Values in column order."""
        return [getattr(self, name) for name in self.columns()]


@dataclass(eq=False)
class TrainState:
    """Evolving training state.

    Attributes:
        params (PolicyParams): Current parameters.
        old_params (PolicyParams): Parameters the last group was sampled
            with.
        ref_params (PolicyParams): Frozen reference policy.
        refstats (dict): Context id to :py:class:`ReferenceStats`.
        step (int): Completed training steps.
        curve (list): Emitted :py:class:`CurvePoint` rows.
        rng (numpy.random.Generator): Sampling stream.
        n_sampled (int): Lists drawn by training steps so far.
    """

    params: PolicyParams
    old_params: PolicyParams
    ref_params: PolicyParams
    refstats: Dict[int, ReferenceStats]
    step: int = 0
    curve: List[CurvePoint] = field(default_factory=list)
    rng: np.random.Generator = field(
        default_factory=lambda: np.random.default_rng(0))
    n_sampled: int = 0


def group_advantages(rewards, sigma_floor=1e-12):
    """Normalize rewards against their group mean and population std.

    Groups whose std is below ``sigma_floor`` carry no ranking signal and get
    all-zero advantages.

    Raises:
        ValueError: Fewer than 2 rewards.
    """
    values = np.asarray(rewards, dtype=float)
    if values.size < 2:
        raise ValueError(f"need at least 2 rewards, got {values.size}")
    sigma = values.std()
    if sigma < sigma_floor:
        return np.zeros_like(values)
    return (values - values.mean()) / sigma


def surrogate_and_grad(state, group, advantages, clip, temperature=1.0):
    """Clipped surrogate with per-step KL penalty, and its exact gradient.

    The objective averages over rollouts and over the steps of each rollout:
    ``min(rho*A, clip(rho, 1-eps, 1+eps)*A) - beta*KL(pi_theta || pi_ref)``,
    where ``rho`` is the step probability ratio to the recorded sampling
    log-probability. Terms on the clipped arm have no gradient through
    ``rho``.

    Args:
        state (TrainState): Provides ``params`` and ``ref_params``.
        group (Group): Rollouts with recorded step log-probabilities.
        advantages (list): One advantage per rollout.
        clip (ClipConfig): Clip width and KL weight.
        temperature (float): Temperature the group was sampled at.

    Returns:
        tuple: ``(objective, gradient)`` with the gradient shaped like the
        logit table.

    Raises:
        ValueError: Group does not match the parameters or advantages.
    """
    params = state.params
    ctx = group.context_id
    if not 0 <= ctx < params.n_contexts:
        raise ValueError(f"group context {ctx} out of range "
                         f"[0, {params.n_contexts})")
    if len(advantages) != len(group):
        raise ValueError(f"{len(advantages)} advantages for a group of "
                         f"{len(group)}")
    low, high = 1.0 - clip.epsilon, 1.0 + clip.epsilon
    objective = 0.0
    grad = np.zeros_like(params.logits)
    for adv, rollout in zip(advantages, group.rollouts):
        if len(rollout.step_logprobs) != len(rollout.items):
            raise ValueError("rollout is missing step log-probabilities")
        weight = 1.0 / (len(group) * len(rollout.items))
        for step, item in enumerate(rollout.items):
            prefix = rollout.items[:step]
            logp = step_log_distribution(params, ctx, prefix, temperature)
            ratio = math.exp(logp[item] - rollout.step_logprobs[step])
            unclipped = ratio * adv
            clipped = min(max(ratio, low), high) * adv
            if unclipped <= clipped:
                objective += weight * unclipped
                grad[ctx] += weight * adv * ratio * step_grad_logits(
                    np.exp(logp), item, temperature)
            else:
                objective += weight * clipped
            if clip.beta_kl > 0:
                kl, kl_grad = step_kl(params, state.ref_params, ctx, prefix,
                                      temperature)
                objective -= weight * clip.beta_kl * kl
                grad[ctx] -= weight * clip.beta_kl * kl_grad
    return objective, grad


def evaluate_greedy(params, dataset, spec):
    """Mean reward of greedy lists over all contexts of ``dataset``."""
    values = [reward(spec, greedy_decode(params, ctx_id), ctx,
                     dataset.catalog)
              for ctx_id, ctx in enumerate(dataset.contexts)]
    return float(np.mean(values)) if values else 0.0


def blade_train_step(state, dataset, context_id, cfg):
    """Run one sample-estimate-update step on one context.

    Args:
        state (TrainState): Training state, updated in place.
        dataset (Dataset): Contexts and catalog for the rewards.
        context_id (int): Context of this step.
        cfg (TrainConfig): Step settings.

    Returns:
        tuple: ``(state, CurvePoint)``.

    Raises:
        RuntimeError: No reference statistics for the context.
        FloatingPointError: Non-finite objective or gradient.
    """
    stats = state.refstats.get(context_id)
    if stats is None and cfg.dynamic.estimator != 'noprior':
        raise RuntimeError(f"no reference statistics for context "
                           f"{context_id}, run warm_start first")
    ctx = dataset.contexts[context_id]
    state.old_params = state.params.copy()
    rollouts = [sample_list(state.old_params, context_id, cfg.temperature,
                            state.rng)
                for _ in range(cfg.group_size)]
    state.n_sampled += len(rollouts)
    for rollout in rollouts:
        rollout.reward = reward(cfg.reward_spec, rollout.items, ctx,
                                dataset.catalog)
    group = Group(context_id=context_id, rollouts=rollouts)
    raw = group.rewards
    _, proxy = group_proxy_rewards(stats, raw, cfg.dynamic)
    advantages = group_advantages(proxy, cfg.clip.sigma_floor)
    objective, grad = surrogate_and_grad(state, group, advantages, cfg.clip,
                                         cfg.temperature)
    if not math.isfinite(objective) or not np.all(np.isfinite(grad)):
        raise FloatingPointError(
            f"non-finite objective {objective!r} at step {state.step}, "
            f"context {context_id}; raw rewards {raw.tolist()}, "
            f"proxy rewards {proxy.tolist()}")
    state.params = PolicyParams(
        state.params.logits + cfg.lr_at(state.step) * grad,
        state.params.list_len)
    state.step += 1
    if state.step % cfg.eval_every == 0 or not state.curve:
        eval_metric = evaluate_greedy(state.params, dataset,
                                      cfg.evaluation_spec)
    else:
        eval_metric = state.curve[-1].eval_metric
    point = CurvePoint(step=state.step,
                       mean_raw_reward=float(raw.mean()),
                       mean_proxy_reward=float(proxy.mean()),
                       mean_abs_advantage=float(np.abs(advantages).mean()),
                       grad_norm=float(np.linalg.norm(grad)),
                       eval_metric=eval_metric)
    state.curve.append(point)
    return state, point


def teacher_list(ctx, catalog, list_len, teacher='targets'):
    """Supervised target list of one context.

    ``targets`` takes the first ``list_len`` targets in their stored rank
    order. ``genre`` ranks the items outside the history by the history's
    genre mass on their genres, lowest id first on ties.
    """
    if teacher == 'targets':
        return tuple(ctx.targets[:list_len])
    if not ctx.history:
        return tuple(range(list_len))
    hist = genre_dist(ctx.history, catalog)
    seen = set(ctx.history)
    scored = [(-float(np.mean(hist[list(catalog.genres[item])])), item)
              for item in range(catalog.n_items) if item not in seen]
    return tuple(item for _, item in sorted(scored)[:list_len])


def warm_start(dataset, cfg):
    """Fit the reference policy and freeze its reward statistics.

    Starts from zero logits, takes ``cfg.sft_steps`` gradient-ascent steps on
    the log-probability of each context's teacher list, freezes the result as
    the reference policy and samples ``cfg.ref_size`` reference rollouts per
    context.

    Args:
        dataset (Dataset): Non-empty dataset.
        cfg (WarmStartConfig): Warm-start settings.

    Returns:
        TrainState: State at step 0 with ``params == ref_params``.
    """
    if not isinstance(dataset, Dataset) or len(dataset) == 0:
        raise ValueError("warm_start needs a non-empty dataset")
    catalog = dataset.catalog
    params = PolicyParams.zeros(len(dataset), catalog.n_items, cfg.list_len)
    teachers = [teacher_list(ctx, catalog, cfg.list_len, cfg.teacher)
                for ctx in dataset.contexts]
    for _ in range(cfg.sft_steps):
        grad = np.zeros_like(params.logits)
        for ctx_id, items in enumerate(teachers):
            grad += grad_logprob(params, ctx_id, items)
        params = PolicyParams(params.logits + cfg.lr * grad, cfg.list_len)
    rng = np.random.default_rng(cfg.seed)
    refstats = {}
    for ctx_id, ctx in enumerate(dataset.contexts):
        rewards = [reward(cfg.reward_spec,
                          sample_list(params, ctx_id, cfg.temperature,
                                      rng).items,
                          ctx, catalog)
                   for _ in range(cfg.ref_size)]
        refstats[ctx_id] = build_reference(rewards, ctx_id)
    return TrainState(params=params.copy(), old_params=params.copy(),
                      ref_params=params, refstats=refstats, rng=rng)


class BladeTrainer:
    """Round-robin training loop over the contexts of a dataset.

    Attributes:
        dataset (Dataset): Training contexts.
        cfg (TrainConfig): Step settings.
        state (TrainState): Current state.
    """

    def __init__(self, dataset, cfg, state):
        """Attach a warm-started state to a dataset and step settings."""
        self.logger = logging.getLogger(self.__class__.__name__)
        self.logger.debug("__init__(contexts=%r, cfg=%r)", len(dataset), cfg)
        self.dataset = dataset
        self.cfg = cfg
        self.state = state
        if not state.curve:
            state.curve.append(self.initial_point())

    def initial_point(self):
        """Curve row of the warm-started policy before any update."""
        ref_rewards = [s.sorted_rewards for s in self.state.refstats.values()]
        mean_ref = float(np.mean(np.concatenate(ref_rewards))) \
            if ref_rewards else 0.0
        return CurvePoint(step=self.state.step, mean_raw_reward=mean_ref,
                          mean_proxy_reward=0.0, mean_abs_advantage=0.0,
                          grad_norm=0.0,
                          eval_metric=evaluate_greedy(
                              self.state.params, self.dataset,
                              self.cfg.evaluation_spec))

    def next_context(self):
        """Context of the next step, cycling over the dataset."""
        return self.state.step % len(self.dataset)

    def run(self, steps):
        """Run ``steps`` training steps.

        Returns:
            TrainState: The updated state.
        """
        self.logger.debug("run(steps=%r)", steps)
        for _ in range(steps):
            _, point = blade_train_step(self.state, self.dataset,
                                        self.next_context(), self.cfg)
            if point.step % 50 == 0:
                self.logger.info("step %d: raw %.4f proxy %.4f eval %.4f",
                                 point.step, point.mean_raw_reward,
                                 point.mean_proxy_reward, point.eval_metric)
        return self.state
