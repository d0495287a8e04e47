# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Experiment configuration.

A config file is a flat list of ``key = value`` lines. ``#`` starts a
comment. Values are python literals when they parse as one, strings
otherwise:
::

    # tau study on NDCG@5
    reward = ndcg@5
    group_size = 16
    tau = 0.3
    mode = blade

Precedence is dataclass default < config file < command-line flag.
"""
import logging
from ast import literal_eval
from dataclasses import dataclass, fields, replace
from typing import Optional

from .estimator import DynamicConfig
from .grpo import ClipConfig, TrainConfig, WarmStartConfig
from .metrics import RewardSpec


__author__ = "blade_rec developers"

MODES = ('blade', 'static', 'noprior')

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ExperimentConfig:
    """Every setting of one experiment run.

    Attributes:
        dataset (str): Dataset path; when ``None`` the dataset is generated
            from the ``n_*``/``*_len`` keys and ``seed``.
        n_items (int): Catalog size for generated datasets.
        n_genres (int): Genre universe size for generated datasets.
        max_genres_per_item (int): Genres per item upper bound.
        n_contexts (int): Contexts in generated datasets.
        history_len (int): History length.
        target_len (int): Target set size.
        list_len (int): Recommended list length K.
        reward (str): Training reward spec string.
        eval_reward (str): Greedy evaluation reward, defaults to ``reward``.
        group_size (int): Group size G.
        tau (float): Dynamic coefficient.
        bon_n (int): N inside the proxy reward.
        cdf_floor (float): CDF floor, ``None`` for half a pooled sample.
        ref_size (int): Reference rollouts per context M.
        steps (int): Training steps.
        lr (float): Training step size.
        lr_schedule (str): ``constant`` or ``linear``.
        epsilon (float): Clip width.
        beta_kl (float): KL coefficient.
        sigma_floor (float): Smallest usable group std.
        temperature (float): Training sampling temperature.
        ref_temperature (float): Sampling temperature of the reference
            rollouts.
        sft_steps (int): Warm-start steps.
        sft_lr (float): Warm-start step size.
        teacher (str): Warm-start teacher, ``targets`` or ``genre``.
        eval_every (int): Greedy evaluation period in steps.
        seed (int): Seed of generation, warm start and training.
        mode (str): ``blade``, ``static`` (tau 0) or ``noprior``.
        out (str): Output directory.
    """

    dataset: Optional[str] = None
    n_items: int = 50
    n_genres: int = 5
    max_genres_per_item: int = 2
    n_contexts: int = 20
    history_len: int = 10
    target_len: int = 5
    list_len: int = 5
    reward: str = 'ndcg@5'
    eval_reward: Optional[str] = None
    group_size: int = 16
    tau: float = 0.3
    bon_n: int = 4
    cdf_floor: Optional[float] = None
    ref_size: int = 128
    steps: int = 400
    lr: float = 5.0
    lr_schedule: str = 'constant'
    epsilon: float = 0.2
    beta_kl: float = 0.04
    sigma_floor: float = 1e-12
    temperature: float = 1.0
    ref_temperature: float = 0.25
    sft_steps: int = 20
    sft_lr: float = 0.1
    teacher: str = 'genre'
    eval_every: int = 1
    seed: int = 0
    mode: str = 'blade'
    out: str = 'runs'

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}, "
                             f"expected one of {MODES}")
        RewardSpec.parse(self.reward)
        if self.eval_reward is not None:
            RewardSpec.parse(self.eval_reward)

    @classmethod
    def keys(cls):
        """list: Valid config keys."""
        return [f.name for f in fields(cls)]

    def override(self, **kwargs):
        """Return a copy with the non-``None`` keyword values applied."""
        unknown = set(kwargs) - set(self.keys())
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        return replace(self, **{k: v for k, v in kwargs.items()
                                if v is not None})

    def reward_spec(self):
        """RewardSpec: Parsed training reward."""
        return RewardSpec.parse(self.reward)

    def dynamic_config(self):
        """DynamicConfig: Estimator settings for ``mode``."""
        return DynamicConfig(tau=self.tau, bon_n=self.bon_n,
                             cdf_floor=self.cdf_floor, estimator=self.mode)

    def train_config(self):
        """TrainConfig: Settings of each training step."""
        eval_spec = RewardSpec.parse(self.eval_reward) \
            if self.eval_reward else None
        return TrainConfig(group_size=self.group_size,
                           dynamic=self.dynamic_config(),
                           reward_spec=self.reward_spec(),
                           clip=ClipConfig(epsilon=self.epsilon,
                                           beta_kl=self.beta_kl,
                                           sigma_floor=self.sigma_floor),
                           temperature=self.temperature,
                           lr=self.lr,
                           lr_schedule=self.lr_schedule,
                           total_steps=self.steps,
                           eval_spec=eval_spec,
                           eval_every=self.eval_every)

    def warm_start_config(self):
        """WarmStartConfig: Settings of the warm start."""
        return WarmStartConfig(sft_steps=self.sft_steps, lr=self.sft_lr,
                               ref_size=self.ref_size, seed=self.seed,
                               list_len=self.list_len, teacher=self.teacher,
                               reward_spec=self.reward_spec(),
                               temperature=self.ref_temperature)


def parse_value(text):
    """Convert one config or command-line value to a python literal.

    Numbers, booleans, ``None`` and quoted strings are evaluated, anything
    else is kept as the bare string, so ``ndcg@5`` stays a string.
    """
    try:
        return literal_eval(text)
    except (ValueError, TypeError, SyntaxError):
        return text


def parse_config_text(text):
    """Parse ``key = value`` lines into a dict.

    Raises:
        ValueError: Malformed line or unknown key, names the line.
    """
    values = {}
    valid = set(ExperimentConfig.keys())
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ValueError(f"config line {lineno}: expected key = value, "
                             f"got {line!r}")
        key, value = (part.strip() for part in line.split('=', 1))
        if key not in valid:
            raise ValueError(f"config line {lineno}: unknown key {key!r}")
        values[key] = parse_value(value)
    return values


def import_config(path, base=None):
    """Read a config file on top of ``base`` (defaults if ``None``).

    Args:
        path (str): Path to the config file.
        base (ExperimentConfig): Values the file overrides.

    Returns:
        ExperimentConfig: The merged configuration.
    """
    logger.debug("import_config(path=%r)", path)
    with open(path, encoding='utf-8') as cfg_fd:
        values = parse_config_text(cfg_fd.read())
    base = base or ExperimentConfig()
    return replace(base, **values)
