# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""package init for blade_rec.

Exposes useful modules.
"""
from .envsim import generate_dataset, load_dataset, save_dataset
from .metrics import RewardSpec, reward
from .estimator import DynamicConfig, blade_cdf, proxy_reward
from .bon import DiscreteDist, bon_exact_distribution, bon_select
from .grpo import BladeTrainer, TrainConfig, blade_train_step, warm_start
from .config import ExperimentConfig, import_config
from .experiments import BLADE_EXCEPTIONS, Experiment
from .blade_cmd import BladeCmd

__author__ = "blade_rec developers"
__version__ = "0.1.0"

__all__ = ['BLADE_EXCEPTIONS',
           'BladeCmd',
           'BladeTrainer',
           'DiscreteDist',
           'DynamicConfig',
           'Experiment',
           'ExperimentConfig',
           'RewardSpec',
           'TrainConfig',
           'blade_cdf',
           'blade_train_step',
           'bon_exact_distribution',
           'bon_select',
           'generate_dataset',
           'import_config',
           'load_dataset',
           'proxy_reward',
           'reward',
           'save_dataset',
           'warm_start']
