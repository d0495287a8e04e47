# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Pytest configuration.

Declares fixtures and common functions.
"""
import numpy as np
import pytest

from blade_rec.envsim import Catalog, UserContext, generate_dataset
from blade_rec.estimator import build_reference
from blade_rec.grpo import TrainState, WarmStartConfig, warm_start
from blade_rec.policy import PolicyParams

TINY_SIZES = {"n_items": 12, "n_genres": 3, "max_genres_per_item": 2,
              "n_contexts": 4, "history_len": 3, "target_len": 4}


def make_state(params, ref_rewards=(-1.0,), seed=0):
    """Train state at ``params`` with ``params`` as reference policy."""
    refstats = {ctx: build_reference(ref_rewards, ctx)
                for ctx in range(params.n_contexts)}
    return TrainState(params=params.copy(), old_params=params.copy(),
                      ref_params=params.copy(), refstats=refstats,
                      rng=np.random.default_rng(seed))


@pytest.fixture(scope="function")
def tiny_dataset():
    yield generate_dataset(3, **TINY_SIZES)


@pytest.fixture(scope="function")
def small_dataset():
    yield generate_dataset(5, n_items=20, n_genres=4, n_contexts=6,
                           history_len=5, target_len=6)


@pytest.fixture(scope="function")
def two_genre_catalog():
    yield Catalog(n_items=4, n_genres=2, genres=((0,), (1,), (0, 1), (0,)))


@pytest.fixture(scope="function")
def hand_ctx():
    yield UserContext(id=0, history=(0, 1), targets=(2, 3))


@pytest.fixture(scope="function")
def uniform_params():
    yield PolicyParams.zeros(2, 5, 3)


@pytest.fixture(scope="function")
def warm_state(tiny_dataset):
    cfg = WarmStartConfig(sft_steps=5, ref_size=16, seed=1, list_len=3)
    yield warm_start(tiny_dataset, cfg)
