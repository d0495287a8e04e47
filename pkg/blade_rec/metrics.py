# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""List-wise reward functions.

Relevance metrics (Recall@k, NDCG@k with binary relevance), genre metrics
(MGU, ILD) and the composite fairness/diversity rewards. Every function is
pure over (list, context, catalog).

A :py:class:`RewardSpec` can be written as a short string:
::

    recall@3
    ndcg@5
    mgu
    ild
    fair@5:lambda=0.5     ndcg@5 - 0.5 * mgu
    div@5:lambda=0.1      ndcg@5 + 0.1 * ild

The grammar is ``kind[@k][:lambda=<float>]``. ``k`` is required for
``recall``, ``ndcg``, ``fair`` and ``div``; ``lambda`` defaults to 0.
"""
import math
import re
from dataclasses import dataclass

import numpy as np


__author__ = "blade_rec developers"

REWARD_KINDS = ('recall', 'ndcg', 'mgu', 'ild', 'fair', 'div')
_K_KINDS = ('recall', 'ndcg', 'fair', 'div')
_SPEC_RE = re.compile(r"^(?P<kind>[a-z]+)(@(?P<k>\d+))?"
                      r"(:lambda=(?P<lam>[-+0-9.eE]+))?$")


def _check_targets(targets):
    if len(targets) == 0:
        raise ValueError("targets must not be empty")


def recall_at_k(items, targets, k):
    """Fraction of targets retrieved in the first ``k`` items.

    Args:
        items (list): Recommended item ids in rank order.
        targets (iterable): Relevant item ids.
        k (int): Cutoff, at least 1.

    Returns:
        float: Recall in [0, 1].
    """
    _check_targets(targets)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    target_set = set(targets)
    hits = sum(1 for item in items[:k] if item in target_set)
    return hits / len(target_set)


def ndcg_at_k(items, targets, k):
    """Binary-relevance NDCG with base-2 log discount.

    DCG sums ``1/log2(i+1)`` over relevant positions ``i <= k``; IDCG places
    ``min(k, |targets|)`` relevant items at the top.
    """
    _check_targets(targets)
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    target_set = set(targets)
    dcg = sum(1.0 / math.log2(pos + 2)
              for pos, item in enumerate(items[:k]) if item in target_set)
    idcg = sum(1.0 / math.log2(pos + 2)
               for pos in range(min(k, len(target_set))))
    return dcg / idcg


def genre_dist(items, catalog):
    """Normalized genre frequency of a list of items.

    Each item carries unit mass split equally over its genres, so the result
    always sums to 1.

    Returns:
        numpy.ndarray: Probability vector of length ``catalog.n_genres``.
    """
    if len(items) == 0:
        raise ValueError("items must not be empty")
    probs = np.zeros(catalog.n_genres)
    for item in items:
        item_genres = catalog.genres[item]
        probs[list(item_genres)] += 1.0 / len(item_genres)
    return probs / len(items)


def mgu(items, history, catalog):
    """Mean absolute gap between list and history genre distributions.

    Lower is fairer; 0 iff both distributions agree.
    """
    if len(items) == 0 or len(history) == 0:
        raise ValueError("list and history must not be empty")
    gap = np.abs(genre_dist(items, catalog) - genre_dist(history, catalog))
    return float(gap.sum() / catalog.n_genres)


def ild(items, catalog):
    """Mean Jaccard genre distance over ordered pairs ``i != j``."""
    size = len(items)
    if size < 2:
        raise ValueError(f"ILD needs at least 2 items, got {size}")
    sets = [set(catalog.genres[item]) for item in items]
    total = 0.0
    for i in range(size):
        for j in range(i + 1, size):
            total += 1.0 - len(sets[i] & sets[j]) / len(sets[i] | sets[j])
    return 2.0 * total / (size * (size - 1))


@dataclass(frozen=True)
class RewardSpec:
    """Declarative list-wise reward.

    Attributes:
        kind (str): One of ``REWARD_KINDS``.
        k (int): Cutoff for recall/ndcg and the NDCG grounding of fair/div.
        lam (float): Weight of MGU/ILD in the composite rewards.
    """

    kind: str
    k: int = 0
    lam: float = 0.0

    def __post_init__(self):
        if self.kind not in REWARD_KINDS:
            raise ValueError(f"unknown reward kind {self.kind!r}, "
                             f"expected one of {REWARD_KINDS}")
        if self.kind in _K_KINDS and self.k < 1:
            raise ValueError(f"{self.kind} needs k >= 1, got {self.k}")
        if self.lam < 0:
            raise ValueError(f"lambda must be >= 0, got {self.lam}")

    @classmethod
    def parse(cls, text):
        """Parse ``kind[@k][:lambda=x]``.

        Raises:
            ValueError: Text does not follow the grammar.
        """
        match = _SPEC_RE.match(text.strip())
        if match is None:
            raise ValueError(f"cannot parse reward spec {text!r}")
        k = int(match.group('k')) if match.group('k') else 0
        lam = float(match.group('lam')) if match.group('lam') else 0.0
        return cls(kind=match.group('kind'), k=k, lam=lam)

    def __str__(self):
        text = self.kind
        if self.kind in _K_KINDS:
            text += f"@{self.k}"
        if self.kind in ('fair', 'div'):
            text += f":lambda={self.lam!r}"
        return text

    def bounds(self):
        """Return the (low, high) range of this reward."""
        if self.kind in ('fair', 'div'):
            return (-self.lam, 1.0 + self.lam)
        return (0.0, 1.0)


def reward(spec, items, ctx, catalog):
    """Evaluate ``spec`` on a list for one context.

    Args:
        spec (RewardSpec): Reward to evaluate.
        items (list): Recommended list.
        ctx (UserContext): Context providing targets and history.
        catalog (Catalog): Catalog providing genres.

    Returns:
        float: The reward value.
    """
    if spec.kind == 'recall':
        return recall_at_k(items, ctx.targets, spec.k)
    if spec.kind == 'ndcg':
        return ndcg_at_k(items, ctx.targets, spec.k)
    if spec.kind == 'mgu':
        return mgu(items, ctx.history, catalog)
    if spec.kind == 'ild':
        return ild(items, catalog)
    grounding = ndcg_at_k(items, ctx.targets, spec.k)
    if spec.kind == 'fair':
        return grounding - spec.lam * mgu(items, ctx.history, catalog)
    return grounding + spec.lam * ild(items, catalog)
