# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Synthetic recommendation world.

Generates a catalog of genre-labelled items and user contexts with a history
and a disjoint target set, so every list-wise reward can be computed without
real data. All generation is a pure function of the seed and the sizes.

Datasets are stored as line-delimited json. The first line is the header:
::

    {"version": 1, "n_items": 50, "n_genres": 5, "seed": 7,
     "genres": [[0, 3], [1], ...]}

Every following line is one context:
::

    {"id": 0, "history": [12, 4, ...], "targets": [33, 8, ...]}

``id`` is the 0-based position of the context in the file, which is also its
row in the policy table. ``targets`` are stored in rank order; the metrics
treat them as a set.
"""
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple

import numpy as np


__author__ = "blade_rec developers"

DATASET_VERSION = 1
NOISE_SCALE = 0.1

logger = logging.getLogger(__name__)


class DatasetFormatError(ValueError):
    """Malformed dataset or checkpoint file.

    Attributes:
        lineno (int): 1-based line number of the offending record.
    """

    def __init__(self, msg, lineno=None):
        """Build the message from ``msg`` and the offending line."""
        self.lineno = lineno
        if lineno is not None:
            msg = f"line {lineno}: {msg}"
        super().__init__(msg)


class DatasetVersionError(DatasetFormatError):
    """File written with an unknown schema version."""


@dataclass(frozen=True)
class Catalog:
    """Item set with per-item genre sets.

    Attributes:
        n_items (int): Number of items, ids are ``0..n_items-1``.
        n_genres (int): Size of the genre universe.
        genres (tuple): Sorted genre id tuple for each item.
    """

    n_items: int
    n_genres: int
    genres: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.n_items < 2:
            raise ValueError(f"n_items must be >= 2, got {self.n_items}")
        if len(self.genres) != self.n_items:
            raise ValueError(f"expected {self.n_items} genre sets, "
                             f"got {len(self.genres)}")
        for item, item_genres in enumerate(self.genres):
            if not item_genres:
                raise ValueError(f"item {item} has no genre")
            if any(g < 0 or g >= self.n_genres for g in item_genres):
                raise ValueError(f"item {item} genre out of range "
                                 f"[0, {self.n_genres}): {item_genres}")

    def check_items(self, items):
        """Raise ValueError if any item id is not in the catalog."""
        for item in items:
            if not 0 <= item < self.n_items:
                raise ValueError(f"item id {item} not in catalog of "
                                 f"{self.n_items} items")


@dataclass(frozen=True)
class UserContext:
    """One user: ordered history and the target set that follows it.

    ``latent_pref`` holds the genre preference a generated context was drawn
    from. It is not stored in dataset files and takes no part in equality, so
    rewards depend on (list, context, catalog) alone.
    """

    id: int
    history: Tuple[int, ...]
    targets: Tuple[int, ...]
    latent_pref: Optional[Tuple[float, ...]] = field(default=None,
                                                     compare=False)

    def __post_init__(self):
        if not self.targets:
            raise ValueError(f"context {self.id} has no targets")
        if set(self.history) & set(self.targets):
            raise ValueError(f"context {self.id} history and targets "
                             f"overlap")


@dataclass(frozen=True)
class Dataset:
    """Catalog plus contexts, tagged with the generating seed."""

    catalog: Catalog
    contexts: Tuple[UserContext, ...]
    seed: int

    def __len__(self):
        return len(self.contexts)


def generate_catalog(seed, n_items, n_genres, max_genres_per_item):
    """Draw a catalog with 1..max_genres_per_item genres per item.

    Args:
        seed (int): Random seed.
        n_items (int): Number of items, at least 2.
        n_genres (int): Genre universe size, at least 1.
        max_genres_per_item (int): Upper bound of genres per item.

    Returns:
        Catalog: The generated catalog.

    Raises:
        ValueError: Invalid sizes.
    """
    logger.debug("generate_catalog(seed=%r, n_items=%r, n_genres=%r, "
                 "max_genres_per_item=%r)", seed, n_items, n_genres,
                 max_genres_per_item)
    if n_items < 2:
        raise ValueError(f"n_items must be >= 2, got {n_items}")
    if n_genres < 1:
        raise ValueError(f"n_genres must be >= 1, got {n_genres}")
    if not 1 <= max_genres_per_item <= n_genres:
        raise ValueError(f"max_genres_per_item must be in [1, {n_genres}], "
                         f"got {max_genres_per_item}")
    rng = np.random.default_rng(seed)
    genres = []
    for _ in range(n_items):
        count = int(rng.integers(1, max_genres_per_item + 1))
        picked = rng.choice(n_genres, size=count, replace=False)
        genres.append(tuple(sorted(int(g) for g in picked)))
    return Catalog(n_items=n_items, n_genres=n_genres, genres=tuple(genres))


def _item_affinity(catalog, pref):
    """Mean preference over each item's genres."""
    return np.array([np.mean([pref[g] for g in item_genres])
                     for item_genres in catalog.genres])


def generate_contexts(catalog, seed, n_contexts, history_len, target_len):
    """Generate user contexts by ranking items on preference plus noise.

    Each context draws a latent genre preference, scores items by their mean
    genre preference plus uniform noise of ``NOISE_SCALE`` times the score
    range, and takes the top ``history_len`` items as history and the next
    ``target_len`` items as targets.

    Args:
        catalog (Catalog): Catalog to draw from.
        seed (int): Random seed.
        n_contexts (int): Number of contexts.
        history_len (int): History length H.
        target_len (int): Target set size, at least 1.

    Returns:
        Dataset: Catalog and the generated contexts.

    Raises:
        ValueError: Sizes exceed the catalog.
    """
    logger.debug("generate_contexts(seed=%r, n_contexts=%r, history_len=%r, "
                 "target_len=%r)", seed, n_contexts, history_len, target_len)
    if n_contexts < 0 or history_len < 0:
        raise ValueError("n_contexts and history_len must be >= 0")
    if target_len < 1:
        raise ValueError(f"target_len must be >= 1, got {target_len}")
    if history_len + target_len > catalog.n_items:
        raise ValueError(f"history_len + target_len = "
                         f"{history_len + target_len} exceeds "
                         f"{catalog.n_items} catalog items")
    rng = np.random.default_rng(seed)
    contexts = []
    for ctx_id in range(n_contexts):
        pref = rng.normal(size=catalog.n_genres)
        score = _item_affinity(catalog, pref)
        spread = float(score.max() - score.min()) or 1.0
        score = score + rng.uniform(0.0, NOISE_SCALE * spread,
                                    size=catalog.n_items)
        # stable sort keeps ties deterministic
        ranked = [int(i) for i in np.argsort(-score, kind='stable')]
        contexts.append(UserContext(
            id=ctx_id,
            history=tuple(ranked[:history_len]),
            targets=tuple(ranked[history_len:history_len + target_len]),
            latent_pref=tuple(float(p) for p in pref)))
    return Dataset(catalog=catalog, contexts=tuple(contexts), seed=seed)


def generate_dataset(seed, n_items=50, n_genres=5, max_genres_per_item=2,
                     n_contexts=20, history_len=10, target_len=10):
    """Generate catalog and contexts from one seed."""
    catalog = generate_catalog(seed, n_items, n_genres, max_genres_per_item)
    ds = generate_contexts(catalog, seed + 1, n_contexts, history_len,
                           target_len)
    return replace(ds, seed=seed)


def dumps_dataset(ds):
    """Serialize a dataset to line-delimited json text."""
    header = {"version": DATASET_VERSION,
              "n_items": ds.catalog.n_items,
              "n_genres": ds.catalog.n_genres,
              "seed": ds.seed,
              "genres": [list(g) for g in ds.catalog.genres]}
    lines = [json.dumps(header)]
    for ctx in ds.contexts:
        lines.append(json.dumps({"id": ctx.id,
                                 "history": list(ctx.history),
                                 "targets": list(ctx.targets)}))
    return "\n".join(lines) + "\n"


def save_dataset(ds, path):
    """Write a dataset file.

    Args:
        ds (Dataset): Dataset to write.
        path (str): Destination path.
    """
    logger.debug("save_dataset(path=%r)", path)
    with open(path, "w", encoding="utf-8") as out_fd:
        out_fd.write(dumps_dataset(ds))


def _field(record, key, lineno):
    try:
        return record[key]
    except KeyError:
        raise DatasetFormatError(f"missing {key!r} field", lineno) from None


def _parse_line(line, lineno):
    try:
        record = json.loads(line)
    except json.decoder.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid json: {exc.msg}", lineno) from None
    if not isinstance(record, dict):
        raise DatasetFormatError("record is not an object", lineno)
    return record


def loads_dataset(text):
    """Parse dataset text produced by :py:func:`dumps_dataset`.

    Raises:
        DatasetFormatError: Malformed record, names the line.
        DatasetVersionError: Unknown schema version.
    """
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise DatasetFormatError("missing header record", 1)
    header = _parse_line(lines[0], 1)
    version = _field(header, "version", 1)
    if version != DATASET_VERSION:
        raise DatasetVersionError(f"unknown dataset version {version!r}, "
                                  f"expected {DATASET_VERSION}", 1)
    try:
        catalog = Catalog(
            n_items=_field(header, "n_items", 1),
            n_genres=_field(header, "n_genres", 1),
            genres=tuple(tuple(g) for g in _field(header, "genres", 1)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DatasetFormatError):
            raise
        raise DatasetFormatError(str(exc), 1) from None
    contexts = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        record = _parse_line(line, lineno)
        try:
            ctx = UserContext(
                id=_field(record, "id", lineno),
                history=tuple(_field(record, "history", lineno)),
                targets=tuple(_field(record, "targets", lineno)))
            catalog.check_items(ctx.history + ctx.targets)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DatasetFormatError):
                raise
            raise DatasetFormatError(str(exc), lineno) from None
        if ctx.id != len(contexts):
            raise DatasetFormatError(f"context id {ctx.id!r} does not match "
                                     f"its position {len(contexts)}", lineno)
        contexts.append(ctx)
    return Dataset(catalog=catalog, contexts=tuple(contexts),
                   seed=_field(header, "seed", 1))


def load_dataset(path):
    """Read a dataset file.

    Args:
        path (str): Path to the dataset file.

    Returns:
        Dataset: Parsed dataset.

    Raises:
        FileNotFoundError: Path does not exist.
        DatasetFormatError: Malformed record, names the line.
        DatasetVersionError: Unknown schema version.
    """
    logger.debug("load_dataset(path=%r)", path)
    with open(path, encoding="utf-8") as in_fd:
        return loads_dataset(in_fd.read())
