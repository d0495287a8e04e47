# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Experiment runs and their files.

An :py:class:`Experiment` wraps one
:py:class:`~blade_rec.config.ExperimentConfig` and provides training, greedy
evaluation, Best-of-N inference and parameter sweeps. Outputs are plain files:

``checkpoint.jsonl``
    line-delimited json: a header
    ``{"version", "kind", "step", "n_contexts", "n_items", "list_len"}``,
    then ``{"params": [[...]]}``, ``{"ref_params": [[...]]}`` and one
    ``{"context_id", "ref_rewards": [...]}`` line per context (sorted
    reference rewards, M entries).

``curve.csv``
    one :py:class:`~blade_rec.grpo.CurvePoint` per row with the header
    ``step,mean_raw_reward,mean_proxy_reward,mean_abs_advantage,grad_norm,
    eval_metric``.
"""
import csv
import io
import json
import logging
import os
import time
from dataclasses import replace

import numpy as np

from .bon import bon_select
from .envsim import (DatasetFormatError, DatasetVersionError,
                     generate_dataset, load_dataset)
from .estimator import build_reference
from .grpo import BladeTrainer, CurvePoint, TrainState, warm_start
from .metrics import RewardSpec, reward
from .policy import PolicyParams, greedy_decode, sample_list


__author__ = "blade_rec developers"

CHECKPOINT_VERSION = 1
CHECKPOINT_KIND = 'blade_checkpoint'
DEFAULT_EVAL_SPECS = ('recall@3', 'recall@5', 'ndcg@3', 'ndcg@5', 'mgu',
                      'ild')
SWEEP_KEYS = ('tau', 'group_size', 'lambda', 'mode', 'bon_n', 'ref_size')

BLADE_EXCEPTIONS = (OSError, ValueError, KeyError, RuntimeError,
                    FloatingPointError)

logger = logging.getLogger(__name__)


def save_checkpoint(state, path):
    """Write parameters, reference parameters and reference rewards."""
    logger.debug("save_checkpoint(path=%r, step=%r)", path, state.step)
    params = state.params
    header = {"version": CHECKPOINT_VERSION, "kind": CHECKPOINT_KIND,
              "step": state.step, "n_contexts": params.n_contexts,
              "n_items": params.n_items, "list_len": params.list_len}
    with open(path, "w", encoding="utf-8") as out_fd:
        out_fd.write(json.dumps(header) + "\n")
        out_fd.write(json.dumps({"params": params.logits.tolist()}) + "\n")
        out_fd.write(json.dumps(
            {"ref_params": state.ref_params.logits.tolist()}) + "\n")
        for ctx_id in sorted(state.refstats):
            out_fd.write(json.dumps({
                "context_id": ctx_id,
                "ref_rewards": state.refstats[ctx_id].sorted_rewards.tolist()
            }) + "\n")


def _load_record(line, lineno, key):
    try:
        record = json.loads(line)
        return record, record[key]
    except json.decoder.JSONDecodeError as exc:
        raise DatasetFormatError(f"invalid json: {exc.msg}", lineno) from None
    except (KeyError, TypeError):
        raise DatasetFormatError(f"missing {key!r} field", lineno) from None


def load_checkpoint(path):
    """Read a checkpoint into a :py:class:`~blade_rec.grpo.TrainState`.

    Raises:
        FileNotFoundError: Path does not exist.
        DatasetFormatError: Malformed record, names the line.
        DatasetVersionError: Unknown version.
    """
    logger.debug("load_checkpoint(path=%r)", path)
    with open(path, encoding="utf-8") as in_fd:
        lines = [line for line in in_fd.read().splitlines() if line.strip()]
    if len(lines) < 3:
        raise DatasetFormatError("checkpoint is truncated", len(lines) + 1)
    header, version = _load_record(lines[0], 1, "version")
    if version != CHECKPOINT_VERSION or header.get("kind") != CHECKPOINT_KIND:
        raise DatasetVersionError(f"unknown checkpoint version {version!r}",
                                  1)
    list_len = header.get("list_len")
    try:
        params = PolicyParams(_load_record(lines[1], 2, "params")[1],
                              list_len)
        ref_params = PolicyParams(_load_record(lines[2], 3, "ref_params")[1],
                                  list_len)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DatasetFormatError):
            raise
        raise DatasetFormatError(str(exc), 2) from None
    refstats = {}
    for lineno, line in enumerate(lines[3:], start=4):
        record, rewards = _load_record(line, lineno, "ref_rewards")
        ctx_id = record.get("context_id")
        try:
            refstats[ctx_id] = build_reference(rewards, ctx_id)
        except ValueError as exc:
            raise DatasetFormatError(str(exc), lineno) from None
    return TrainState(params=params, old_params=params.copy(),
                      ref_params=ref_params, refstats=refstats,
                      step=header.get("step", 0))


def write_curve(curve, path):
    """Write curve points as csv with a header row."""
    with open(path, "w", encoding="utf-8", newline="") as out_fd:
        out_fd.write(format_table(CurvePoint.columns(),
                                  [point.as_row() for point in curve]))


def read_curve(path):
    """Read a curve file back into :py:class:`~blade_rec.grpo.CurvePoint`."""
    with open(path, encoding="utf-8", newline="") as in_fd:
        rows = list(csv.DictReader(in_fd))
    return [CurvePoint(step=int(row['step']),
                       **{name: float(row[name])
                          for name in CurvePoint.columns()[1:]})
            for row in rows]


def format_table(header, rows):
    """Render rows as csv text with a header row."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def check_compatible(state, dataset):
    """Raise ValueError if the checkpoint does not fit the dataset."""
    params = state.params
    if params.n_contexts != len(dataset) or \
            params.n_items != dataset.catalog.n_items:
        raise ValueError(f"checkpoint has {params.n_contexts} contexts x "
                         f"{params.n_items} items, dataset has "
                         f"{len(dataset)} contexts x "
                         f"{dataset.catalog.n_items} items")


def evaluate_table(state, dataset, specs=DEFAULT_EVAL_SPECS):
    """Mean greedy-decode reward per spec.

    Returns:
        tuple: ``(header, row)`` with one column per spec.
    """
    check_compatible(state, dataset)
    specs = [RewardSpec.parse(s) if isinstance(s, str) else s for s in specs]
    lists = [greedy_decode(state.params, ctx_id)
             for ctx_id in range(len(dataset.contexts))]
    row = []
    for spec in specs:
        values = [reward(spec, items, ctx, dataset.catalog)
                  for items, ctx in zip(lists, dataset.contexts)]
        row.append(float(np.mean(values)) if values else 0.0)
    return [str(spec) for spec in specs], row


def best_of_n_table(state, dataset, ns, spec, seed=0, temperature=1.0,
                    repeats=1):
    """Best-of-N selection quality and wall time for each N.

    For every N and context, ``repeats`` times: sample N lists, score them
    and keep the best. Each N restarts the random stream from ``seed``.

    Returns:
        tuple: ``(header, rows)`` with rows ``[N, mean reward, seconds]``.
    """
    check_compatible(state, dataset)
    if isinstance(spec, str):
        spec = RewardSpec.parse(spec)
    rows = []
    for n in ns:
        if n < 1:
            raise ValueError(f"N must be >= 1, got {n}")
        rng = np.random.default_rng(seed)
        chosen = []
        start = time.perf_counter()
        for _ in range(repeats):
            for ctx_id, ctx in enumerate(dataset.contexts):
                rewards = [reward(spec,
                                  sample_list(state.params, ctx_id,
                                              temperature, rng).items,
                                  ctx, dataset.catalog)
                           for _ in range(n)]
                chosen.append(rewards[bon_select(rewards)])
        elapsed = time.perf_counter() - start
        rows.append([n, float(np.mean(chosen)), elapsed])
    return ['n', 'mean_reward', 'wall_time_s'], rows


class Experiment:
    """One configured experiment.

    Attributes:
        cfg (ExperimentConfig): Settings of the run.
    """

    def __init__(self, cfg):
        """Bind the experiment to its configuration."""
        self.logger = logging.getLogger(self.__class__.__name__)
        self.logger.debug("__init__(cfg=%r)", cfg)
        self.cfg = cfg

    def dataset(self):
        """Load ``cfg.dataset`` or generate one from the size keys."""
        cfg = self.cfg
        if cfg.dataset:
            if not os.path.exists(cfg.dataset):
                raise FileNotFoundError(f"dataset {cfg.dataset!r} not found")
            return load_dataset(cfg.dataset)
        return generate_dataset(cfg.seed, n_items=cfg.n_items,
                                n_genres=cfg.n_genres,
                                max_genres_per_item=cfg.max_genres_per_item,
                                n_contexts=cfg.n_contexts,
                                history_len=cfg.history_len,
                                target_len=cfg.target_len)

    def train(self, write=True):
        """Warm start, train ``cfg.steps`` steps and write the outputs.

        Returns:
            TrainState: The final state, ``state.curve`` holds the curve.
        """
        cfg = self.cfg
        dataset = self.dataset()
        self.logger.info("training mode=%s tau=%r G=%r M=%r steps=%r "
                         "reward=%s seed=%r", cfg.mode, cfg.tau,
                         cfg.group_size, cfg.ref_size, cfg.steps, cfg.reward,
                         cfg.seed)
        state = warm_start(dataset, cfg.warm_start_config())
        trainer = BladeTrainer(dataset, cfg.train_config(), state)
        trainer.run(cfg.steps)
        if write:
            os.makedirs(cfg.out, exist_ok=True)
            save_checkpoint(state, os.path.join(cfg.out, "checkpoint.jsonl"))
            write_curve(state.curve, os.path.join(cfg.out, "curve.csv"))
        return state

    def sweep(self, key, values, seeds):
        """Train once per (value, seed) and collect the final metrics.

        ``key`` is a config key or ``lambda`` for the composite reward
        weight. Each run writes into ``<out>/<key>=<value>/seed=<seed>``.

        Returns:
            tuple: ``(header, rows)`` with rows
            ``[key, value, seed, final eval, final raw reward]``.
        """
        if key not in SWEEP_KEYS:
            raise ValueError(f"cannot sweep {key!r}, expected one of "
                             f"{SWEEP_KEYS}")
        rows = []
        for value in values:
            for seed in seeds:
                cfg = self._sweep_config(key, value, seed)
                state = Experiment(cfg).train()
                last = state.curve[-1]
                rows.append([key, value, seed, last.eval_metric,
                             last.mean_raw_reward])
        return ['key', 'value', 'seed', 'final_eval', 'final_raw_reward'], \
            rows

    def _sweep_config(self, key, value, seed):
        out = os.path.join(self.cfg.out, f"{key}={value}", f"seed={seed}")
        if key == 'lambda':
            spec = replace(self.cfg.reward_spec(), lam=float(value))
            return self.cfg.override(reward=str(spec), seed=seed, out=out)
        return self.cfg.override(**{key: value, 'seed': seed, 'out': out})
