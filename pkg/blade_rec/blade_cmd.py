#! /usr/bin/env python3
# Copyright (c) 2026 blade_rec developers
#
# This file is subject to the terms and conditions of the MIT License. See the
# file LICENSE in the top level directory for more details.
# SPDX-License-Identifier:    MIT
"""Command line for dataset generation, training, evaluation and Best-of-N.

Usage:
    blade_rec [-h] [--config CONFIG] [--seed SEED] [--out OUT]
              [--loglevel LOGLEVEL]
              [--logmodules LOGMODULES [LOGMODULES ...]]
              [command [args ...]]

    commands:
        gen-data    generate a synthetic dataset file
        train       warm start and train, write checkpoint and curve
        eval        greedy-decode every context of a checkpoint
        bon         Best-of-N reward and wall time per N
        sweep       train over values of one key and several seeds

Without a command an interactive shell is started. Settings are taken from
the dataclass defaults, then the ``--config`` file, then the flags. Tables
are written as csv to stdout, diagnostics to stderr. The exit code is 0 on
success, 2 on usage errors and 1 on runtime failures.

Example:
::

    blade_rec --seed 1 --out runs/a train --mode static --steps 100
    blade_rec --out runs/a eval --reward ndcg@5 recall@5
"""
import argparse
import logging
import os
import shlex
import sys
from dataclasses import replace

from cmd2 import Cmd, Settable, with_argparser

from .config import MODES, ExperimentConfig, import_config, parse_value
from .envsim import save_dataset
from .experiments import (BLADE_EXCEPTIONS, DEFAULT_EVAL_SPECS, SWEEP_KEYS,
                          Experiment, best_of_n_table, evaluate_table,
                          format_table, load_checkpoint)
from .grpo import LR_SCHEDULES, TEACHERS


__author__ = "blade_rec developers"

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def add_seed_out_arguments(arg_parser):
    """Add seed and output directory arguments."""
    arg_parser.add_argument('--seed', '-s', type=int,
                            help="Seed of generation and sampling")
    arg_parser.add_argument('--out', '-o',
                            help="Output directory")


def add_common_arguments(arg_parser):
    """Add the arguments every experiment command accepts."""
    arg_parser.add_argument('--dataset', '-d',
                            help="Dataset file, generated when omitted")
    add_seed_out_arguments(arg_parser)


def add_train_arguments(arg_parser):
    """Add the training keys of :py:class:`ExperimentConfig`."""
    arg_parser.add_argument('--reward', help="Training reward spec")
    arg_parser.add_argument('--eval-reward', help="Greedy evaluation reward")
    arg_parser.add_argument('--steps', type=int, help="Training steps")
    arg_parser.add_argument('--mode', choices=MODES, help="Estimator")
    arg_parser.add_argument('--tau', type=float, help="Dynamic coefficient")
    arg_parser.add_argument('--group-size', type=int, help="Group size G")
    arg_parser.add_argument('--ref-size', type=int,
                            help="Reference rollouts per context M")
    arg_parser.add_argument('--bon-n', type=int,
                            help="N inside the proxy reward")
    arg_parser.add_argument('--cdf-floor', type=float, help="CDF floor")
    arg_parser.add_argument('--lr', type=float, help="Step size")
    arg_parser.add_argument('--lr-schedule', choices=LR_SCHEDULES,
                            help="Step size schedule")
    arg_parser.add_argument('--epsilon', type=float, help="Clip width")
    arg_parser.add_argument('--beta-kl', type=float, help="KL coefficient")
    arg_parser.add_argument('--temperature', type=float,
                            help="Training sampling temperature")
    arg_parser.add_argument('--ref-temperature', type=float,
                            help="Reference rollout temperature")
    arg_parser.add_argument('--teacher', choices=TEACHERS,
                            help="Warm-start teacher")
    arg_parser.add_argument('--sft-steps', type=int, help="Warm-start steps")
    arg_parser.add_argument('--eval-every', type=int,
                            help="Greedy evaluation period")
    arg_parser.add_argument('--list-len', type=int, help="List length K")


_TRAIN_KEYS = ('reward', 'eval_reward', 'steps', 'mode', 'tau', 'group_size',
               'ref_size', 'bon_n', 'cdf_floor', 'lr', 'lr_schedule',
               'epsilon', 'beta_kl', 'temperature', 'ref_temperature',
               'teacher', 'sft_steps', 'eval_every', 'list_len')


class BladeCmd(Cmd):
    """Command loop around :py:class:`~blade_rec.experiments.Experiment`.

    Attributes:
        cfg (ExperimentConfig): Settings before per-command flags.
        exit_code (int): Status of the last command.
    """

    prompt = "BLADE: "

    def __init__(self, cfg=None, **kwargs):
        """Instantiate the command loop.

        Args:
            cfg (ExperimentConfig): Base settings, defaults if ``None``.
            persistent_history_file (str): Path to history file, defaults to
                no history.
        """
        self.logger = logging.getLogger(self.__class__.__name__)
        self.cfg = cfg or ExperimentConfig()
        phf = 'persistent_history_file'
        kwargs[phf] = kwargs.pop(phf, '')
        super().__init__(allow_cli_args=False, **kwargs)
        self.loglevel = logging.getLevelName(logging.root.level)
        settable = Settable('loglevel', str, 'Logging Level', self,
                            choices=['NOTSET', 'DEBUG', 'INFO',
                                     'WARNING', 'ERROR', 'CRITICAL'],
                            onchange_cb=self._onchange_loglevel)
        self.add_settable(settable)
        self.logger.debug("__init__(cfg=%r)", self.cfg)

    def _config(self, opts, keys=()):
        values = {key: getattr(opts, key, None) for key in keys}
        values.update(dataset=getattr(opts, 'dataset', None), seed=opts.seed,
                      out=opts.out)
        return self.cfg.override(**values)

    def _run(self, func, opts):
        self.exit_code = EXIT_FAILURE
        try:
            func(opts)
        except BLADE_EXCEPTIONS as exc:
            self.logger.debug("%s failed", func.__name__, exc_info=True)
            self.perror(f"error: {exc}")
            return
        self.exit_code = EXIT_OK

    def _table(self, header, rows):
        self.poutput(format_table(header, rows), end='')

    gen_data_parser = argparse.ArgumentParser()
    add_seed_out_arguments(gen_data_parser)
    gen_data_parser.add_argument('--path', '-p',
                                 help="Dataset file, defaults to "
                                 "<out>/dataset.jsonl")
    gen_data_parser.add_argument('--n-items', type=int, help="Catalog size")
    gen_data_parser.add_argument('--n-genres', type=int, help="Genres")
    gen_data_parser.add_argument('--max-genres-per-item', type=int,
                                 help="Genres per item upper bound")
    gen_data_parser.add_argument('--n-contexts', type=int, help="Contexts")
    gen_data_parser.add_argument('--history-len', type=int,
                                 help="History length")
    gen_data_parser.add_argument('--target-len', type=int,
                                 help="Target set size")

    @with_argparser(gen_data_parser)
    def do_gen_data(self, opts):
        """Generate a synthetic dataset and print its size."""
        self._run(self._gen_data, opts)

    def _gen_data(self, opts):
        cfg = self._config(opts, ('n_items', 'n_genres',
                                  'max_genres_per_item', 'n_contexts',
                                  'history_len', 'target_len'))
        dataset = Experiment(replace(cfg, dataset=None)).dataset()
        path = opts.path or os.path.join(cfg.out, "dataset.jsonl")
        if os.path.dirname(path):
            os.makedirs(os.path.dirname(path), exist_ok=True)
        save_dataset(dataset, path)
        self.logger.info("wrote dataset to %s", path)
        self._table(['contexts', 'items', 'genres'],
                    [[len(dataset), dataset.catalog.n_items,
                      dataset.catalog.n_genres]])

    train_parser = argparse.ArgumentParser()
    add_common_arguments(train_parser)
    add_train_arguments(train_parser)

    @with_argparser(train_parser)
    def do_train(self, opts):
        """Warm start, train and write checkpoint.jsonl and curve.csv."""
        self._run(self._train, opts)

    def _train(self, opts):
        cfg = self._config(opts, _TRAIN_KEYS)
        state = Experiment(cfg).train()
        last = state.curve[-1]
        self._table(type(last).columns(), [last.as_row()])

    eval_parser = argparse.ArgumentParser()
    add_common_arguments(eval_parser)
    eval_parser.add_argument('--checkpoint', '-c',
                             help="Checkpoint, defaults to "
                             "<out>/checkpoint.jsonl")
    eval_parser.add_argument('--reward', nargs='+',
                             default=list(DEFAULT_EVAL_SPECS),
                             help="Reward specs, one column each")

    @with_argparser(eval_parser)
    def do_eval(self, opts):
        """Print mean greedy-decode rewards of a checkpoint."""
        self._run(self._eval, opts)

    def _eval(self, opts):
        cfg = self._config(opts)
        path = opts.checkpoint or os.path.join(cfg.out, "checkpoint.jsonl")
        state = load_checkpoint(path)
        header, row = evaluate_table(state, Experiment(cfg).dataset(),
                                     opts.reward)
        self._table(header, [row])

    bon_parser = argparse.ArgumentParser()
    add_common_arguments(bon_parser)
    bon_parser.add_argument('--checkpoint', '-c',
                            help="Checkpoint, defaults to "
                            "<out>/checkpoint.jsonl")
    bon_parser.add_argument('--n', '-n', type=int, nargs='+',
                            default=[1, 2, 4, 8], help="Values of N")
    bon_parser.add_argument('--reward', help="Selection reward spec")
    bon_parser.add_argument('--temperature', type=float,
                            help="Sampling temperature")
    bon_parser.add_argument('--repeats', type=int, default=1,
                            help="Draws per context and N")

    @with_argparser(bon_parser)
    def do_bon(self, opts):
        """Print Best-of-N mean reward and wall time for each N."""
        self._run(self._bon, opts)

    def _bon(self, opts):
        cfg = self._config(opts, ('reward', 'temperature'))
        path = opts.checkpoint or os.path.join(cfg.out, "checkpoint.jsonl")
        state = load_checkpoint(path)
        header, rows = best_of_n_table(state, Experiment(cfg).dataset(),
                                       opts.n, cfg.reward, seed=cfg.seed,
                                       temperature=cfg.temperature,
                                       repeats=opts.repeats)
        self._table(header, rows)

    sweep_parser = argparse.ArgumentParser()
    add_common_arguments(sweep_parser)
    add_train_arguments(sweep_parser)
    sweep_parser.add_argument('--key', '-k', required=True,
                              choices=SWEEP_KEYS, help="Key to sweep")
    sweep_parser.add_argument('--values', '-v', nargs='+', required=True,
                              help="Values of the key")
    sweep_parser.add_argument('--seeds', type=int, nargs='+', default=[0],
                              help="Seeds per value")

    @with_argparser(sweep_parser)
    def do_sweep(self, opts):
        """Train for every value and seed, print final metrics."""
        self._run(self._sweep, opts)

    def _sweep(self, opts):
        cfg = self._config(opts, _TRAIN_KEYS)
        values = [parse_value(value) for value in opts.values]
        header, rows = Experiment(cfg).sweep(opts.key, values, opts.seeds)
        self._table(header, rows)

    # pylint: disable=unused-argument
    def _onchange_loglevel(self, param_name, old, new):
        self.loglevel = logging.getLevelName(new)
        logging.getLogger().setLevel(self.loglevel)


def log_level_module_control(pargs):
    """Enable logs depending on modules.

    Args:
        pargs: arguments from argparse
    """
    if pargs.loglevel:
        loglevel = logging.getLevelName(pargs.loglevel.upper())
        if pargs.logmodules is not None:
            logging.basicConfig()
            for logname in pargs.logmodules:
                logger = logging.getLogger(logname)
                logger.setLevel(loglevel)
        else:
            logging.basicConfig(level=loglevel)


def main(argv=None):
    """Run one command, or the shell when no command is given.

    Returns:
        int: Exit code.
    """
    parser = argparse.ArgumentParser(prog="blade_rec")
    # pylint: disable=duplicate-code
    parser.add_argument('--loglevel', default='WARNING',
                        help='Python logger log level, defaults to WARNING.')
    parser.add_argument('--logmodules', nargs='+', default=None,
                        help='Modules to enable logging.')
    parser.add_argument('--config', default=None,
                        help='Config file of key = value lines.')
    parser.add_argument('--seed', type=int, default=None,
                        help='Seed, overrides the config file.')
    parser.add_argument('--out', default=None,
                        help='Output directory, overrides the config file.')
    parser.add_argument('command', nargs='?',
                        help='gen-data, train, eval, bon or sweep')
    parser.add_argument('args', nargs=argparse.REMAINDER,
                        help='Arguments of the command')
    pargs = parser.parse_args(argv)
    log_level_module_control(pargs)

    try:
        cfg = ExperimentConfig()
        if pargs.config:
            cfg = import_config(pargs.config, cfg)
        cfg = cfg.override(seed=pargs.seed, out=pargs.out)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE

    app = BladeCmd(cfg)
    if pargs.command is None:
        app.cmdloop()
        return app.exit_code
    command = pargs.command.replace('-', '_')
    app.exit_code = EXIT_USAGE
    if {'-h', '--help'} & set(pargs.args):
        app.exit_code = EXIT_OK
    app.onecmd_plus_hooks(shlex.join([command] + pargs.args))
    return app.exit_code


if __name__ == '__main__':
    sys.exit(main())
