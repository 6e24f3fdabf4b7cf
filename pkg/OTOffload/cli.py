# -*- coding: utf-8 -*-
"""
Command Line Interface and Entry point
"""
from dataclasses import replace
import click
import logging
import os
import sys

from OTOffload.config import load_config
from OTOffload.experiment import (ALGORITHMS, LEARNED, ResultRow,
                                  convergence_trace, evaluate, fit_policy,
                                  rows_to_frame, run_sweep)
from OTOffload.handler import FORMATS, Checkpoint, write_table
from OTOffload.scenario import generate_scenario, scenario_hash

FORMAT = '%(levelname)s - %(asctime)s [%(filename)s:%(lineno)d] : %(message)s'
LOG_LEVEL = {'INFO': logging.INFO,
             'DEBUG': logging.DEBUG,
             'WARNING': logging.WARNING,
             'ERROR': logging.ERROR,
             'CRITICAL': logging.CRITICAL}


def get_handler(log_level="INFO", log_file=None, log_format=FORMAT):
    """
    Handler writing to log_file, or to stderr when no file is given

    Parameters
    ----------
    log_level : str
        Handler level, key of LOG_LEVEL
    log_file : str, optional
        Path to the log file, appended to
    log_format : str
        logging format string

    Returns
    -------
    handler : logging.FileHandler | logging.StreamHandler
    """
    if log_level not in LOG_LEVEL:
        raise ValueError('log_level must be one of {}, got {}'
                         .format(sorted(LOG_LEVEL), log_level))

    if log_file:
        handler = logging.FileHandler(log_file, mode='a')
    else:
        handler = logging.StreamHandler()

    if log_format:
        handler.setFormatter(logging.Formatter(log_format))

    handler.setLevel(LOG_LEVEL[log_level])

    return handler


def _handler_target(handler):
    """
    Absolute log file path or stream a handler writes to
    """
    if isinstance(handler, logging.FileHandler):
        return handler.baseFilename

    return getattr(handler, 'stream', None)


def setup_logger(logger_name, log_level="INFO", log_file=None,
                 log_format=FORMAT):
    """
    Attach one handler per log target to the named logger

    A target that already has a handler keeps it and only takes the new
    level, so repeated CLI invocations in one process do not duplicate
    log lines.

    Parameters
    ----------
    logger_name : str
    log_level : str
        Key of LOG_LEVEL
    log_file : str | list, optional
        Log file or files, stderr when None
    log_format : str

    Returns
    -------
    logging.Logger
    """
    logger = logging.getLogger(logger_name)
    # the logger passes everything, handlers filter
    logger.setLevel(logging.DEBUG)

    handlers = {_handler_target(h): h for h in logger.handlers}
    files = log_file if isinstance(log_file, (list, tuple)) else [log_file]
    for f in files:
        target = os.path.abspath(f) if f else sys.stderr
        if target in handlers:
            handlers[target].setLevel(LOG_LEVEL[log_level])
        else:
            handler = get_handler(log_level=log_level, log_file=f,
                                  log_format=log_format)
            logger.addHandler(handler)
            handlers[target] = handler

    return logger


def run_options(func):
    """
    --config and --seed, accepted before or after the command name
    """
    func = click.option('--seed', type=click.IntRange(min=0), default=None,
                        help='Overrides the config seed')(func)
    func = click.option('--config', '-c', 'config_file', default=None,
                        type=click.Path(exists=True),
                        help='Path to .json run configuration')(func)

    return func


def run_config(ctx, config_file=None, seed=None):
    """
    Run configuration of a command: the group config unless the command
    names its own file, then the command seed over the group seed
    """
    config = ctx.obj['CONFIG']
    if config_file is not None:
        config = load_config(config_file)
        if ctx.obj.get('SEED') is not None:
            config = config.with_seed(ctx.obj['SEED'])

    if seed is not None:
        config = config.with_seed(seed)

    return config


@click.group()
@click.option('--log_file', default=None, type=click.Path(),
              help='Path to .log file')
@click.option('--verbose', '-v', is_flag=True,
              help='If used upgrade logging to DEBUG')
@run_options
@click.pass_context
def main(ctx, log_file, verbose, config_file, seed):
    """
    OTOffload command line interface
    """
    ctx.ensure_object(dict)

    if verbose:
        log_level = 'DEBUG'
    else:
        log_level = 'INFO'

    if log_file is not None:
        log_dir = os.path.dirname(log_file)
        if log_dir and not os.path.exists(log_dir):
            os.makedirs(log_dir)

    setup_logger('OTOffload', log_file=log_file, log_level=log_level)

    config = load_config(config_file)
    if seed is not None:
        config = config.with_seed(seed)

    ctx.obj['CONFIG'] = config
    ctx.obj['SEED'] = seed


@main.command()
@click.option('--algo', '-a', type=click.Choice(LEARNED), default='otrl',
              help='Learned algorithm to train')
@click.option('--out', '-o', type=click.Path(), required=True,
              help='Path to .json policy checkpoint')
@click.option('--trace', '-t', type=click.Path(), default=None,
              help='Optional path to save the training trace')
@click.option('--format', '-f', 'fmt', type=click.Choice(FORMATS),
              default='csv', help='Training trace format')
@run_options
@click.pass_context
def train(ctx, algo, out, trace, fmt, config_file, seed):
    """
    Train a policy on the configured scenario and save a checkpoint
    """
    config = run_config(ctx, config_file, seed)
    scenario = generate_scenario(config.scenario)
    theta, train_trace = fit_policy(algo, scenario, config.train,
                                    config.schedule)
    Checkpoint.save(theta, out)
    if trace is not None:
        table = train_trace.table
        table.insert(0, 'algorithm', algo)
        write_table(table, trace, fmt=fmt)


@main.command()
@click.option('--algo', '-a', type=click.Choice(ALGORITHMS), multiple=True,
              help='Algorithms to compare, defaults to the config sweep')
@click.option('--out', '-o', type=click.Path(), required=True,
              help='Path to save the sweep results')
@click.option('--format', '-f', 'fmt', type=click.Choice(FORMATS),
              default='csv', help='Output format')
@run_options
@click.pass_context
def sweep(ctx, algo, out, fmt, config_file, seed):
    """
    Evaluate algorithms along the configured sweep axis
    """
    config = run_config(ctx, config_file, seed)
    spec = config.sweep
    if algo:
        spec = replace(spec, algorithms=algo)

    rows = run_sweep(spec, config.scenario, config.train, config.schedule)
    write_table(rows_to_frame(rows), out, fmt=fmt)


@main.command()
@click.option('--out', '-o', type=click.Path(), required=True,
              help='Path to save both training traces')
@click.option('--format', '-f', 'fmt', type=click.Choice(FORMATS),
              default='csv', help='Output format')
@run_options
@click.pass_context
def converge(ctx, out, fmt, config_file, seed):
    """
    Record OTRL and plain-RL training traces on the same scenario
    """
    config = run_config(ctx, config_file, seed)
    table = convergence_trace(config.scenario, config.train, config.schedule)
    write_table(table, out, fmt=fmt)


@main.command(name='eval')
@click.option('--algo', '-a', type=click.Choice(ALGORITHMS), default='otrl',
              help='Algorithm to evaluate')
@click.option('--checkpoint', type=click.Path(exists=True), default=None,
              help='Policy checkpoint for learned algorithms, trained '
              'fresh when omitted')
@click.option('--out', '-o', type=click.Path(), required=True,
              help='Path to save the evaluation row')
@click.option('--format', '-f', 'fmt', type=click.Choice(FORMATS),
              default='csv', help='Output format')
@run_options
@click.pass_context
def evaluate_cmd(ctx, algo, checkpoint, out, fmt, config_file, seed):
    """
    Evaluate one algorithm on the configured scenario
    """
    logger = logging.getLogger('OTOffload')
    config = run_config(ctx, config_file, seed)
    scenario = generate_scenario(config.scenario)
    logger.debug('Scenario hash {}'.format(scenario_hash(scenario)))

    policy = None
    if algo in LEARNED:
        if checkpoint is not None:
            policy = Checkpoint.load(checkpoint)
        else:
            policy, _ = fit_policy(algo, scenario, config.train,
                                   config.schedule)

    result = evaluate(algo, scenario, policy=policy, seed=config.seed)
    row = ResultRow(algo, 'num_eds', float(scenario.num_eds), config.seed,
                    result.avg_cost, result.avg_delay_s, result.avg_energy_j,
                    result.offload_ratio, result.flag)
    write_table(rows_to_frame([row]), out, fmt=fmt)


if __name__ == '__main__':
    try:
        main(obj={})
    except Exception:
        logging.getLogger('OTOffload').exception('Error running OTOffload '
                                                 'CLI')
        raise
