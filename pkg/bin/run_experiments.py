"""
Script to run the convergence traces and the three parameter sweeps, then
check the results against the acceptance criteria
"""
from dataclasses import replace
import os
import pandas as pd
import sys
PKG_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
sys.path.append(PKG_DIR)
from OTOffload.cli import setup_logger
from OTOffload.config import load_config
from OTOffload.experiment import convergence_trace, rows_to_frame, run_sweep
from OTOffload.handler import write_table
from OTOffload.verify import verify_tables

SWEEPS = {'data_size_kb': list(range(100, 1001, 100)),
          'cpu_gcycles': list(range(10, 21, 2)),
          'num_eds': list(range(20, 201, 20))}
CONVERGE_SEEDS = 10


def converge(config, n_seeds=CONVERGE_SEEDS):
    """
    Convergence traces for n_seeds consecutive seeds

    Parameters
    ----------
    config : RunConfig
    n_seeds : int

    Returns
    -------
    pandas.DataFrame
        Trace rows with a leading seed column
    """
    tables = []
    for seed in range(config.seed, config.seed + n_seeds):
        run_config = config.with_seed(seed)
        table = convergence_trace(run_config.scenario, run_config.train,
                                  run_config.schedule)
        table.insert(0, 'seed', seed)
        tables.append(table)

    return pd.concat(tables, ignore_index=True)


def run(out_dir, config_file=None, max_workers=1):
    """
    Run every experiment and save one csv per experiment

    Parameters
    ----------
    out_dir : str
        Directory to save results to
    config_file : str, optional
        Path to .json run configuration
    max_workers : int
        Parallel sweep cells
    """
    if not os.path.exists(out_dir):
        os.makedirs(out_dir)

    log_file = os.path.join(out_dir, 'OTOffload.log')
    logger = setup_logger('OTOffload', log_level='INFO', log_file=log_file)
    config = load_config(config_file)

    logger.info('Convergence traces')
    traces = converge(config)
    write_table(traces, os.path.join(out_dir, 'converge_seeds.csv'))
    first = traces.loc[traces['seed'] == config.seed].drop(columns='seed')
    write_table(first, os.path.join(out_dir, 'converge.csv'))

    for axis, points in SWEEPS.items():
        logger.info('Sweeping {}'.format(axis))
        spec = replace(config.sweep, axis=axis, points=points,
                       max_workers=max_workers)
        rows = run_sweep(spec, config.scenario, config.train,
                         config.schedule)
        write_table(rows_to_frame(rows),
                    os.path.join(out_dir, 'sweep_{}.csv'.format(axis)))


def verify(out_dir):
    """
    Check saved results against the acceptance criteria

    Parameters
    ----------
    out_dir : str
        Directory holding the run outputs

    Returns
    -------
    pandas.DataFrame
        One row per check, also saved as acceptance.csv
    """
    traces = pd.read_csv(os.path.join(out_dir, 'converge_seeds.csv'))
    sweeps = {axis: pd.read_csv(os.path.join(out_dir,
                                             'sweep_{}.csv'.format(axis)))
              for axis in SWEEPS}
    checks = verify_tables(traces, sweeps)
    write_table(checks, os.path.join(out_dir, 'acceptance.csv'))

    return checks


if __name__ == '__main__':
    out_dir = os.path.join(PKG_DIR, 'results')
    config_file = os.path.join(PKG_DIR, 'bin', 'default_config.json')
    run(out_dir, config_file=config_file, max_workers=os.cpu_count() or 1)
    verify(out_dir)
