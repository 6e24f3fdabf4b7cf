# -*- coding: utf-8 -*-
"""
Command line interface tests
"""
from click.testing import CliRunner
import json
import logging
import pandas as pd
import pytest

from OTOffload.cli import main, setup_logger
from OTOffload.exceptions import ConfigSchemaError

SWEEP_HEADER = ('algorithm,axis,axis_value,seed,avg_cost,avg_delay_s,'
                'avg_energy_j,offload_ratio,flag')
CONVERGE_HEADER = ('algorithm,iteration,lambda1,lambda2,ot_cost,avg_reward,'
                   'joint_loss')
SMALL_CONFIG = {'seed': 1,
                'scenario': {'num_eds': 4},
                'train': {'max_iter': 2, 'batch_episodes': 1},
                'sweep': {'axis': 'num_eds', 'points': [2, 3],
                          'repetitions': 1,
                          'algorithms': ['greedy', 'random']}}


@pytest.fixture
def run(tmp_path):
    """
    Invoke the CLI with a small config and a log file under tmp_path
    """
    config = tmp_path / 'config.json'
    config.write_text(json.dumps(SMALL_CONFIG))
    log_file = str(tmp_path / 'logs' / 'cli.log')

    def _run(*args):
        runner = CliRunner()
        result = runner.invoke(main, ['--log_file', log_file, '-c',
                                      str(config)] + list(args))
        assert result.exit_code == 0, result.output
        return result

    return _run


def test_sweep(run, tmp_path):
    """
    One row per cell, exact header, byte-identical reruns
    """
    out_a = tmp_path / 'sweep_a.csv'
    out_b = tmp_path / 'sweep_b.csv'
    run('sweep', '-o', str(out_a))
    run('sweep', '-o', str(out_b))
    lines = out_a.read_text().splitlines()
    assert lines[0] == SWEEP_HEADER
    assert len(lines) == 1 + 4
    assert out_a.read_bytes() == out_b.read_bytes()
    assert (tmp_path / 'logs' / 'cli.log').exists()


def test_sweep_algo_filter(run, tmp_path):
    """
    --algo narrows the configured algorithms
    """
    out = tmp_path / 'greedy.csv'
    run('sweep', '--algo', 'greedy', '-o', str(out))
    table = pd.read_csv(out)
    assert table['algorithm'].tolist() == ['greedy', 'greedy']
    assert table['axis_value'].tolist() == [2.0, 3.0]


def test_converge(run, tmp_path):
    """
    OTRL then plain-RL trace rows
    """
    out = tmp_path / 'trace.csv'
    run('converge', '-o', str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == CONVERGE_HEADER
    table = pd.read_csv(out)
    assert table['algorithm'].tolist() == ['otrl', 'otrl', 'plainrl',
                                           'plainrl']


def test_train_then_eval(run, tmp_path):
    """
    A saved checkpoint is evaluated without retraining
    """
    checkpoint = tmp_path / 'policy.json'
    trace = tmp_path / 'train.json'
    run('train', '-o', str(checkpoint), '-t', str(trace), '-f', 'json')
    data = json.loads(checkpoint.read_text())
    assert data['feature_dim'] == 15
    assert len(data['theta']) == 15

    records = json.loads(trace.read_text())
    assert [r['iteration'] for r in records] == [1, 2]
    assert all(r['algorithm'] == 'otrl' for r in records)

    out = tmp_path / 'eval.csv'
    run('eval', '--checkpoint', str(checkpoint), '-o', str(out))
    lines = out.read_text().splitlines()
    assert lines[0] == SWEEP_HEADER
    table = pd.read_csv(out)
    assert len(table) == 1
    assert table.loc[0, 'algorithm'] == 'otrl'
    assert table.loc[0, 'axis'] == 'num_eds'
    assert table.loc[0, 'axis_value'] == 4


def test_eval_seed_override(run, tmp_path):
    """
    --seed replaces the config seed
    """
    out = tmp_path / 'random.json'
    result = run('--seed', '3', 'eval', '-a', 'random', '-o', str(out),
                 '-f', 'json')
    records = json.loads(out.read_text())
    assert result.exit_code == 0
    assert len(records) == 1
    assert records[0]['seed'] == 3
    assert 0 <= records[0]['offload_ratio'] <= 1


def test_command_level_options(tmp_path):
    """
    --config and --seed also work after the command name
    """
    config = tmp_path / 'config.json'
    config.write_text(json.dumps(SMALL_CONFIG))
    log_file = str(tmp_path / 'cli.log')
    runner = CliRunner()

    checkpoint = tmp_path / 'policy.json'
    result = runner.invoke(main, ['--log_file', log_file, 'train', '--config',
                                  str(config), '-o', str(checkpoint)])
    assert result.exit_code == 0, result.output
    assert len(json.loads(checkpoint.read_text())['theta']) == 15

    out = tmp_path / 'random.json'
    result = runner.invoke(main, ['--log_file', log_file, '--seed', '2',
                                  'eval', '-c', str(config), '-a', 'random',
                                  '-o', str(out), '-f', 'json'])
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())[0]['seed'] == 2

    result = runner.invoke(main, ['--log_file', log_file, '-c', str(config),
                                  'eval', '-a', 'random', '--seed', '7',
                                  '-o', str(out), '-f', 'json'])
    assert result.exit_code == 0, result.output
    assert json.loads(out.read_text())[0]['seed'] == 7


def test_setup_logger_reuses_handlers(tmp_path):
    """
    One handler per log file, re-leveled on repeated setup
    """
    log_file = str(tmp_path / 'setup.log')
    logger = setup_logger('OTOffload.cli_test', log_file=log_file)
    setup_logger('OTOffload.cli_test', log_level='DEBUG', log_file=log_file)
    try:
        assert len(logger.handlers) == 1
        assert logger.handlers[0].level == logging.DEBUG
        with pytest.raises(ValueError):
            setup_logger('OTOffload.cli_test', log_level='LOUD',
                         log_file=str(tmp_path / 'other.log'))
    finally:
        for handler in list(logger.handlers):
            handler.close()
            logger.removeHandler(handler)


def test_bad_config(tmp_path):
    """
    Schema errors abort the command
    """
    config = tmp_path / 'bad.json'
    config.write_text(json.dumps({'train': {'lr': 0.1}}))
    result = CliRunner().invoke(main, ['--log_file',
                                       str(tmp_path / 'cli.log'), '-c',
                                       str(config), 'converge', '-o',
                                       str(tmp_path / 'out.csv')])
    assert result.exit_code != 0
    assert isinstance(result.exception, ConfigSchemaError)


def execute_pytest(capture='all', flags='-rapP'):
    """Execute module as pytest with detailed summary report.

    Parameters
    ----------
    capture : str
        Log or stdout/stderr capture option. ex: log (only logger),
        all (includes stdout/stderr)
    flags : str
        Which tests to show logs and results for.
    """

    fname = __file__
    pytest.main(['-q', '--show-capture={}'.format(capture), fname, flags])


if __name__ == '__main__':
    execute_pytest()
