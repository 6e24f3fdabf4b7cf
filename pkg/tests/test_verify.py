# -*- coding: utf-8 -*-
"""
Acceptance check tests, the slow ones train on the default scenario
"""
import numpy as np
import pandas as pd
import pytest

from OTOffload.experiment import convergence_trace
from OTOffload.scenario import ScenarioConfig
from OTOffload.trainer import TrainConfig
from OTOffload.verify import (CHECK_COLUMNS, convergence_checks,
                              cycles_checks, data_size_checks,
                              ed_count_checks, peak_to_trough,
                              stability_band, tail_variance, verify_tables)

SEEDS = range(10)


def sweep_table(curves, column='avg_cost'):
    """
    Sweep rows from {algorithm: [(axis_value, value), ...]}
    """
    rows = [{'algorithm': algorithm, 'axis_value': x, column: y, 'flag': ''}
            for algorithm, points in curves.items() for x, y in points]

    return pd.DataFrame(rows)


def trace_table(seed, otrl, plain):
    """
    Two-algorithm trace with avg_reward = -joint_loss
    """
    rows = []
    for algorithm, losses in (('otrl', otrl), ('plainrl', plain)):
        for it, loss in enumerate(losses, start=1):
            rows.append({'seed': seed, 'algorithm': algorithm,
                         'iteration': it, 'avg_reward': -loss,
                         'joint_loss': loss})

    return pd.DataFrame(rows)


def test_stability_band():
    """
    Deviation of iterations 40..50 from the final loss
    """
    losses = [-0.5] * 39 + [-0.97] + [-1.0] * 10
    check = stability_band(losses)
    assert check.value == pytest.approx(0.03)
    assert check.threshold == pytest.approx(0.05)
    assert check.passed

    losses[39] = -0.9
    assert not stability_band(losses).passed


def test_convergence_checks():
    """
    Flat OTRL tails beat ramping plain-RL tails
    """
    flat = [-1.0] * 30
    ramp = list(np.linspace(-0.2, -0.8, 30))
    traces = pd.concat([trace_table(0, flat, ramp),
                        trace_table(1, ramp, flat)], ignore_index=True)
    assert tail_variance(flat) == 0
    variance, reward = convergence_checks(traces)
    assert variance.value == pytest.approx(0.5)
    assert not variance.passed
    assert reward.passed

    traces = trace_table(0, flat, ramp)
    assert all(c.passed for c in convergence_checks(traces))


def test_data_size_checks():
    """
    Rank correlation, Greedy ceiling and slope against Random
    """
    x = [100, 200, 300, 400]
    sweep = sweep_table({'greedy': [(v, 0.1 + v / 1e4) for v in x],
                         'random': [(v, 0.3 + v / 1e3) for v in x],
                         'otrl': [(v, 0.1 + v / 2e4) for v in x]})
    checks = {c.criterion + '/' + c.subject: c for c in
              data_size_checks(sweep)}
    assert checks['cost_rises_with_data/greedy'].value == pytest.approx(1)
    assert checks['cost_at_most_greedy/otrl'].passed
    assert checks['cost_at_most_random/greedy'].passed
    assert checks['cost_slope_below_random/otrl'].passed
    assert all(c.passed for c in checks.values())

    flat = sweep_table({'random': [(v, 0.3) for v in x]})
    assert not data_size_checks(flat)[0].passed


def test_cycles_checks():
    """
    Peak-to-trough of OTRL against Random
    """
    assert peak_to_trough([2.0, 1.0, 1.5]) == pytest.approx(0.5)
    sweep = sweep_table({'otrl': [(10, 0.10), (20, 0.095)],
                         'random': [(10, 0.4), (20, 0.3)]})
    flat, more = cycles_checks(sweep)
    assert flat.passed and more.passed

    sweep = sweep_table({'otrl': [(10, 0.02), (20, 0.01)],
                         'random': [(10, 0.34), (20, 0.33)]})
    flat, more = cycles_checks(sweep)
    assert not flat.passed and not more.passed


def test_ed_count_checks():
    """
    Non-increasing ratios with one rise allowed
    """
    x = [20, 40, 60, 80]
    sweep = sweep_table({'otrl': [(v, r) for v, r in
                                  zip(x, [1.0, 0.9, 0.92, 0.8])],
                         'greedy': [(v, 0.8) for v in x],
                         'random': [(v, r) for v, r in
                                    zip(x, [0.5, 0.6, 0.7, 0.9])]},
                        column='offload_ratio')
    checks = {c.criterion + '/' + c.subject: c
              for c in ed_count_checks(sweep)}
    assert checks['ratio_non_increasing/otrl'].passed
    assert checks['ratio_non_increasing/greedy'].passed
    assert not checks['ratio_non_increasing/random'].passed
    assert checks['ratio_at_least/greedy'].passed
    assert not checks['ratio_at_least/random'].passed


def test_verify_tables():
    """
    Failed cells are dropped and every check becomes a row
    """
    x = [10, 20]
    sweep = sweep_table({'otrl': [(v, 0.1) for v in x],
                         'random': [(v, 0.3 + v / 100) for v in x]})
    sweep.loc[len(sweep)] = {'algorithm': 'otrl', 'axis_value': 20,
                             'avg_cost': np.nan, 'flag': 'error: boom'}
    traces = trace_table(3, [-1.0] * 25, list(np.linspace(0, -1, 25)))
    table = verify_tables(traces, {'cpu_gcycles': sweep})
    assert list(table.columns) == list(CHECK_COLUMNS)
    assert table['criterion'].tolist() == ['stability_band', 'tail_variance',
                                           'final_reward',
                                           'cost_flat_in_cycles',
                                           'varies_more_than_otrl']
    assert table['passed'].all()


@pytest.fixture(scope='module')
def default_traces():
    """
    OTRL and plain-RL traces on the default scenario for ten seeds
    """
    tables = []
    for seed in SEEDS:
        table = convergence_trace(ScenarioConfig(seed=seed),
                                  TrainConfig(seed=seed))
        table.insert(0, 'seed', seed)
        tables.append(table)

    return pd.concat(tables, ignore_index=True)


@pytest.mark.slow
def test_default_trace_length(default_traces):
    """
    50 OTRL and 50 plain-RL rows per seed
    """
    for _, trace in default_traces.groupby('seed'):
        assert len(trace) == 100
        assert trace['iteration'].tolist() == list(range(1, 51)) * 2


@pytest.mark.slow
def test_default_stability_band(default_traces):
    """
    OTRL loss settles within 5% of its final value from iteration 40
    """
    trace = default_traces.loc[(default_traces['seed'] == 0)
                               & (default_traces['algorithm'] == 'otrl')]
    check = stability_band(trace['joint_loss'].values)
    assert check.passed, check


@pytest.mark.slow
def test_default_otrl_vs_plain(default_traces):
    """
    OTRL tails are no noisier on 7 of 10 seeds and end with a higher
    average reward
    """
    variance, reward = convergence_checks(default_traces)
    assert variance.passed, variance
    assert reward.passed, reward


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
