# -*- coding: utf-8 -*-
"""
Greedy, random and plain-RL baseline tests
"""
from dataclasses import replace
import numpy as np
import pytest

from OTOffload import trainer
from OTOffload.baselines import (BaselineKind, greedy_decide, plain_rl_train,
                                 random_decide)
from OTOffload.model import ACTIONS, SystemParams, Task

LOCAL, EDGE, CLOUD = ACTIONS
PARAMS = SystemParams(backhaul_rate_bps=8e7)
TASK = Task('worked', cycles_required=1e10, data_size_bits=8e6)


def test_kind_names():
    """
    Baseline values are the CLI names
    """
    assert [k.value for k in BaselineKind] == ['greedy', 'random', 'plainrl']
    assert BaselineKind('plainrl') is BaselineKind.PLAIN_RL


def test_greedy_worked_example():
    """
    10 s local, 2 s edge, 1.2 s cloud
    """
    assert greedy_decide(TASK, PARAMS, 8e6) == CLOUD


def test_greedy_equal_speeds():
    """
    Without faster servers the upload only adds delay
    """
    params = SystemParams(f_edge_hz=1e9, f_cloud_hz=1e9)
    rng = np.random.default_rng(0)
    for _ in range(20):
        task = Task(0, rng.uniform(1e9, 2e10), rng.uniform(1e5, 1e7))
        assert greedy_decide(task, params, rng.uniform(1e6, 1e8)) == LOCAL


def test_greedy_tie():
    """
    Local and Edge both take exactly 1 s, Local wins the tie
    """
    params = SystemParams(f_edge_hz=2e9, f_cloud_hz=1e9,
                          backhaul_rate_bps=1e6)
    task = Task(0, cycles_required=1e9, data_size_bits=4e6)
    assert greedy_decide(task, params, 8e6) == LOCAL


def test_greedy_scale_invariance():
    """
    Scaling cycles and data together keeps the decision
    """
    rng = np.random.default_rng(4)
    for _ in range(50):
        task = Task(0, rng.uniform(1e9, 2e10), rng.uniform(8e5, 4e6))
        r_u = rng.uniform(1e6, 1e8)
        k = rng.uniform(0.1, 10)
        scaled = replace(task, cycles_required=task.cycles_required * k,
                         data_size_bits=task.data_size_bits * k)
        assert greedy_decide(scaled, PARAMS, r_u) \
            == greedy_decide(task, PARAMS, r_u)


def test_random_determinism():
    """
    Same seed, same decision sequence
    """
    tasks = [Task(i, 1e9 * (i + 1), 1e6) for i in range(30)]
    rng_a = np.random.default_rng(9)
    rng_b = np.random.default_rng(9)
    assert [random_decide(t, rng_a) for t in tasks] \
        == [random_decide(t, rng_b) for t in tasks]


def test_random_ignores_task():
    """
    Decisions depend on the generator only
    """
    small = [Task(i, 1e9, 1e5) for i in range(30)]
    big = [Task(i, 2e10, 5e6) for i in range(30)]
    rng_a = np.random.default_rng(3)
    rng_b = np.random.default_rng(3)
    assert [random_decide(t, rng_a) for t in small] \
        == [random_decide(t, rng_b) for t in big]


def test_random_frequencies():
    """
    Each decision is drawn about a third of the time
    """
    rng = np.random.default_rng(0)
    draws = [random_decide(TASK, rng).index for _ in range(30000)]
    freq = np.bincount(draws, minlength=3) / len(draws)
    assert np.allclose(freq, 1 / 3, atol=0.02)


def test_plain_rl_export():
    """
    The plain-RL baseline is the trainer with the OT term switched off
    """
    assert plain_rl_train is trainer.plain_rl_train


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
