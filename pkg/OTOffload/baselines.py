# -*- coding: utf-8 -*-
"""
Comparison algorithms: greedy delay minimization, uniform random
offloading and plain policy-gradient training
"""
from enum import Enum
import logging

from OTOffload.model import ACTIONS, decision_cost
from OTOffload.trainer import plain_rl_train

logger = logging.getLogger(__name__)

__all__ = ['BaselineKind', 'greedy_decide', 'random_decide',
           'plain_rl_train']


class BaselineKind(Enum):
    """
    Baseline algorithms, values are the CLI names
    """
    GREEDY = 'greedy'
    RANDOM = 'random'
    PLAIN_RL = 'plainrl'


def greedy_decide(task, params, r_u):
    """
    Decision with the smallest delay, ties broken Local < Edge < Cloud

    Parameters
    ----------
    task : Task
    params : SystemParams
    r_u : float
        Upload rate in bits/s

    Returns
    -------
    OffloadDecision
    """
    best = None
    best_delay = None
    for decision in ACTIONS:
        delay = decision_cost(task, decision, params, r_u).delay_s
        if best is None or delay < best_delay:
            best = decision
            best_delay = delay

    return best


def random_decide(task, rng):
    """
    Uniform draw over the three decisions, independent of the task

    Parameters
    ----------
    task : Task
        Unused
    rng : numpy.random.Generator

    Returns
    -------
    OffloadDecision
    """
    return ACTIONS[int(rng.integers(len(ACTIONS)))]
