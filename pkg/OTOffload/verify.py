# -*- coding: utf-8 -*-
"""
Acceptance checks over convergence traces and sweep tables
"""
from dataclasses import astuple, dataclass
import logging
import numpy as np
import pandas as pd
from scipy.stats import kendalltau, spearmanr

from OTOffload.exceptions import InvalidParametersError

logger = logging.getLogger(__name__)

CHECK_COLUMNS = ('criterion', 'subject', 'value', 'threshold', 'passed')


@dataclass(frozen=True)
class Check:
    """
    Outcome of one acceptance criterion
    """
    criterion: str
    subject: str
    value: float
    threshold: float
    passed: bool


def checks_to_frame(checks):
    """
    Checks as a DataFrame with CHECK_COLUMNS

    Parameters
    ----------
    checks : list

    Returns
    -------
    pandas.DataFrame
    """
    return pd.DataFrame([astuple(c) for c in checks],
                        columns=list(CHECK_COLUMNS))


def _algorithm_trace(trace, algorithm, column='joint_loss'):
    values = (trace.loc[trace['algorithm'] == algorithm]
              .sort_values('iteration')[column].values)
    if not len(values):
        raise InvalidParametersError('No {} rows in trace'.format(algorithm))

    return values.astype(float)


def stability_band(losses, span=10, tolerance=0.05):
    """
    Largest deviation of the last span + 1 losses from the final loss

    Parameters
    ----------
    losses : array-like
        Joint loss per iteration
    span : int
    tolerance : float
        Allowed deviation as a share of |final loss|

    Returns
    -------
    Check
    """
    losses = np.asarray(losses, dtype=float)
    final = losses[-1]
    band = float(np.max(np.abs(losses[-(span + 1):] - final)))
    allowance = tolerance * abs(final)

    return Check('stability_band', 'otrl', band, allowance,
                 bool(band <= allowance))


def tail_variance(losses, n=20):
    """
    Variance of the last n losses
    """
    return float(np.var(np.asarray(losses, dtype=float)[-n:]))


def convergence_checks(traces, n=20, min_share=0.7):
    """
    Stability and final reward of OTRL against plain RL over seeds

    Parameters
    ----------
    traces : pandas.DataFrame
        Convergence traces with an extra 'seed' column
    n : int
        Tail length for the variance comparison
    min_share : float
        Share of seeds on which the OTRL tail variance must not exceed
        the plain-RL one

    Returns
    -------
    list
        Check
    """
    wins = []
    final = {'otrl': [], 'plainrl': []}
    for _, trace in traces.groupby('seed'):
        otrl = _algorithm_trace(trace, 'otrl')
        plain = _algorithm_trace(trace, 'plainrl')
        wins.append(tail_variance(otrl, n) <= tail_variance(plain, n))
        for algorithm, values in final.items():
            values.append(_algorithm_trace(trace, algorithm,
                                           'avg_reward')[-1])

    share = float(np.mean(wins))
    otrl, plain = np.mean(final['otrl']), np.mean(final['plainrl'])

    return [Check('tail_variance', 'otrl<=plainrl', share, min_share,
                  bool(share >= min_share)),
            Check('final_reward', 'otrl>=plainrl', float(otrl), float(plain),
                  bool(otrl >= plain))]


def mean_curve(sweep, column):
    """
    Mean of a metric per sweep point and algorithm, failed cells dropped

    Parameters
    ----------
    sweep : pandas.DataFrame
        Sweep table
    column : str

    Returns
    -------
    pandas.DataFrame
        Index axis_value, one column per algorithm
    """
    flags = sweep['flag'].fillna('').astype(str)
    ok = sweep.loc[~flags.str.startswith('error')]

    return ok.groupby(['axis_value', 'algorithm'])[column].mean().unstack()


def _slope(curve, algorithm):
    return float(np.polyfit(curve.index.values.astype(float),
                            curve[algorithm].values, 1)[0])


def data_size_checks(sweep, min_rho=0.9, slack=0.02):
    """
    Cost grows with data size, OTRL stays below Greedy and grows slower
    than Random

    Returns
    -------
    list
        Check
    """
    curve = mean_curve(sweep, 'avg_cost')
    checks = []
    for algorithm in ('greedy', 'random'):
        if algorithm in curve:
            rho = spearmanr(curve.index.values, curve[algorithm].values)[0]
            rho = float(np.nan_to_num(rho))
            checks.append(Check('cost_rises_with_data', algorithm, rho,
                                min_rho, rho >= min_rho))

    if {'otrl', 'greedy'} <= set(curve):
        excess = float(np.max(curve['otrl'] / curve['greedy'] - 1))
        checks.append(Check('cost_at_most_greedy', 'otrl', excess, slack,
                            excess <= slack))

    if {'greedy', 'random'} <= set(curve):
        excess = float(np.max(curve['greedy'] / curve['random'] - 1))
        checks.append(Check('cost_at_most_random', 'greedy', excess, slack,
                            excess <= slack))

    if {'otrl', 'random'} <= set(curve):
        otrl, rand = _slope(curve, 'otrl'), _slope(curve, 'random')
        checks.append(Check('cost_slope_below_random', 'otrl', otrl, rand,
                            otrl < rand))

    return checks


def peak_to_trough(values):
    """
    (max - min) / max of a curve
    """
    values = np.asarray(values, dtype=float)
    top = np.max(values)
    if top <= 0:
        return 0.0

    return float((top - np.min(values)) / top)


def cycles_checks(sweep, limit=0.15):
    """
    OTRL cost is flat across task sizes while Random varies more

    Returns
    -------
    list
        Check
    """
    curve = mean_curve(sweep, 'avg_cost')
    checks = []
    if 'otrl' in curve:
        otrl = peak_to_trough(curve['otrl'])
        checks.append(Check('cost_flat_in_cycles', 'otrl', otrl, limit,
                            otrl <= limit))
        if 'random' in curve:
            rand = peak_to_trough(curve['random'])
            checks.append(Check('varies_more_than_otrl', 'random', rand,
                                otrl, rand > otrl))

    return checks


def ed_count_checks(sweep, slack=0.02):
    """
    Offload ratio does not grow with the ED count, and OTRL offloads at
    least as much as each baseline

    Returns
    -------
    list
        Check
    """
    curve = mean_curve(sweep, 'offload_ratio')
    checks = []
    for algorithm in curve:
        ratios = curve[algorithm].values
        tau = float(np.nan_to_num(kendalltau(curve.index.values, ratios)[0]))
        rises = int(np.sum(np.diff(ratios) > 0))
        checks.append(Check('ratio_non_increasing', algorithm, tau, 0.0,
                            tau <= 0 and rises <= 1))

    if 'otrl' in curve:
        for algorithm in ('greedy', 'random'):
            if algorithm in curve:
                margin = float(np.min(curve['otrl']
                                      - (1 - slack) * curve[algorithm]))
                checks.append(Check('ratio_at_least', algorithm, margin,
                                    0.0, margin >= 0))

    return checks


def verify_tables(traces=None, sweeps=None):
    """
    Run every check the given tables support

    Parameters
    ----------
    traces : pandas.DataFrame, optional
        Multi-seed convergence traces
    sweeps : dict, optional
        Sweep table per axis name

    Returns
    -------
    pandas.DataFrame
        One row per check, CHECK_COLUMNS
    """
    checks = []
    if traces is not None:
        first = traces.loc[traces['seed'] == traces['seed'].min()]
        checks.append(stability_band(_algorithm_trace(first, 'otrl')))
        checks.extend(convergence_checks(traces))

    axis_checks = {'data_size_kb': data_size_checks,
                   'cpu_gcycles': cycles_checks,
                   'num_eds': ed_count_checks}
    for axis, sweep in (sweeps or {}).items():
        if axis in axis_checks:
            checks.extend(axis_checks[axis](sweep))

    for check in checks:
        if not check.passed:
            logger.warning('Check {} failed for {}: {:.4g} vs {:.4g}'
                           .format(check.criterion, check.subject,
                                   check.value, check.threshold))

    return checks_to_frame(checks)
