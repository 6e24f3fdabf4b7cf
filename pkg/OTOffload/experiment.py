# -*- coding: utf-8 -*-
"""
Evaluation of offloading algorithms, parameter sweeps and convergence
traces
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, replace
import logging
import numpy as np
import pandas as pd

from OTOffload.baselines import (BaselineKind, greedy_decide, plain_rl_train,
                                 random_decide)
from OTOffload.exceptions import InvalidParametersError
from OTOffload.model import OffloadDecision, decision_costs, upload_rate
from OTOffload.policy import State, greedy_action
from OTOffload.scenario import ScenarioConfig, generate_scenario, scenario_hash
from OTOffload.trainer import AnnealingSchedule, TrainConfig, train

logger = logging.getLogger(__name__)

OTRL = 'otrl'
ALGORITHMS = (OTRL, BaselineKind.PLAIN_RL.value, BaselineKind.GREEDY.value,
              BaselineKind.RANDOM.value)
LEARNED = (OTRL, BaselineKind.PLAIN_RL.value)
MAX_PASSES = 5
UNSTABLE = 'unstable'


@dataclass(frozen=True)
class SweepSpec:
    """
    Parameter sweep: one axis, its points, seeds per point and algorithms
    """
    axis: str = 'data_size_kb'
    points: tuple = tuple(range(100, 1001, 100))
    repetitions: int = 10
    algorithms: tuple = ALGORITHMS
    max_workers: int = 1

    def __post_init__(self):
        if self.axis not in ScenarioConfig.AXES:
            raise InvalidParametersError('axis must be one of {}, got {}'
                                         .format(ScenarioConfig.AXES,
                                                 self.axis))

        points = tuple(float(p) for p in self.points)
        if not points or np.any(np.diff(points) <= 0):
            raise InvalidParametersError('points must be nonempty and '
                                         'strictly increasing, got {}'
                                         .format(points))
        object.__setattr__(self, 'points', points)

        if int(self.repetitions) != self.repetitions or self.repetitions < 1:
            raise InvalidParametersError('repetitions must be an integer >= '
                                         '1, got {}'.format(self.repetitions))

        algorithms = tuple(str(a).lower() for a in self.algorithms)
        unknown = [a for a in algorithms if a not in ALGORITHMS]
        if not algorithms or unknown:
            raise InvalidParametersError('algorithms must be drawn from {}, '
                                         'got {}'.format(ALGORITHMS,
                                                         self.algorithms))
        object.__setattr__(self, 'algorithms', algorithms)

        if self.max_workers < 1:
            raise InvalidParametersError('max_workers must be >= 1, got {}'
                                         .format(self.max_workers))

    @property
    def n_cells(self):
        """
        Number of (point, seed, algorithm) cells

        Returns
        -------
        int
        """
        return len(self.points) * self.repetitions * len(self.algorithms)


@dataclass(frozen=True)
class Evaluation:
    """
    Aggregate metrics of one algorithm on one scenario
    """
    avg_cost: float
    avg_delay_s: float
    avg_energy_j: float
    offload_ratio: float
    flag: str
    decisions: tuple


@dataclass(frozen=True)
class ResultRow:
    """
    One sweep cell
    """
    algorithm: str
    axis: str
    axis_value: float
    seed: int
    avg_cost: float
    avg_delay_s: float
    avg_energy_j: float
    offload_ratio: float
    flag: str = ''


SWEEP_COLUMNS = ('algorithm', 'axis', 'axis_value', 'seed', 'avg_cost',
                 'avg_delay_s', 'avg_energy_j', 'offload_ratio', 'flag')
CONVERGE_COLUMNS = ('algorithm', 'iteration', 'lambda1', 'lambda2',
                    'ot_cost', 'avg_reward', 'joint_loss')


def _decide(algorithm, scenario, r_u, policy, seed):
    """
    Decisions of every task at a fixed upload rate
    """
    if algorithm == BaselineKind.GREEDY.value:
        return tuple(greedy_decide(t, scenario.params, r_u)
                     for t in scenario.tasks)
    elif algorithm == BaselineKind.RANDOM.value:
        rng = np.random.default_rng(seed)
        return tuple(random_decide(t, rng) for t in scenario.tasks)

    n_tasks = len(scenario.tasks)
    return tuple(greedy_action(policy, State(t, r_u, n_tasks - i))
                 for i, t in enumerate(scenario.tasks))


def _offloaded(decisions):
    """
    Number of decisions that leave the end device
    """
    return sum(d != OffloadDecision.LOCAL for d in decisions)


def evaluate(algorithm, scenario, policy=None, seed=0):
    """
    Run every task through an algorithm's decision rule and aggregate the
    resulting costs

    The upload rate depends on how many EDs offload, so decisions are
    recomputed with the rate of the previous pass until they stop changing
    or MAX_PASSES is reached.

    Parameters
    ----------
    algorithm : str
        One of ALGORITHMS
    scenario : Scenario
    policy : PolicyParams, optional
        Required for learned algorithms, acted on greedily
    seed : int
        Seed of the random baseline

    Returns
    -------
    Evaluation
        flag is 'unstable' when the decisions never settled
    """
    algorithm = str(algorithm).lower()
    if algorithm not in ALGORITHMS:
        raise InvalidParametersError('algorithm must be one of {}, got {}'
                                     .format(ALGORITHMS, algorithm))
    if algorithm in LEARNED and policy is None:
        raise InvalidParametersError('{} needs a trained policy'
                                     .format(algorithm))

    params = scenario.params
    count = len(scenario.tasks)
    decisions = None
    flag = UNSTABLE
    for i in range(MAX_PASSES):
        r_u = upload_rate(params, max(count, 1))
        new = _decide(algorithm, scenario, r_u, policy, seed)
        if new == decisions:
            flag = ''
            break

        decisions = new
        count = _offloaded(decisions)
        logger.debug('{} pass {}: {} of {} tasks offloaded'
                     .format(algorithm, i + 1, count, len(decisions)))

    if flag:
        logger.warning('{} decisions did not settle in {} passes, using the '
                       'last pass'.format(algorithm, MAX_PASSES))

    n_off = _offloaded(decisions)
    r_u = upload_rate(params, max(n_off, 1))
    cycles = np.array([t.cycles_required for t in scenario.tasks])
    bits = np.array([t.data_size_bits for t in scenario.tasks])
    delay, energy, cost = decision_costs(cycles, bits, params, r_u)
    rows = np.arange(len(decisions))
    idx = np.array([d.index for d in decisions])

    return Evaluation(avg_cost=float(cost[rows, idx].mean()),
                      avg_delay_s=float(delay[rows, idx].mean()),
                      avg_energy_j=float(energy[rows, idx].mean()),
                      offload_ratio=n_off / len(decisions),
                      flag=flag, decisions=decisions)


def fit_policy(algorithm, scenario, train_config=None, schedule=None):
    """
    Train a fresh policy for a learned algorithm

    Parameters
    ----------
    algorithm : str
        'otrl' or 'plainrl'
    scenario : Scenario
    train_config : TrainConfig, optional
    schedule : AnnealingSchedule, optional

    Returns
    -------
    theta : PolicyParams
    trace : TrainTrace
    """
    if algorithm == OTRL:
        return train(scenario, config=train_config, schedule=schedule)
    elif algorithm == BaselineKind.PLAIN_RL.value:
        return plain_rl_train(scenario, config=train_config,
                              schedule=schedule)

    raise InvalidParametersError('{} is not a learned algorithm'
                                 .format(algorithm))


def run_cell(algorithm, scenario, train_config=None, schedule=None, seed=0):
    """
    Train if needed, then evaluate one algorithm on one scenario

    Parameters
    ----------
    algorithm : str
    scenario : Scenario
    train_config : TrainConfig, optional
    schedule : AnnealingSchedule, optional
    seed : int

    Returns
    -------
    Evaluation
    """
    digest = scenario_hash(scenario)
    policy = None
    if algorithm in LEARNED:
        if train_config is None:
            train_config = TrainConfig()
        policy, _ = fit_policy(algorithm, scenario,
                               replace(train_config, seed=seed), schedule)

    result = evaluate(algorithm, scenario, policy=policy, seed=seed)
    if scenario_hash(scenario) != digest:
        raise RuntimeError('Scenario changed while running {}'
                           .format(algorithm))

    logger.debug('{} on scenario {}: avg cost {:.4f}'
                 .format(algorithm, digest[:12], result.avg_cost))

    return result


def _sweep_cell(cell):
    """
    Sweep worker, failures become flagged rows
    """
    spec_axis, value, seed, algorithm, scenario_config, train_config, \
        schedule = cell
    try:
        config = replace(scenario_config.with_axis(spec_axis, value),
                         seed=seed)
        scenario = generate_scenario(config)
        result = run_cell(algorithm, scenario, train_config=train_config,
                          schedule=schedule, seed=seed)
    except Exception as ex:
        logger.error('Sweep cell ({}={}, seed={}, {}) failed: {}'
                     .format(spec_axis, value, seed, algorithm, ex))
        return ResultRow(algorithm, spec_axis, value, seed, np.nan, np.nan,
                         np.nan, np.nan, 'error: {}'.format(ex))

    return ResultRow(algorithm, spec_axis, value, seed, result.avg_cost,
                     result.avg_delay_s, result.avg_energy_j,
                     result.offload_ratio, result.flag)


class Sweep:
    """
    Grid of (point, seed, algorithm) cells over one scenario axis
    """
    def __init__(self, spec, scenario_config=None, train_config=None,
                 schedule=None):
        """
        Parameters
        ----------
        spec : SweepSpec
        scenario_config : ScenarioConfig, optional
        train_config : TrainConfig, optional
        schedule : AnnealingSchedule, optional
        """
        if scenario_config is None:
            scenario_config = ScenarioConfig()
        if train_config is None:
            train_config = TrainConfig()
        if schedule is None:
            schedule = AnnealingSchedule()

        self._spec = spec
        self._scenario_config = scenario_config
        self._train_config = train_config
        self._schedule = schedule

    def __repr__(self):
        return '{} over {}: {} cells'.format(self.__class__.__name__,
                                            self._spec.axis,
                                            self._spec.n_cells)

    @property
    def cells(self):
        """
        Cell arguments ordered by point, then seed, then algorithm

        Seeds are scenario_config.seed + repetition.

        Returns
        -------
        list
        """
        spec = self._spec
        seed = self._scenario_config.seed
        return [(spec.axis, value, seed + rep, algorithm,
                 self._scenario_config, self._train_config, self._schedule)
                for value in spec.points
                for rep in range(spec.repetitions)
                for algorithm in spec.algorithms]

    def evaluate(self):
        """
        Run every cell, in worker processes when spec.max_workers > 1

        Returns
        -------
        list
            ResultRow per cell
        """
        cells = self.cells
        max_workers = self._spec.max_workers
        logger.info('Running {} sweep: {} cells on {} worker(s)'
                    .format(self._spec.axis, len(cells), max_workers))
        if max_workers > 1:
            with ProcessPoolExecutor(max_workers=max_workers) as exe:
                rows = list(exe.map(_sweep_cell, cells))
        else:
            rows = [_sweep_cell(cell) for cell in cells]

        failed = sum(bool(r.flag.startswith('error')) for r in rows)
        if failed:
            logger.warning('{} of {} sweep cells failed'.format(failed,
                                                                len(rows)))

        return rows

    @classmethod
    def run(cls, spec, scenario_config=None, train_config=None,
            schedule=None):
        """
        Evaluate every algorithm at every sweep point and seed

        Learned algorithms are retrained from scratch in every cell.

        Parameters
        ----------
        spec : SweepSpec
        scenario_config : ScenarioConfig, optional
        train_config : TrainConfig, optional
        schedule : AnnealingSchedule, optional

        Returns
        -------
        list
            ResultRow ordered by point, then seed, then algorithm
        """
        sweep = cls(spec, scenario_config=scenario_config,
                    train_config=train_config, schedule=schedule)

        return sweep.evaluate()


def run_sweep(spec, scenario_config=None, train_config=None, schedule=None):
    """
    Sweep.run shortcut

    Returns
    -------
    list
        ResultRow ordered by point, then seed, then algorithm
    """
    return Sweep.run(spec, scenario_config=scenario_config,
                     train_config=train_config, schedule=schedule)


def rows_to_frame(rows):
    """
    Sweep rows as a DataFrame with the sweep CSV columns

    Parameters
    ----------
    rows : list
        ResultRow

    Returns
    -------
    pandas.DataFrame
    """
    return pd.DataFrame([astuple(r) for r in rows],
                        columns=list(SWEEP_COLUMNS))


def convergence_trace(scenario_config=None, train_config=None,
                      schedule=None):
    """
    OTRL and plain-RL training traces on the same scenario and seed

    Parameters
    ----------
    scenario_config : ScenarioConfig, optional
    train_config : TrainConfig, optional
    schedule : AnnealingSchedule, optional

    Returns
    -------
    pandas.DataFrame
        CONVERGE_COLUMNS, OTRL rows first
    """
    scenario = generate_scenario(scenario_config)
    tables = []
    for algorithm in LEARNED:
        _, trace = fit_policy(algorithm, scenario, train_config, schedule)
        table = trace.table
        table.insert(0, 'algorithm', algorithm)
        tables.append(table)

    return pd.concat(tables, ignore_index=True)[list(CONVERGE_COLUMNS)]
