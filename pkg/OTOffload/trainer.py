# -*- coding: utf-8 -*-
"""
Joint optimal-transport / policy-gradient training of the offloading policy
"""
from dataclasses import dataclass, fields, replace
import logging
import numpy as np
import pandas as pd
import warnings

from OTOffload.exceptions import InvalidParametersError, NonFiniteError
from OTOffload.model import (OffloadDecision, decision_cost, local_cost,
                             reward, upload_rate)
from OTOffload.policy import (PolicyParams, State, Step, Trajectory,
                             action_probabilities, average_reward,
                             gradient_step, log_likelihood, policy_gradient,
                             sample_action, score_function)
from OTOffload.transport import (DiscreteMeasure, build_problem, primal_cost,
                                 plan_to_decisions, sinkhorn)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AnnealingSchedule:
    """
    Three-phase weights of the OT cost (lambda1) and of the average
    reward (lambda2): offline, exploration and fine-tune
    """
    lambda1_start: float = 1.0
    lambda1_end: float = 0.1
    lambda2_start: float = 0.1
    lambda2_end: float = 1.0
    phase_fractions: tuple = (0.2, 0.6, 0.2)
    mode: str = 'linear'

    MODES = ('linear', 'exponential')

    def __post_init__(self):
        object.__setattr__(self, 'phase_fractions',
                           tuple(float(f) for f in self.phase_fractions))
        lambdas = (self.lambda1_start, self.lambda1_end,
                   self.lambda2_start, self.lambda2_end)
        if any(not np.isfinite(lam) or lam < 0 for lam in lambdas):
            raise InvalidParametersError('Lambda endpoints must be finite and '
                                         '>= 0, got {}'.format(lambdas))

        fractions = self.phase_fractions
        if len(fractions) != 3 or any(not 0 < f < 1 for f in fractions) \
                or abs(sum(fractions) - 1) > 1e-9:
            raise InvalidParametersError('phase_fractions must be three values '
                                         'in (0, 1) summing to 1, got {}'
                                         .format(fractions))

        if self.mode not in self.MODES:
            raise InvalidParametersError('mode must be one of {}, got {}'
                                         .format(self.MODES, self.mode))

    def interpolate(self, start, end, t):
        """
        Value between start (t = 0) and end (t = 1)

        Exponential mode interpolates geometrically and falls back to
        linear when an endpoint is 0.
        """
        if self.mode == 'exponential' and start > 0 and end > 0:
            return start * (end / start) ** t

        return start + t * (end - start)


@dataclass(frozen=True)
class TrainConfig:
    """
    Training loop settings
    """
    max_iter: int = 50
    batch_episodes: int = 8
    finetune_episodes: int = 16
    epsilon: float = 0.01
    tolerance: float = 1e-6
    sinkhorn_max_iter: int = 10000
    learning_rate: float = 0.05
    discount: float = 0.9
    grad_clip: float = 5.0
    imitation_steps: int = 200
    imitation_rate: float = 1.0
    seed: int = 0

    def __post_init__(self):
        for name in ('max_iter', 'batch_episodes', 'finetune_episodes',
                     'sinkhorn_max_iter'):
            if int(getattr(self, name)) != getattr(self, name) \
                    or getattr(self, name) < 1:
                raise InvalidParametersError('{} must be an integer >= 1, got '
                                             '{}'.format(name,
                                                         getattr(self, name)))

        if self.imitation_steps < 0:
            raise InvalidParametersError('imitation_steps must be >= 0, got {}'
                                         .format(self.imitation_steps))

        for name in ('epsilon', 'tolerance', 'learning_rate',
                     'imitation_rate'):
            if not getattr(self, name) > 0:
                raise InvalidParametersError('{} must be > 0, got {}'
                                             .format(name,
                                                     getattr(self, name)))

        if not 0 <= self.discount < 1:
            raise InvalidParametersError('discount must be in [0, 1), got {}'
                                         .format(self.discount))

        if self.grad_clip is not None and not self.grad_clip > 0:
            raise InvalidParametersError('grad_clip must be > 0 or None, got '
                                         '{}'.format(self.grad_clip))

    @classmethod
    def field_names(cls):
        """
        Names of all configurable settings

        Returns
        -------
        list
        """
        return [f.name for f in fields(cls)]


class TrainTrace:
    """
    Per-iteration record of a training run
    """
    COLUMNS = ('iteration', 'lambda1', 'lambda2', 'ot_cost', 'avg_reward',
               'joint_loss')

    def __init__(self, rows=None):
        self._rows = []
        for row in rows or []:
            self.append(*row)

    def __len__(self):
        return len(self._rows)

    def __repr__(self):
        return '{} with {} iterations'.format(self.__class__.__name__,
                                              len(self))

    def __getitem__(self, column):
        return self.table[column].values

    def append(self, iteration, lambda1, lambda2, ot_cost, avg_reward,
               joint_loss):
        """
        Record one iteration
        """
        self._rows.append((int(iteration), float(lambda1), float(lambda2),
                           float(ot_cost), float(avg_reward),
                           float(joint_loss)))

    @property
    def table(self):
        """
        Trace as a DataFrame

        Returns
        -------
        pandas.DataFrame
            One row per iteration, columns COLUMNS
        """
        return pd.DataFrame(self._rows, columns=list(self.COLUMNS))


OFFLINE, EXPLORE, FINETUNE = 'offline', 'explore', 'finetune'


def _progress(iteration, max_iter):
    if not 1 <= iteration <= max_iter:
        raise InvalidParametersError('iteration must be in [1, {}], got {}'
                                     .format(max_iter, iteration))

    return (iteration - 1) / max_iter


def annealing_phase(iteration, schedule, max_iter):
    """
    Phase the given 1-based iteration falls in

    Returns
    -------
    str
        OFFLINE, EXPLORE or FINETUNE
    """
    progress = _progress(iteration, max_iter)
    offline, explore, _ = schedule.phase_fractions
    if progress < offline:
        return OFFLINE
    elif progress < offline + explore:
        return EXPLORE

    return FINETUNE


def annealing_scheme(iteration, schedule, max_iter):
    """
    Lambda weights of the given iteration

    Parameters
    ----------
    iteration : int
        1-based iteration index
    schedule : AnnealingSchedule
    max_iter : int

    Returns
    -------
    lambda1 : float
        Weight of the OT cost
    lambda2 : float
        Weight of the average reward
    """
    phase = annealing_phase(iteration, schedule, max_iter)
    if phase == OFFLINE:
        return schedule.lambda1_start, schedule.lambda2_start
    elif phase == EXPLORE:
        offline, explore, _ = schedule.phase_fractions
        t = (_progress(iteration, max_iter) - offline) / explore
        lambda1 = schedule.interpolate(schedule.lambda1_start,
                                       schedule.lambda1_end, t)
        lambda2 = schedule.interpolate(schedule.lambda2_start,
                                       schedule.lambda2_end, t)
        return lambda1, lambda2

    return ((schedule.lambda1_start + schedule.lambda1_end) / 2,
            schedule.lambda2_end)


def joint_loss(ot_cost, avg_reward, lambda1, lambda2):
    """
    lambda1 * C - lambda2 * J, minimized by lowering the transport cost and
    raising the average reward

    Parameters
    ----------
    ot_cost : float
    avg_reward : float
    lambda1 : float
    lambda2 : float

    Returns
    -------
    float
    """
    return lambda1 * ot_cost - lambda2 * avg_reward


def run_episode(scenario, theta, rng, discount=0.9):
    """
    Decide every task of the scenario in arrival order with the stochastic
    policy

    The upload rate of each state is the band shared by the EDs that have
    offloaded so far plus the one deciding.

    Parameters
    ----------
    scenario : Scenario
    theta : PolicyParams
    rng : numpy.random.Generator
    discount : float

    Returns
    -------
    Trajectory
    """
    params = scenario.params
    n_tasks = len(scenario.tasks)
    offloaded = 0
    steps = []
    for i, task in enumerate(scenario.tasks):
        rate = upload_rate(params, offloaded + 1)
        state = State(task, rate, n_tasks - i)
        decision = sample_action(action_probabilities(theta, state), rng)
        r = reward(local_cost(task, params),
                   decision_cost(task, decision, params, rate), params)
        steps.append(Step(state, decision, r))
        if decision != OffloadDecision.LOCAL:
            offloaded += 1

    return Trajectory(steps, discount)


def replay_states(scenario, decisions):
    """
    States visited when the given decisions are taken in arrival order

    Parameters
    ----------
    scenario : Scenario
    decisions : list
        OffloadDecision per task

    Returns
    -------
    list
        State per task
    """
    params = scenario.params
    n_tasks = len(scenario.tasks)
    offloaded = 0
    states = []
    for i, (task, decision) in enumerate(zip(scenario.tasks, decisions)):
        states.append(State(task, upload_rate(params, offloaded + 1),
                            n_tasks - i))
        if decision != OffloadDecision.LOCAL:
            offloaded += 1

    return states


def capacity_prior(scenario):
    """
    Target measure from the node capacity weights

    Parameters
    ----------
    scenario : Scenario

    Returns
    -------
    ndarray
        (M, ) node weights summing to 1
    """
    return DiscreteMeasure.from_weights(
        [n.capacity_weight for n in scenario.nodes]).weights


def batch_occupancy(batch, nodes):
    """
    Share of batch decisions taken by each node, split evenly between
    nodes of the same kind

    Parameters
    ----------
    batch : list
        Trajectories
    nodes : list
        NodeSpec per coupling column

    Returns
    -------
    ndarray | None
        (M, ) occupancy, None when no decision maps onto a node
    """
    kinds = [n.kind for n in nodes]
    counts = {k: 0 for k in kinds}
    for traj in batch:
        for step in traj.steps:
            if step.decision in counts:
                counts[step.decision] += 1

    occupancy = np.array([counts[k] / kinds.count(k) for k in kinds],
                         dtype=float)
    if not occupancy.sum() > 0:
        return None

    return occupancy / occupancy.sum()


def blend_target(prior, occupancy):
    """
    Capacity prior blended 50/50 with the realized occupancy

    Parameters
    ----------
    prior : ndarray
    occupancy : ndarray | None

    Returns
    -------
    ndarray
    """
    if occupancy is None:
        return prior

    target = 0.5 * prior + 0.5 * occupancy

    return target / target.sum()


def ot_targets(scenario, config, target=None):
    """
    Solve the task -> node transport problem and round it to decisions

    The upload rate assumes every task that the target does not place on a
    Local node is offloaded.

    Parameters
    ----------
    scenario : Scenario
    config : TrainConfig
    target : ndarray, optional
        Node weights, defaults to the capacity prior

    Returns
    -------
    plan : TransportPlan
    cost : float
        Primal transport cost of the plan
    decisions : list
        OffloadDecision per task
    """
    nodes = scenario.nodes
    if target is None:
        target = capacity_prior(scenario)

    n_tasks = len(scenario.tasks)
    local_mass = sum(w for w, n in zip(target, nodes)
                     if n.kind == OffloadDecision.LOCAL)
    offloaders = max(1, int(round(n_tasks * (1 - local_mass))))
    r_u = upload_rate(scenario.params, offloaders)

    problem = build_problem(scenario.tasks, nodes, scenario.params, r_u,
                            config.epsilon)
    problem = problem.with_target(DiscreteMeasure(target))
    plan = sinkhorn(problem, max_iter=config.sinkhorn_max_iter,
                    tolerance=config.tolerance)
    decisions = plan_to_decisions(plan, [n.kind for n in nodes])

    return plan, primal_cost(plan, problem), decisions


def imitation_loss(theta, states, decisions):
    """
    Cross-entropy of the policy against target decisions

    Parameters
    ----------
    theta : PolicyParams
    states : list
    decisions : list

    Returns
    -------
    float
        -sum(log pi(d | s)), N * log(3) for the uniform policy
    """
    return -log_likelihood(states, decisions, theta)


def imitation_gradient(theta, states, decisions):
    """
    Gradient of the log-likelihood of the target decisions, summed over
    tasks

    Parameters
    ----------
    theta : PolicyParams
    states : list
    decisions : list

    Returns
    -------
    ndarray
        Ascent direction of -imitation_loss
    """
    score, _ = score_function(theta, states, decisions)

    return score.sum(axis=0)


def offline_train(scenario, config=None):
    """
    Fit the policy to the decisions of one OT solve on the capacity prior

    Parameters
    ----------
    scenario : Scenario
    config : TrainConfig, optional

    Returns
    -------
    PolicyParams
        Uniform policy (theta = 0) when the transport solve did not
        converge
    """
    if config is None:
        config = TrainConfig()

    theta = PolicyParams.zeros()
    plan, cost, decisions = ot_targets(scenario, config)
    if not plan.converged:
        msg = ('Offline transport solve did not converge (residual {:.3e}), '
               'falling back to the uniform policy'
               .format(plan.marginal_residual))
        logger.warning(msg)
        warnings.warn(msg)
        return theta

    states = replay_states(scenario, decisions)
    logger.debug('Offline imitation of {} OT decisions, OT cost {:.4f}, '
                 'initial loss {:.4f}'
                 .format(len(decisions), cost,
                         imitation_loss(theta, states, decisions)))
    # per-task step size
    rate = config.imitation_rate / len(decisions)
    for _ in range(config.imitation_steps):
        grad = imitation_gradient(theta, states, decisions)
        theta = gradient_step(theta, grad, rate)

    logger.debug('Offline imitation final loss {:.4f}'
                 .format(imitation_loss(theta, states, decisions)))

    return theta


class OTRLTrainer:
    """
    Joint training loop: policy rollouts, OT re-solves on the realized
    occupancy and annealed gradient steps on one scenario
    """
    def __init__(self, scenario, config=None, schedule=None):
        """
        Parameters
        ----------
        scenario : Scenario
        config : TrainConfig, optional
        schedule : AnnealingSchedule, optional
        """
        if config is None:
            config = TrainConfig()
        if schedule is None:
            schedule = AnnealingSchedule()

        self._scenario = scenario
        self._config = config
        self._schedule = schedule
        self._rng = np.random.default_rng(config.seed)
        self._prior = capacity_prior(scenario)
        self._theta = PolicyParams.zeros()
        self._trace = TrainTrace()

    def __repr__(self):
        msg = '{} on {} tasks, {} of {} iterations done'.format(
            self.__class__.__name__, len(self._scenario.tasks),
            len(self._trace), self._config.max_iter)

        return msg

    @property
    def theta(self):
        """
        Current policy parameters

        Returns
        -------
        PolicyParams
        """
        return self._theta

    @property
    def trace(self):
        """
        Iterations run so far

        Returns
        -------
        TrainTrace
        """
        return self._trace

    def batch_size(self, iteration):
        """
        Episodes rolled out at the given iteration, larger in the
        fine-tune phase

        Parameters
        ----------
        iteration : int

        Returns
        -------
        int
        """
        phase = annealing_phase(iteration, self._schedule,
                                self._config.max_iter)
        if phase == FINETUNE:
            return self._config.finetune_episodes

        return self._config.batch_episodes

    def rollout(self, n_episodes):
        """
        Episodes of the current stochastic policy

        Parameters
        ----------
        n_episodes : int

        Returns
        -------
        list
            Trajectories
        """
        return [run_episode(self._scenario, self._theta, self._rng,
                            self._config.discount)
                for _ in range(n_episodes)]

    def ot_gradient(self, batch):
        """
        Re-solve the transport problem on the batch occupancy and return
        its cost with the imitation gradient toward its decisions

        Parameters
        ----------
        batch : list
            Trajectories

        Returns
        -------
        ot_cost : float
        grad : ndarray
        """
        target = blend_target(self._prior,
                              batch_occupancy(batch, self._scenario.nodes))
        _, ot_cost, decisions = ot_targets(self._scenario, self._config,
                                           target=target)
        states = replay_states(self._scenario, decisions)

        return ot_cost, imitation_gradient(self._theta, states, decisions)

    def step(self, iteration):
        """
        Run one iteration and update the policy

        Parameters
        ----------
        iteration : int
            1-based

        Returns
        -------
        float
            Joint loss of the iteration
        """
        lambda1, lambda2 = annealing_scheme(iteration, self._schedule,
                                            self._config.max_iter)
        batch = self.rollout(self.batch_size(iteration))
        avg_r = average_reward(batch)
        rl_grad = policy_gradient(batch, self._theta)
        ot_cost, ot_grad = self.ot_gradient(batch)

        loss = joint_loss(ot_cost, avg_r, lambda1, lambda2)
        if not np.isfinite(loss):
            raise NonFiniteError('Joint loss is not finite at iteration {}: '
                                 'ot_cost={}, avg_reward={}'
                                 .format(iteration, ot_cost, avg_r))

        self._trace.append(iteration, lambda1, lambda2, ot_cost, avg_r, loss)
        logger.debug('Iteration {}: lambda=({:.3f}, {:.3f}), C={:.4f}, '
                     'J={:.4f}, L={:.4f}'.format(iteration, lambda1, lambda2,
                                                 ot_cost, avg_r, loss))
        try:
            self._theta = gradient_step(self._theta,
                                        lambda1 * ot_grad + lambda2 * rl_grad,
                                        self._config.learning_rate,
                                        clip=self._config.grad_clip)
        except NonFiniteError as ex:
            raise NonFiniteError('Policy update failed at iteration {}: {}'
                                 .format(iteration, ex)) from ex

        return loss

    @classmethod
    def run(cls, scenario, config=None, schedule=None):
        """
        Train for config.max_iter iterations

        Parameters
        ----------
        scenario : Scenario
        config : TrainConfig, optional
        schedule : AnnealingSchedule, optional

        Returns
        -------
        theta : PolicyParams
        trace : TrainTrace
            max_iter rows
        """
        trainer = cls(scenario, config=config, schedule=schedule)
        max_iter = trainer._config.max_iter
        logger.info('Training on {} tasks for {} iterations'
                    .format(len(scenario.tasks), max_iter))
        for it in range(1, max_iter + 1):
            trainer.step(it)

        trace = trainer.trace
        logger.info('Training finished, final loss {:.4f}, average reward '
                    '{:.4f}'.format(trace['joint_loss'][-1],
                                    trace['avg_reward'][-1]))

        return trainer.theta, trace


def train(scenario, config=None, schedule=None):
    """
    Joint OT / policy-gradient training, see OTRLTrainer

    Parameters
    ----------
    scenario : Scenario
    config : TrainConfig, optional
    schedule : AnnealingSchedule, optional

    Returns
    -------
    theta : PolicyParams
    trace : TrainTrace
        max_iter rows
    """
    return OTRLTrainer.run(scenario, config=config, schedule=schedule)


def plain_rl_train(scenario, config=None, schedule=None):
    """
    Training loop with the OT term switched off (lambda1 = 0)

    Parameters
    ----------
    scenario : Scenario
    config : TrainConfig, optional
    schedule : AnnealingSchedule, optional
        lambda2 schedule and phases, lambda1 endpoints are ignored

    Returns
    -------
    theta : PolicyParams
    trace : TrainTrace
    """
    if schedule is None:
        schedule = AnnealingSchedule()

    schedule = replace(schedule, lambda1_start=0.0, lambda1_end=0.0)

    return train(scenario, config=config, schedule=schedule)
