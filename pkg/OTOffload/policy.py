# -*- coding: utf-8 -*-
"""
Linear softmax offloading policy: features, action probabilities,
Monte-Carlo returns and the score-function policy gradient
"""
from dataclasses import dataclass
from functools import cached_property
import logging
import numpy as np
from scipy.special import log_softmax, softmax

from OTOffload.exceptions import (InvalidParametersError, InvalidRateError,
                                  NonFiniteError)
from OTOffload.model import ACTIONS, OffloadDecision

logger = logging.getLogger(__name__)


class FeatureMap:
    """
    Min-max scaled log10(1 + x) state features

    Each action owns a block of N_BASE coordinates:
    [bias, data size, cycles, upload rate, pending tasks]
    """
    DATA_LOG_RANGE = (4.0, 8.0)
    CYCLES_LOG_RANGE = (7.0, 11.0)
    RATE_LOG_RANGE = (5.0, 9.0)
    PENDING_RANGE = (0.0, 200.0)
    N_BASE = 5

    @staticmethod
    def _scale(value, bounds):
        """
        Min-max scale value into [0, 1]
        """
        lo, hi = bounds
        return float(np.clip((value - lo) / (hi - lo), 0, 1))

    @classmethod
    def base(cls, task, rate, pending_count):
        """
        Action-independent feature vector of a state

        Parameters
        ----------
        task : Task
        rate : float
            Current upload rate in bits/s
        pending_count : int
            Tasks not yet decided in the episode

        Returns
        -------
        ndarray
            (N_BASE, ) features
        """
        return np.array([
            1.0,
            cls._scale(np.log10(1 + task.data_size_bits), cls.DATA_LOG_RANGE),
            cls._scale(np.log10(1 + task.cycles_required),
                       cls.CYCLES_LOG_RANGE),
            cls._scale(np.log10(1 + rate), cls.RATE_LOG_RANGE),
            cls._scale(pending_count, cls.PENDING_RANGE)])

    @classmethod
    def block(cls, base):
        """
        Place the base features in one block per action

        Parameters
        ----------
        base : ndarray
            (N_BASE, ) features

        Returns
        -------
        ndarray
            (3, 3 * N_BASE) matrix, row k is phi(s, ACTIONS[k])
        """
        return np.kron(np.eye(len(ACTIONS)), base)


FEATURE_DIM = FeatureMap.N_BASE * len(ACTIONS)


@dataclass(frozen=True)
class State:
    """
    What the policy observes before deciding one task
    """
    task: object
    current_upload_rate: float
    pending_count: int

    def __post_init__(self):
        if self.pending_count < 0:
            raise InvalidParametersError('pending_count must be >= 0, got {}'
                                         .format(self.pending_count))
        if not np.isfinite(self.current_upload_rate) \
                or self.current_upload_rate <= 0:
            raise InvalidRateError('current_upload_rate must be > 0, got {}'
                                   .format(self.current_upload_rate))

    @cached_property
    def feature_matrix(self):
        """
        phi(s, a) for every action, computed once per state

        Returns
        -------
        ndarray
            (3, FEATURE_DIM)
        """
        base = FeatureMap.base(self.task, self.current_upload_rate,
                               self.pending_count)
        return FeatureMap.block(base)


@dataclass(frozen=True, eq=False)
class PolicyParams:
    """
    Parameter vector theta of the linear softmax policy
    """
    theta: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float).ravel()
        if np.any(~np.isfinite(theta)):
            raise NonFiniteError('Policy parameters must be finite')

        object.__setattr__(self, 'theta', theta)

    def __repr__(self):
        return '{} with feature_dim={}'.format(self.__class__.__name__,
                                               self.feature_dim)

    @property
    def feature_dim(self):
        """
        Length of theta

        Returns
        -------
        int
        """
        return self.theta.size

    @classmethod
    def zeros(cls, feature_dim=FEATURE_DIM):
        """
        Uniform policy

        Parameters
        ----------
        feature_dim : int

        Returns
        -------
        PolicyParams
        """
        return cls(np.zeros(feature_dim))

    def to_dict(self):
        """
        Checkpoint representation

        Returns
        -------
        dict
            {"feature_dim": int, "theta": [floats]}
        """
        return {'feature_dim': int(self.feature_dim),
                'theta': [float(t) for t in self.theta]}

    @classmethod
    def from_dict(cls, data):
        """
        Restore parameters from their checkpoint representation

        Parameters
        ----------
        data : dict
            {"feature_dim": int, "theta": [floats]}

        Returns
        -------
        PolicyParams
        """
        params = cls(data['theta'])
        if params.feature_dim != int(data['feature_dim']):
            raise InvalidParametersError('Checkpoint feature_dim {} does not '
                                         'match theta length {}'
                                         .format(data['feature_dim'],
                                                 params.feature_dim))

        return params


@dataclass(frozen=True)
class Step:
    """
    One (state, decision, reward) transition
    """
    state: State
    decision: OffloadDecision
    reward: float


@dataclass(frozen=True)
class Trajectory:
    """
    Transitions of one episode in the order they were taken
    """
    steps: tuple
    discount: float = 0.9

    def __post_init__(self):
        object.__setattr__(self, 'steps', tuple(self.steps))
        if not self.steps:
            raise InvalidParametersError('Trajectory has no steps')
        if not 0 <= self.discount < 1:
            raise InvalidParametersError('discount must be in [0, 1), got {}'
                                         .format(self.discount))

        rewards = self.rewards
        if np.any(~np.isfinite(rewards)):
            raise NonFiniteError('Trajectory rewards must be finite')
        if np.any(rewards > 1 + 1e-9):
            raise InvalidParametersError('Rewards are bounded by 1, got {}'
                                         .format(rewards.max()))

    def __len__(self):
        return len(self.steps)

    @property
    def rewards(self):
        """
        Per-step rewards

        Returns
        -------
        ndarray
        """
        return np.array([s.reward for s in self.steps], dtype=float)


def _check_dim(theta):
    """
    Raise unless theta matches the feature map
    """
    if theta.feature_dim != FEATURE_DIM:
        raise InvalidParametersError('theta has {} entries, features have {}'
                                     .format(theta.feature_dim, FEATURE_DIM))


def features(state, action):
    """
    Feature vector phi(s, a)

    Parameters
    ----------
    state : State
    action : OffloadDecision

    Returns
    -------
    ndarray
        (FEATURE_DIM, )
    """
    return state.feature_matrix[OffloadDecision(action).index].copy()


def _logits(theta, feature_matrix):
    """
    phi(s, .) . theta, raising on non-finite values
    """
    with np.errstate(over='ignore', invalid='ignore'):
        logits = feature_matrix @ theta.theta

    if np.any(~np.isfinite(logits)):
        raise NonFiniteError('Policy logits are not finite')

    return logits


def action_probabilities(theta, state):
    """
    Softmax probabilities of (Local, Edge, Cloud)

    Parameters
    ----------
    theta : PolicyParams
    state : State

    Returns
    -------
    ndarray
        (3, ) probabilities summing to 1
    """
    _check_dim(theta)
    return softmax(_logits(theta, state.feature_matrix))


def greedy_action(theta, state):
    """
    Most probable action, ties broken Local < Edge < Cloud

    Parameters
    ----------
    theta : PolicyParams
    state : State

    Returns
    -------
    OffloadDecision
    """
    _check_dim(theta)
    return ACTIONS[int(np.argmax(_logits(theta, state.feature_matrix)))]


def sample_action(probs, rng):
    """
    Inverse-CDF draw over the fixed order Local, Edge, Cloud

    Parameters
    ----------
    probs : ndarray
        (3, ) probabilities
    rng : numpy.random.Generator

    Returns
    -------
    OffloadDecision
    """
    cdf = np.cumsum(probs)
    idx = int(np.searchsorted(cdf, rng.random(), side='right'))

    return ACTIONS[min(idx, len(ACTIONS) - 1)]


def q_estimates(traj):
    """
    Discounted Monte-Carlo return of every step

    Parameters
    ----------
    traj : Trajectory

    Returns
    -------
    q : ndarray
        Q_t = r_t + discount * Q_{t+1}
    """
    rewards = traj.rewards
    q = np.empty_like(rewards)
    running = 0.0
    for t in range(len(rewards) - 1, -1, -1):
        running = rewards[t] + traj.discount * running
        q[t] = running

    return q


def score_function(theta, states, actions):
    """
    grad_theta log pi(a | s) for a batch of (state, action) pairs

    Parameters
    ----------
    theta : PolicyParams
    states : list
        State per sample
    actions : list
        OffloadDecision per sample

    Returns
    -------
    score : ndarray
        (T, FEATURE_DIM)
    log_probs : ndarray
        (T, ) log pi(a | s)
    """
    _check_dim(theta)
    phis = np.stack([s.feature_matrix for s in states])
    idx = np.array([OffloadDecision(a).index for a in actions])
    rows = np.arange(len(idx))
    logits = _logits(theta, phis)
    probs = softmax(logits, axis=1)
    score = phis[rows, idx] - np.einsum('ta,tad->td', probs, phis)
    log_probs = log_softmax(logits, axis=1)[rows, idx]

    return score, log_probs


def _flatten(batch):
    """
    States, actions and returns of every step in a batch
    """
    if not batch:
        raise InvalidParametersError('Batch has no trajectories')

    states = [s.state for traj in batch for s in traj.steps]
    actions = [s.decision for traj in batch for s in traj.steps]
    q = np.concatenate([q_estimates(traj) for traj in batch])

    return states, actions, q


def policy_gradient(batch, theta):
    """
    Step-averaged REINFORCE gradient sum(grad log pi(s, a) * Q(s, a)) / T

    Parameters
    ----------
    batch : list
        Trajectories sampled with theta
    theta : PolicyParams

    Returns
    -------
    ndarray
        (FEATURE_DIM, )
    """
    states, actions, q = _flatten(batch)
    score, _ = score_function(theta, states, actions)

    return (score * q[:, None]).mean(axis=0)


def surrogate_objective(batch, theta):
    """
    Step-averaged sum(log pi(s, a) * Q(s, a)) with Q held fixed, whose
    gradient is policy_gradient

    Parameters
    ----------
    batch : list
    theta : PolicyParams

    Returns
    -------
    float
    """
    states, actions, q = _flatten(batch)
    _, log_probs = score_function(theta, states, actions)

    return float(np.mean(log_probs * q))


def log_likelihood(states, actions, theta):
    """
    Total log-probability of the given actions, the imitation objective

    Parameters
    ----------
    states : list
    actions : list
    theta : PolicyParams

    Returns
    -------
    float
    """
    _, log_probs = score_function(theta, states, actions)

    return float(log_probs.sum())


def average_reward(batch):
    """
    Mean per-step reward over all trajectories of a batch

    Parameters
    ----------
    batch : list

    Returns
    -------
    float
    """
    if not batch:
        raise InvalidParametersError('Batch has no trajectories')

    return float(np.concatenate([traj.rewards for traj in batch]).mean())


def gradient_step(theta, grad, learning_rate, clip=None):
    """
    Gradient ascent update theta + learning_rate * grad

    Parameters
    ----------
    theta : PolicyParams
    grad : ndarray
    learning_rate : float
    clip : float, optional
        Rescale grad to this L2 norm when it is larger

    Returns
    -------
    PolicyParams
    """
    grad = np.asarray(grad, dtype=float)
    if grad.shape != theta.theta.shape:
        raise InvalidParametersError('Gradient shape {} does not match theta '
                                     '{}'.format(grad.shape,
                                                 theta.theta.shape))
    if not learning_rate > 0:
        raise InvalidParametersError('learning_rate must be > 0, got {}'
                                     .format(learning_rate))

    if clip is not None:
        norm = np.linalg.norm(grad)
        if norm > clip:
            grad = grad * (clip / norm)

    with np.errstate(over='ignore', invalid='ignore'):
        updated = theta.theta + learning_rate * grad

    if np.any(~np.isfinite(updated)):
        raise NonFiniteError('Policy update is not finite')

    return PolicyParams(updated)
