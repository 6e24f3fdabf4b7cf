# -*- coding: utf-8 -*-
"""
Discrete optimal transport of tasks onto compute nodes: problem
construction, entropic Sinkhorn solver, exact LP reference and duality
certificate
"""
from dataclasses import dataclass, field, replace
import logging
import numpy as np
from scipy.optimize import linprog
from scipy.special import logsumexp

from OTOffload.exceptions import (EmptyProblemError, InvalidParametersError,
                                  MissingPotentialsError,
                                  SinkhornUnderflowError)
from OTOffload.model import OffloadDecision, decision_cost, normalize_cost

logger = logging.getLogger(__name__)

LOG_DOMAIN_EPSILON = 0.05


@dataclass(frozen=True)
class NodeSpec:
    """
    A compute node slot: its kind, speed and capacity weight in the
    target measure
    """
    kind: OffloadDecision
    speed_hz: float
    capacity_weight: float

    def __post_init__(self):
        object.__setattr__(self, 'kind', OffloadDecision(self.kind))
        if np.isnan(self.speed_hz) or self.speed_hz <= 0:
            raise InvalidParametersError('Node speed must be > 0, got {}'
                                         .format(self.speed_hz))
        if not np.isfinite(self.capacity_weight) or self.capacity_weight < 0:
            raise InvalidParametersError('Node capacity weight must be >= 0, '
                                         'got {}'.format(self.capacity_weight))


def default_nodes(params, capacity_weights=None):
    """
    One node per kind at the speeds in params

    Parameters
    ----------
    params : SystemParams
    capacity_weights : list | tuple, optional
        (local, edge, cloud) weights, defaults to the node speeds

    Returns
    -------
    nodes : tuple
        NodeSpec for Local, Edge and Cloud
    """
    speeds = (params.f_end_hz, params.f_edge_hz, params.f_cloud_hz)
    if capacity_weights is None:
        capacity_weights = speeds

    kinds = (OffloadDecision.LOCAL, OffloadDecision.EDGE,
             OffloadDecision.CLOUD)

    return tuple(NodeSpec(k, s, w)
                 for k, s, w in zip(kinds, speeds, capacity_weights))


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    """
    Probability weights on a finite support
    """
    weights: np.ndarray

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float).ravel()
        object.__setattr__(self, 'weights', weights)
        if weights.size == 0:
            raise EmptyProblemError('Measure support is empty')
        if np.any(~np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidParametersError('Measure weights must be finite and '
                                         '>= 0: {}'.format(weights))
        if abs(weights.sum() - 1) > 1e-9:
            raise InvalidParametersError('Measure weights must sum to 1, got '
                                         '{}'.format(weights.sum()))

    @property
    def support_size(self):
        """
        Number of support points

        Returns
        -------
        int
        """
        return self.weights.size

    @classmethod
    def from_weights(cls, weights):
        """
        Normalize nonnegative weights into a measure

        Parameters
        ----------
        weights : array-like

        Returns
        -------
        DiscreteMeasure
        """
        weights = np.asarray(weights, dtype=float)
        total = weights.sum()
        if not total > 0:
            raise InvalidParametersError('Weights must have positive mass: {}'
                                         .format(weights))

        return cls(weights / total)


@dataclass(frozen=True, eq=False)
class TransportProblem:
    """
    Entropic transport of N task masses onto M node slots
    """
    cost_matrix: np.ndarray
    source: DiscreteMeasure
    target: DiscreteMeasure
    epsilon: float

    def __post_init__(self):
        cost = np.asarray(self.cost_matrix, dtype=float)
        object.__setattr__(self, 'cost_matrix', cost)
        shape = (self.source.support_size, self.target.support_size)
        if cost.shape != shape:
            raise InvalidParametersError('Cost matrix shape {} does not match '
                                         'measure supports {}'
                                         .format(cost.shape, shape))
        if np.any(~np.isfinite(cost)) or np.any(cost < 0):
            raise InvalidParametersError('Cost matrix entries must be finite '
                                         'and >= 0')
        if not self.epsilon > 0:
            raise InvalidParametersError('epsilon must be > 0, got {}'
                                         .format(self.epsilon))

    @property
    def shape(self):
        """
        (N tasks, M nodes)

        Returns
        -------
        tuple
        """
        return self.cost_matrix.shape

    def with_target(self, target):
        """
        Copy of the problem with a new target measure

        Parameters
        ----------
        target : DiscreteMeasure

        Returns
        -------
        TransportProblem
        """
        return replace(self, target=target)


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """
    Coupling, dual potentials and convergence diagnostics of a solve
    """
    coupling: np.ndarray
    cost_matrix: np.ndarray
    dual_source: np.ndarray = None
    dual_target: np.ndarray = None
    marginal_residual: float = 0.0
    iterations_used: int = 0
    converged: bool = True
    residual_trace: np.ndarray = field(default_factory=lambda: np.zeros(0))


def build_problem(tasks, nodes, params, r_u, epsilon):
    """
    Build the task -> node transport problem

    Parameters
    ----------
    tasks : list
        Tasks to place, uniform source mass 1/N each
    nodes : list
        NodeSpec or (kind, speed, capacity_weight) tuples
    params : SystemParams
    r_u : float
        Upload rate used for Edge and Cloud costs
    epsilon : float
        Entropic regularization strength

    Returns
    -------
    TransportProblem
    """
    if not len(tasks) or not len(nodes):
        raise EmptyProblemError('Need at least one task and one node, got {} '
                                'and {}'.format(len(tasks), len(nodes)))

    nodes = [n if isinstance(n, NodeSpec) else NodeSpec(*n) for n in nodes]
    speed_field = {OffloadDecision.LOCAL: 'f_end_hz',
                   OffloadDecision.EDGE: 'f_edge_hz',
                   OffloadDecision.CLOUD: 'f_cloud_hz'}

    cost = np.empty((len(tasks), len(nodes)))
    for j, node in enumerate(nodes):
        node_params = replace(params, **{speed_field[node.kind]:
                                         node.speed_hz})
        for i, task in enumerate(tasks):
            breakdown = decision_cost(task, node.kind, node_params, r_u)
            if node_params == params:
                cost[i, j] = breakdown.normalized_cost
            else:
                cost[i, j] = normalize_cost(breakdown.delay_s,
                                            breakdown.energy_j, task, params)

    source = DiscreteMeasure(np.full(len(tasks), 1 / len(tasks)))
    target = DiscreteMeasure.from_weights([n.capacity_weight for n in nodes])

    return TransportProblem(cost, source, target, epsilon)


def _safe_log(x):
    """
    Elementwise log with log(0) = -inf and no warnings
    """
    with np.errstate(divide='ignore'):
        return np.log(x)


def _sinkhorn_linear(cost, a, b, epsilon, max_iter, tolerance):
    """
    Sinkhorn-Knopp scaling on the Gibbs kernel
    """
    kernel = np.exp(-cost / epsilon)
    u = np.ones_like(a)
    v = np.ones_like(b)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        kv = kernel @ v
        if np.any(kv[a > 0] <= 0):
            raise SinkhornUnderflowError('Row scaling underflowed at '
                                         'iteration {}, epsilon={} is too '
                                         'small for the linear domain'
                                         .format(it, epsilon))
        u = np.divide(a, kv, out=np.zeros_like(a), where=a > 0)
        ktu = kernel.T @ u
        if np.any(ktu[b > 0] <= 0):
            raise SinkhornUnderflowError('Column scaling underflowed at '
                                         'iteration {}, epsilon={} is too '
                                         'small for the linear domain'
                                         .format(it, epsilon))
        v = np.divide(b, ktu, out=np.zeros_like(b), where=b > 0)
        if np.any(~np.isfinite(u)) or np.any(~np.isfinite(v)):
            raise SinkhornUnderflowError('Scaling vectors are not finite at '
                                         'iteration {}'.format(it))

        err = np.abs(u * (kernel @ v) - a).sum()
        trace.append(err)
        if err <= tolerance:
            converged = True
            break

    coupling = u[:, None] * kernel * v[None, :]
    f = np.where(a > 0, epsilon * _safe_log(u), 0.0)
    g = np.where(b > 0, epsilon * _safe_log(v), 0.0)

    return coupling, f, g, it, converged, trace


def _sinkhorn_log(cost, a, b, epsilon, max_iter, tolerance):
    """
    Sinkhorn iterations on the dual potentials, stable for small epsilon
    """
    log_a = _safe_log(a)
    log_b = _safe_log(b)
    f = np.zeros_like(a)
    g = np.zeros_like(b)
    trace = []
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        f = epsilon * (log_a - logsumexp((g[None, :] - cost) / epsilon,
                                         axis=1))
        g = epsilon * (log_b - logsumexp((f[:, None] - cost) / epsilon,
                                         axis=0))
        log_plan = (f[:, None] + g[None, :] - cost) / epsilon
        err = np.abs(np.exp(logsumexp(log_plan, axis=1)) - a).sum()
        trace.append(err)
        if err <= tolerance:
            converged = True
            break

    coupling = np.exp((f[:, None] + g[None, :] - cost) / epsilon)
    f = np.where(a > 0, f, 0.0)
    g = np.where(b > 0, g, 0.0)

    return coupling, f, g, it, converged, trace


def sinkhorn(problem, max_iter=10000, tolerance=1e-6, log_domain=None):
    """
    Solve the entropic transport problem by alternating marginal
    projections

    Parameters
    ----------
    problem : TransportProblem
    max_iter : int
        Maximum number of (row, column) projection pairs
    tolerance : float
        Stop once the L1 row-marginal violation is <= tolerance
    log_domain : bool, optional
        Iterate on log potentials, default when epsilon < 0.05

    Returns
    -------
    TransportPlan
        converged is False when max_iter was reached first
    """
    if max_iter < 1 or not tolerance > 0:
        raise InvalidParametersError('max_iter must be >= 1 and tolerance > 0,'
                                     ' got {} and {}'
                                     .format(max_iter, tolerance))

    if log_domain is None:
        log_domain = problem.epsilon < LOG_DOMAIN_EPSILON

    a = problem.source.weights
    b = problem.target.weights
    solver = _sinkhorn_log if log_domain else _sinkhorn_linear
    coupling, f, g, it, converged, trace = solver(problem.cost_matrix, a, b,
                                                  problem.epsilon, max_iter,
                                                  tolerance)

    residual = max(np.abs(coupling.sum(axis=1) - a).max(),
                   np.abs(coupling.sum(axis=0) - b).max())
    logger.debug('Sinkhorn ({} domain) stopped after {} iterations with '
                 'residual {:.3e}'.format('log' if log_domain else 'linear',
                                          it, residual))
    if not converged:
        logger.warning('Sinkhorn did not converge in {} iterations, residual '
                       '{:.3e} > {:.1e}'.format(max_iter, trace[-1],
                                                tolerance))

    return TransportPlan(coupling, problem.cost_matrix, dual_source=f,
                         dual_target=g, marginal_residual=float(residual),
                         iterations_used=it, converged=converged,
                         residual_trace=np.array(trace))


def exact_transport(problem):
    """
    Unregularized transport plan from the Kantorovich linear program

    Parameters
    ----------
    problem : TransportProblem
        epsilon is ignored

    Returns
    -------
    TransportPlan
        Potentials are the LP equality-constraint duals
    """
    n, m = problem.shape
    a = problem.source.weights
    b = problem.target.weights
    a_eq = np.vstack([np.kron(np.eye(n), np.ones((1, m))),
                      np.kron(np.ones((1, n)), np.eye(m))])
    b_eq = np.concatenate([a, b])
    res = linprog(problem.cost_matrix.ravel(), A_eq=a_eq, b_eq=b_eq,
                  bounds=(0, None), method='highs')
    if res.status != 0:
        logger.warning('Exact transport LP failed: {}'.format(res.message))
        return TransportPlan(np.full((n, m), np.nan), problem.cost_matrix,
                             converged=False)

    coupling = np.clip(res.x.reshape(n, m), 0, None)
    duals = res.eqlin.marginals
    residual = max(np.abs(coupling.sum(axis=1) - a).max(),
                   np.abs(coupling.sum(axis=0) - b).max())

    return TransportPlan(coupling, problem.cost_matrix,
                         dual_source=duals[:n], dual_target=duals[n:],
                         marginal_residual=float(residual),
                         iterations_used=int(res.nit), converged=True)


def primal_cost(plan, problem):
    """
    Transport cost of the coupling

    Parameters
    ----------
    plan : TransportPlan
    problem : TransportProblem

    Returns
    -------
    float
    """
    return float(np.sum(problem.cost_matrix * plan.coupling))


def dual_objective(plan, problem):
    """
    Kantorovich dual value of the plan's potentials

    Parameters
    ----------
    plan : TransportPlan
    problem : TransportProblem

    Returns
    -------
    float
    """
    if plan.dual_source is None or plan.dual_target is None:
        raise MissingPotentialsError('Plan carries no dual potentials')

    a = problem.source.weights
    b = problem.target.weights

    return float(np.sum(np.where(a > 0, plan.dual_source * a, 0.0))
                 + np.sum(np.where(b > 0, plan.dual_target * b, 0.0)))


def duality_gap(plan, problem):
    """
    Primal cost minus dual objective

    Parameters
    ----------
    plan : TransportPlan
    problem : TransportProblem

    Returns
    -------
    float
    """
    return primal_cost(plan, problem) - dual_objective(plan, problem)


def certify(plan, problem, slack=1e-4):
    """
    Check the entropic duality certificate
    0 <= primal - dual <= epsilon * log(N * M) + slack

    Parameters
    ----------
    plan : TransportPlan
    problem : TransportProblem
    slack : float
        Allowance for the solver tolerance

    Returns
    -------
    bool
    """
    n, m = problem.shape
    gap = duality_gap(plan, problem)
    bound = problem.epsilon * np.log(n * m) + slack

    return bool(plan.converged and -1e-9 <= gap <= bound)


def plan_to_decisions(plan, node_kinds):
    """
    Round a coupling to one decision per task

    The node with the largest coupling mass wins; ties go to the lower cost
    entry, then to the fixed order Local < Edge < Cloud.

    Parameters
    ----------
    plan : TransportPlan
    node_kinds : list
        OffloadDecision of each coupling column

    Returns
    -------
    decisions : list
        OffloadDecision per task
    """
    kinds = [OffloadDecision(k) for k in node_kinds]
    decisions = []
    for mass, cost in zip(plan.coupling, plan.cost_matrix):
        tied = np.flatnonzero(mass >= mass.max() - 1e-12)
        best = min(tied, key=lambda j: (round(cost[j], 12), int(kinds[j]), j))
        decisions.append(kinds[best])

    return decisions
