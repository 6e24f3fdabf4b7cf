# -*- coding: utf-8 -*-
"""
Transport problem construction, Sinkhorn solver and certificate tests
"""
import numpy as np
import pytest

from OTOffload.exceptions import (EmptyProblemError, InvalidParametersError,
                                  MissingPotentialsError,
                                  SinkhornUnderflowError)
from OTOffload.model import OffloadDecision, SystemParams, Task
from OTOffload.transport import (DiscreteMeasure, NodeSpec, TransportPlan,
                                 TransportProblem, build_problem, certify,
                                 default_nodes, dual_objective, duality_gap,
                                 exact_transport, plan_to_decisions,
                                 primal_cost, sinkhorn)

LOCAL, EDGE, CLOUD = (OffloadDecision.LOCAL, OffloadDecision.EDGE,
                      OffloadDecision.CLOUD)
PARAMS = SystemParams()
R_U = 2e7


def make_problem(cost, a=None, b=None, epsilon=0.1):
    """
    TransportProblem with uniform marginals unless given
    """
    cost = np.asarray(cost, dtype=float)
    n, m = cost.shape
    a = np.full(n, 1 / n) if a is None else a
    b = np.full(m, 1 / m) if b is None else b
    return TransportProblem(cost, DiscreteMeasure(a), DiscreteMeasure(b),
                            epsilon)


def random_problem(rng, n, m, epsilon):
    """
    Random costs in [0, 1] with Dirichlet target weights
    """
    return make_problem(rng.uniform(0, 1, (n, m)),
                        b=rng.dirichlet(np.ones(m)), epsilon=epsilon)


def tasks(n):
    """
    n tasks of growing size
    """
    return [Task(i, (i + 1) * 1e9, (i + 1) * 8e5) for i in range(n)]


def test_singleton_problem():
    """
    One task on one node
    """
    problem = build_problem(tasks(1), [(LOCAL, 1e9, 1.0)], PARAMS, R_U, 0.1)
    assert problem.shape == (1, 1)
    assert np.allclose(problem.source.weights, [1])
    assert np.allclose(problem.target.weights, [1])


def test_capacity_target():
    """
    1/10/100 GHz capacity weights normalize to 1/111, 10/111, 100/111
    """
    problem = build_problem(tasks(4), default_nodes(PARAMS), PARAMS, R_U,
                            0.1)
    assert np.allclose(problem.target.weights, np.array([1, 10, 100]) / 111)
    assert np.allclose(problem.source.weights, 0.25)
    assert np.all(problem.cost_matrix[:, 0] == 1)
    assert np.all(problem.cost_matrix >= 0)


def test_capacity_override():
    """
    Explicit capacity weights replace the speeds
    """
    nodes = default_nodes(PARAMS, capacity_weights=(1, 1, 2))
    problem = build_problem(tasks(2), nodes, PARAMS, R_U, 0.1)
    assert np.allclose(problem.target.weights, [0.25, 0.25, 0.5])


def test_faster_node_is_cheaper():
    """
    A node faster than the system edge speed lowers the edge cost
    """
    nodes = [NodeSpec(EDGE, PARAMS.f_edge_hz, 1),
             NodeSpec(EDGE, 4 * PARAMS.f_edge_hz, 1)]
    problem = build_problem(tasks(3), nodes, PARAMS, R_U, 0.1)
    assert np.all(problem.cost_matrix[:, 1] < problem.cost_matrix[:, 0])


def test_empty_problem():
    """
    No tasks or no nodes
    """
    with pytest.raises(EmptyProblemError):
        build_problem([], default_nodes(PARAMS), PARAMS, R_U, 0.1)

    with pytest.raises(EmptyProblemError):
        build_problem(tasks(2), [], PARAMS, R_U, 0.1)


def test_problem_validation():
    """
    Shape, sign and epsilon checks
    """
    a = DiscreteMeasure([0.5, 0.5])
    with pytest.raises(InvalidParametersError):
        TransportProblem(np.ones((2, 3)), a, a, 0.1)

    with pytest.raises(InvalidParametersError):
        TransportProblem(-np.ones((2, 2)), a, a, 0.1)

    with pytest.raises(InvalidParametersError):
        TransportProblem(np.ones((2, 2)), a, a, 0)

    with pytest.raises(InvalidParametersError):
        DiscreteMeasure([0.5, 0.6])

    with pytest.raises(InvalidParametersError):
        DiscreteMeasure([1.5, -0.5])


@pytest.mark.parametrize('k', [0.0, 0.5, 3.0])
@pytest.mark.parametrize('epsilon', [1.0, 0.1, 0.01, 0.001])
def test_singleton_sinkhorn(k, epsilon):
    """
    Marginals force a unit coupling and zero gap
    """
    problem = make_problem([[k]], epsilon=epsilon)
    plan = sinkhorn(problem)
    assert plan.converged
    assert plan.coupling == pytest.approx(np.ones((1, 1)))
    assert dual_objective(plan, problem) == pytest.approx(k, abs=1e-9)
    assert certify(plan, problem)


def test_two_by_two():
    """
    Zero-cost diagonal takes all the mass
    """
    problem = make_problem([[0, 1], [1, 0]], epsilon=0.01)
    plan = sinkhorn(problem)
    assert plan.converged
    assert np.allclose(np.diag(plan.coupling), 0.5, atol=1e-6)
    assert plan.coupling[0, 1] + plan.coupling[1, 0] < 1e-3
    assert primal_cost(plan, problem) < 1e-3
    assert 0 <= duality_gap(plan, problem) <= 0.01 * np.log(4) + 1e-4


def test_primal_cost():
    """
    Inner product of coupling and cost
    """
    problem = make_problem([[2, 9], [9, 4]])
    plan = TransportPlan(np.diag([0.5, 0.5]), problem.cost_matrix)
    assert primal_cost(plan, problem) == pytest.approx(3)

    zero = make_problem(np.zeros((3, 2)))
    assert primal_cost(sinkhorn(zero), zero) == 0


def test_missing_potentials():
    """
    Dual objective needs potentials
    """
    problem = make_problem([[2, 9], [9, 4]])
    plan = TransportPlan(np.diag([0.5, 0.5]), problem.cost_matrix)
    with pytest.raises(MissingPotentialsError):
        dual_objective(plan, problem)


@pytest.mark.parametrize('epsilon', [0.5, 0.1, 0.04])
def test_marginal_feasibility(epsilon):
    """
    Converged plans match both marginals
    """
    rng = np.random.default_rng(3)
    for _ in range(20):
        problem = random_problem(rng, 6, 3, epsilon)
        plan = sinkhorn(problem, max_iter=100000, tolerance=1e-8)
        assert plan.converged
        assert np.all(plan.coupling >= 0)
        assert np.allclose(plan.coupling.sum(axis=1),
                           problem.source.weights, atol=1e-8)
        assert np.allclose(plan.coupling.sum(axis=0),
                           problem.target.weights, atol=1e-8)
        assert plan.marginal_residual <= 1e-8


@pytest.mark.parametrize('epsilon', [0.2, 0.03])
def test_residual_monotone(epsilon):
    """
    Row violation never grows between iterations
    """
    rng = np.random.default_rng(4)
    for _ in range(10):
        problem = random_problem(rng, 8, 3, epsilon)
        plan = sinkhorn(problem, tolerance=1e-10)
        trace = plan.residual_trace
        assert len(trace) == plan.iterations_used
        assert np.all(np.diff(trace) <= 1e-12)


def test_weak_duality_and_certificate():
    """
    dual <= primal <= dual + epsilon * log(N * M) on random 3x3 problems
    """
    rng = np.random.default_rng(5)
    for _ in range(100):
        problem = random_problem(rng, 3, 3, 0.1)
        plan = sinkhorn(problem)
        assert plan.converged
        assert dual_objective(plan, problem) <= primal_cost(plan, problem)
        assert certify(plan, problem)


def test_gap_shrinks_with_epsilon():
    """
    Smaller regularization, smaller duality gap
    """
    cost = [[0, 1, 1], [1, 0, 1], [1, 1, 0], [1, 1, 0]]
    gaps = []
    for epsilon in (0.1, 0.01, 0.001):
        problem = make_problem(cost, b=[0.25, 0.25, 0.5], epsilon=epsilon)
        plan = sinkhorn(problem)
        assert plan.converged
        assert certify(plan, problem)
        gaps.append(duality_gap(plan, problem))

    assert gaps[0] > gaps[1] > gaps[2] >= 0


def test_exact_oracle():
    """
    Sinkhorn at epsilon = 1e-3 recovers the exact transport cost
    """
    rng = np.random.default_rng(6)
    for _ in range(50):
        n = int(rng.integers(1, 5))
        problem = random_problem(rng, n, 3, 1e-3)
        exact = exact_transport(problem)
        assert exact.converged
        plan = sinkhorn(problem, max_iter=50000)
        assert primal_cost(plan, problem) \
            == pytest.approx(primal_cost(exact, problem), abs=5e-2)


def test_exact_duals():
    """
    LP potentials close the duality gap
    """
    problem = make_problem([[2, 9], [9, 4]])
    plan = exact_transport(problem)
    assert np.allclose(plan.coupling, np.diag([0.5, 0.5]))
    assert primal_cost(plan, problem) == pytest.approx(3)
    assert duality_gap(plan, problem) == pytest.approx(0, abs=1e-8)


def test_log_and_linear_agree():
    """
    Both domains find the same plan
    """
    rng = np.random.default_rng(7)
    problem = random_problem(rng, 5, 3, 0.1)
    linear = sinkhorn(problem, tolerance=1e-10, log_domain=False)
    log = sinkhorn(problem, tolerance=1e-10, log_domain=True)
    assert np.allclose(linear.coupling, log.coupling, atol=1e-8)
    assert dual_objective(linear, problem) \
        == pytest.approx(dual_objective(log, problem), abs=1e-6)


def test_linear_underflow():
    """
    Tiny epsilon in the linear domain underflows the kernel
    """
    problem = make_problem([[1, 2], [3, 1]], epsilon=1e-4)
    with pytest.raises(SinkhornUnderflowError):
        sinkhorn(problem, log_domain=False)

    assert sinkhorn(problem).converged


def test_non_convergence_is_reported():
    """
    Hitting max_iter returns a flagged plan
    """
    rng = np.random.default_rng(8)
    problem = random_problem(rng, 6, 3, 0.05)
    plan = sinkhorn(problem, max_iter=1, tolerance=1e-14)
    assert not plan.converged
    assert plan.iterations_used == 1
    assert not certify(plan, problem)

    with pytest.raises(InvalidParametersError):
        sinkhorn(problem, max_iter=0)


def test_permutation_equivariance():
    """
    Permuting tasks permutes coupling rows
    """
    rng = np.random.default_rng(9)
    problem = random_problem(rng, 5, 3, 0.1)
    perm = rng.permutation(5)
    permuted = TransportProblem(problem.cost_matrix[perm], problem.source,
                                problem.target, problem.epsilon)
    plan = sinkhorn(problem, tolerance=1e-10)
    plan_p = sinkhorn(permuted, tolerance=1e-10)
    assert np.allclose(plan.coupling[perm], plan_p.coupling, atol=1e-9)


def test_with_target():
    """
    Replacing the target keeps costs and source
    """
    problem = make_problem(np.ones((2, 3)))
    target = DiscreteMeasure([0.2, 0.3, 0.5])
    new = problem.with_target(target)
    assert new.target is target
    assert new.source is problem.source
    assert np.array_equal(new.cost_matrix, problem.cost_matrix)


def test_plan_to_decisions():
    """
    Row argmax with cost and node-order tie-breaks
    """
    coupling = np.array([[0.0, 0.0, 1.0],
                         [0.2, 0.2, 0.6],
                         [0.5, 0.5, 0.0],
                         [0.5, 0.5, 0.0]])
    cost = np.array([[1.0, 1.0, 1.0],
                     [1.0, 1.0, 1.0],
                     [1.0, 0.4, 0.9],
                     [1.0, 1.0, 0.9]])
    plan = TransportPlan(coupling, cost)
    decisions = plan_to_decisions(plan, [LOCAL, EDGE, CLOUD])
    assert decisions == [CLOUD, CLOUD, EDGE, LOCAL]


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
