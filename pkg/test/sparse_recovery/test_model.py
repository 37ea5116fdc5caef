import math

import numpy as np
import pytest

from sparse_recovery.core.model import (
    DomainError,
    PenaltyObjective,
    ProblemDefinitionError,
    ProblemInstance,
    envelope_gradient,
    envelope_value,
    evaluate_point,
    q_lambda,
    ratio_parameter,
)


def _objective(A, b, eps=0.0, lam=0.1, d=10.0):
    return PenaltyObjective.build(ProblemInstance(A=A, b=b, eps=eps, d=d), lam)


def _random_objective(seed, m=6, n=10, eps_scale=0.5):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n))
    b = rng.standard_normal(m) * 3.0
    return _objective(A, b, eps=eps_scale * np.linalg.norm(b), lam=0.05, d=100.0), rng


def test_envelope_zero_inside_tube():
    """
    ||Ax - b|| <= eps gives a zero envelope and a zero gradient.
    """
    A = np.eye(3)
    b = np.array([1.0, 2.0, 2.0])
    obj = _objective(A, b, eps=0.5)
    x = b + np.array([0.1, -0.2, 0.1])
    assert envelope_value(obj, x) == 0.0
    assert np.array_equal(envelope_gradient(obj, x), np.zeros(3))


def test_envelope_value_hand_computed():
    """
    eps = 0, A = I, b = (1, 0), x = (4, 4): 1/2 * 5^2.
    """
    obj = _objective(np.eye(2), np.array([1.0, 0.0]), eps=0.0)
    assert envelope_value(obj, np.array([4.0, 4.0])) == pytest.approx(12.5, rel=1e-15)


def test_envelope_matches_projection_oracle():
    """
    Envelope equals 1/2 ||Ax - P(Ax)||^2 with P the projection onto the eps-ball around b.
    """
    obj, rng = _random_objective(0)
    prob = obj.problem
    for _ in range(20):
        x = rng.standard_normal(prob.n) * 2.0
        Ax = prob.A @ x
        r = Ax - prob.b
        rn = np.linalg.norm(r)
        proj = Ax if rn <= prob.eps else prob.b + prob.eps * r / rn
        assert envelope_value(obj, x) == pytest.approx(0.5 * np.sum((Ax - proj) ** 2), abs=1e-10)


def test_gradient_with_zero_eps_is_least_squares_gradient():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((5, 7))
    b = rng.standard_normal(5)
    obj = _objective(A, b, eps=0.0)
    x = rng.standard_normal(7)
    np.testing.assert_allclose(envelope_gradient(obj, x), A.T @ (A @ x - b), rtol=1e-13)


def test_gradient_matches_finite_differences():
    """
    Central differences at step 1e-6 outside the tube.
    """
    obj, rng = _random_objective(2, eps_scale=0.1)
    prob = obj.problem
    checked = 0
    while checked < 10:
        x = rng.standard_normal(prob.n) * 2.0
        rn = np.linalg.norm(prob.A @ x - prob.b)
        if rn - prob.eps <= 1e-3:
            continue
        h = 1e-6
        fd = np.array(
            [
                (envelope_value(obj, x + h * e) - envelope_value(obj, x - h * e)) / (2 * h)
                for e in np.eye(prob.n)
            ]
        )
        g = envelope_gradient(obj, x)
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(g)
        checked += 1


def test_gradient_is_lipschitz():
    """
    ||grad h(x) - grad h(y)|| <= L ||x - y||.
    """
    obj, rng = _random_objective(3)
    for _ in range(50):
        x = rng.standard_normal(obj.problem.n) * 3.0
        y = rng.standard_normal(obj.problem.n) * 3.0
        lhs = np.linalg.norm(envelope_gradient(obj, x) - envelope_gradient(obj, y))
        assert lhs <= obj.lipschitz * np.linalg.norm(x - y) * (1 + 1e-12)


def test_q_lambda_basis_vector_and_zero():
    """
    Q(e1) = lambda when A e1 = b; Q(0) and points outside D are +inf.
    """
    obj = _objective(np.eye(3), np.array([1.0, 0.0, 0.0]), lam=0.3, d=10.0)
    assert q_lambda(obj, np.array([1.0, 0.0, 0.0])) == pytest.approx(0.3, rel=1e-15)
    assert q_lambda(obj, np.zeros(3)) == math.inf
    assert q_lambda(obj, np.array([11.0, 0.0, 0.0])) == math.inf


def test_q_lambda_accepts_points_on_the_sphere():
    obj = _objective(np.eye(2), np.array([1.0, 0.0]), d=2.0)
    x = np.array([2.0, 0.0]) * (1 + 1e-13)
    assert math.isfinite(q_lambda(obj, x))


def test_q_lambda_recomposition_and_lower_bound():
    """
    Q equals (lambda ||x||_1 + envelope) / ||x||_2 and is never below lambda.
    """
    obj, rng = _random_objective(4)
    for _ in range(30):
        x = rng.standard_normal(obj.problem.n)
        expected = (obj.lam * np.sum(np.abs(x)) + envelope_value(obj, x)) / np.linalg.norm(x)
        value = q_lambda(obj, x)
        assert value == pytest.approx(expected, rel=1e-12)
        assert value >= obj.lam
        assert ratio_parameter(obj, x) == pytest.approx(value, rel=1e-12)


def test_ratio_parameter_on_flat_vector():
    """
    x = (1, 1, 0) with zero envelope gives lambda * sqrt(2).
    """
    obj = _objective(np.eye(3), np.array([1.0, 1.0, 0.0]), lam=0.2)
    assert ratio_parameter(obj, np.array([1.0, 1.0, 0.0])) == pytest.approx(0.2 * math.sqrt(2))


@pytest.mark.parametrize("x", [np.zeros(2), np.array([20.0, 0.0])])
def test_ratio_parameter_domain_error(x):
    obj = _objective(np.eye(2), np.array([1.0, 0.0]), d=10.0)
    with pytest.raises(DomainError):
        ratio_parameter(obj, x)


def test_scale_invariance_of_ratio_part():
    """
    With eps = 0 and Ax = b the lambda-ratio part is unchanged by scaling.
    """
    x = np.array([0.5, -1.5, 2.0])
    lam = 0.01
    for t in (0.1, 0.5, 1.0):
        assert lam * np.sum(np.abs(t * x)) / np.linalg.norm(t * x) == pytest.approx(
            lam * np.sum(np.abs(x)) / np.linalg.norm(x), rel=1e-15
        )


def test_evaluate_point_agrees_with_separate_calls():
    obj, rng = _random_objective(5)
    x = rng.standard_normal(obj.problem.n)
    point = evaluate_point(obj, x)
    assert point.q == pytest.approx(q_lambda(obj, x), rel=1e-14)
    assert point.envelope == pytest.approx(envelope_value(obj, x), rel=1e-14)
    np.testing.assert_allclose(point.gradient, envelope_gradient(obj, x), rtol=1e-14)
    assert point.feasible


bad_instances = [
    {"A": np.eye(2), "b": np.ones(3), "eps": 0.0, "d": 1.0},
    {"A": np.eye(2), "b": np.ones(2), "eps": -0.1, "d": 1.0},
    {"A": np.eye(2), "b": np.ones(2), "eps": 0.0, "d": 0.0},
    {"A": np.ones(3), "b": np.ones(3), "eps": 0.0, "d": 1.0},
    {"A": np.eye(2), "b": np.ones(2), "eps": 0.0, "d": 1.0, "ground_truth": np.ones(3)},
]


@pytest.mark.parametrize("fields", bad_instances)
def test_problem_instance_rejects_bad_fields(fields):
    with pytest.raises(ProblemDefinitionError):
        ProblemInstance(**fields)


@pytest.mark.parametrize(
    "b, eps",
    [
        (np.array([0.1, 0.0]), 1.0),
        (np.array([0.3, 0.4]), 0.5),
        (np.zeros(2), 0.0),
    ],
)
def test_problem_instance_needs_b_outside_tube(b, eps):
    """
    ||b|| <= eps makes x = 0 feasible for the constraint and is rejected.
    """
    with pytest.raises(ProblemDefinitionError, match="must exceed eps"):
        ProblemInstance(A=np.eye(2), b=b, eps=eps, d=1.0)
    ProblemInstance(A=np.eye(2), b=b + 1.0, eps=eps, d=1.0)


def test_penalty_objective_lipschitz_and_lambda():
    """
    build() inflates the power-iteration estimate; with_lambda keeps L.
    """
    prob = ProblemInstance(A=np.diag([3.0, 1.0]), b=np.ones(2), eps=0.0, d=5.0)
    obj = PenaltyObjective.build(prob, 0.5)
    assert obj.lipschitz >= 9.0
    assert obj.lipschitz == pytest.approx(9.0 * 1.001, rel=1e-8)
    other = obj.with_lambda(0.25)
    assert other.lam == 0.25 and other.lipschitz == obj.lipschitz

    with pytest.raises(ProblemDefinitionError):
        PenaltyObjective.build(prob, 0.0)
    zero = ProblemInstance(A=np.zeros((2, 2)), b=np.ones(2), eps=0.0, d=1.0)
    with pytest.raises(ProblemDefinitionError, match="zero"):
        PenaltyObjective.build(zero, 0.1)
