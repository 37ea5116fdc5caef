import numpy as np
import pytest
from pydantic import ValidationError

from sparse_recovery.core.model import PenaltyObjective, ProblemInstance
from sparse_recovery.core.prox import ProxCase, ProxSelection, soft_threshold
from sparse_recovery.solvers import (
    InfeasibleStartError,
    LambdaSchedule,
    SolverConfig,
    SolverVariant,
    Termination,
    admm_l1_warm_start,
    backtrack_bound,
    noisy_warm_start,
    ppga_step,
    solve,
    stationarity_residual,
)
from sparse_recovery.solvers import ppga
from sparse_recovery.solvers.config import resolve_step_bounds


def _identity_objective(lam=0.1, d=10.0):
    prob = ProblemInstance(A=np.eye(5), b=np.array([2.0, 0.0, 0.0, 0.0, 0.0]), eps=0.0, d=d)
    return PenaltyObjective.build(prob, lam)


def _random_objective(seed, m=8, n=16, lam=0.05, eps_scale=0.0, d=1e7):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    x_true = np.zeros(n)
    x_true[rng.choice(n, size=2, replace=False)] = rng.choice([-1.0, 1.0], size=2) * rng.uniform(
        1.0, 3.0, size=2
    )
    b = A @ x_true
    prob = ProblemInstance(A=A, b=b, eps=eps_scale * np.linalg.norm(b), d=d, ground_truth=x_true)
    obj = PenaltyObjective.build(prob, lam)
    x0 = admm_l1_warm_start(A, b, iters=50)
    return obj, x0


def test_fixed_point_has_zero_residual():
    """
    A = I, b = e1, eps = 0, lambda = 0.1: x = e1 is fixed by one PPGA step.
    """
    prob = ProblemInstance(A=np.eye(2), b=np.array([1.0, 0.0]), eps=0.0, d=10.0)
    obj = PenaltyObjective.build(prob, 0.1)
    alpha = 0.999 / obj.lipschitz
    x = np.array([1.0, 0.0])
    np.testing.assert_allclose(ppga_step(obj, x, alpha), x, atol=1e-13)
    assert stationarity_residual(obj, x, alpha) <= 1e-13


def test_ppga_step_rejects_bad_arguments():
    obj = _identity_objective()
    with pytest.raises(ValueError, match="alpha"):
        ppga_step(obj, np.ones(5), 0.0)
    with pytest.raises(ValueError):
        ppga_step(obj, np.zeros(5), 0.5)


@pytest.mark.parametrize("variant", list(SolverVariant))
def test_variants_recover_one_sparse_identity_problem(variant):
    """
    A = I, b = 2 e1, eps = 0: Q >= lambda with equality at b, so b is the minimizer.
    """
    obj = _identity_objective()
    x0 = np.array([1.5, 0.3, 0.0, 0.0, 0.0])
    result = solve(obj, x0, SolverConfig(), variant)
    assert result.termination == Termination.REL_TOL
    np.testing.assert_allclose(result.x_final, obj.problem.b, atol=1e-6)
    assert result.objective_trace[-1] == pytest.approx(obj.lam, rel=1e-8)
    assert result.stationarity_residual <= 1e-6


@pytest.mark.parametrize("variant", [SolverVariant.PPGA, SolverVariant.PPGA_ML])
def test_monotone_variants_never_increase_objective(variant):
    obj, x0 = _random_objective(0)
    result = solve(obj, x0, SolverConfig(max_iter=300), variant)
    trace = result.objective_trace
    assert np.all(np.isfinite(trace))
    assert np.all(np.diff(trace) <= 1e-10 * np.abs(trace[:-1]))


@pytest.mark.parametrize("window", [1, 4, 8])
def test_nonmonotone_variant_stays_below_window_maximum(window):
    """
    Every accepted value is at most the maximum of the previous N + 1 values.
    """
    obj, x0 = _random_objective(1)
    result = solve(obj, x0, SolverConfig(window=window, max_iter=300), SolverVariant.PPGA_NL)
    trace = result.objective_trace
    for k in range(1, len(trace)):
        reference = trace[max(0, k - 1 - window) : k].max()
        assert trace[k] <= reference * (1 + 1e-12)


def test_traces_are_consistent():
    obj, x0 = _random_objective(2)
    result = solve(obj, x0, SolverConfig(max_iter=50), SolverVariant.PPGA_NL, keep_iterates=True)
    k = result.iterations
    assert 1 <= k <= 50
    assert len(result.objective_trace) == k + 1
    assert len(result.step_trace) == k
    assert len(result.prox_case_trace) == k
    assert len(result.backtrack_trace) == k
    assert result.iterates.shape == (k + 1, obj.problem.n)
    np.testing.assert_array_equal(result.iterates[-1], result.x_final)
    assert set(result.prox_case_trace) <= {"I", "II", "III", "IV"}
    np.testing.assert_array_equal(result.lambda_trace, np.full(k, obj.lam))


def test_solutions_stay_in_the_ball():
    obj, x0 = _random_objective(3, d=2.0)
    x0 = x0 * min(1.0, 1.5 / np.linalg.norm(x0))
    result = solve(obj, x0, SolverConfig(max_iter=200), SolverVariant.PPGA_NL, keep_iterates=True)
    assert np.all(np.linalg.norm(result.iterates, axis=1) <= 2.0 * (1 + 1e-12))


def test_backtracks_stay_within_bound():
    """
    With M = d every iterate lies in the level set, so no iteration needs more
    reductions than the worst-case bound.
    """
    obj, x0 = _random_objective(4)
    cfg = SolverConfig(max_iter=300)
    _, alpha_hi = resolve_step_bounds(cfg, obj.lipschitz, SolverVariant.PPGA_NL)
    bound = backtrack_bound(obj, cfg, alpha_hi, obj.problem.d)
    result = solve(obj, x0, cfg, SolverVariant.PPGA_NL)
    assert result.backtrack_trace.max() <= bound


def test_ratio_parameter_never_drops_below_lambda():
    """
    ||x||_1 >= ||x||_2, so every C_k = Q(x^k) is at least lambda and gamma = C_k / lambda >= 1.
    """
    obj, x0 = _random_objective(10)
    for variant in SolverVariant:
        trace = solve(obj, x0, SolverConfig(max_iter=200), variant).objective_trace
        assert np.all(trace >= obj.lam * (1 - 1e-12))


@pytest.mark.parametrize("variant", [SolverVariant.PPGA_ML, SolverVariant.PPGA_NL])
def test_accepted_steps_lie_between_reduced_lower_clamp_and_upper_clamp(variant):
    obj, x0 = _random_objective(11)
    cfg = SolverConfig(max_iter=300)
    alpha_lo, alpha_hi = resolve_step_bounds(cfg, obj.lipschitz, variant)
    bound = backtrack_bound(obj, cfg, alpha_hi, obj.problem.d)
    steps = solve(obj, x0, cfg, variant).step_trace
    assert np.all(steps <= alpha_hi)
    assert np.all(steps >= alpha_lo * cfg.eta**bound * (1 - 1e-12))


def test_monotone_line_search_gives_sufficient_decrease():
    """
    PPGA_ML: Q(x^{k+1}) <= Q(x^k) - a/2 ||x^{k+1} - x^k||^2 at every step.
    """
    obj, x0 = _random_objective(12)
    cfg = SolverConfig(a=1e-4, max_iter=300)
    result = solve(obj, x0, cfg, SolverVariant.PPGA_ML, keep_iterates=True)
    trace = result.objective_trace
    moves = np.sum(np.diff(result.iterates, axis=0) ** 2, axis=1)
    assert np.all(trace[1:] <= trace[:-1] - 0.5 * cfg.a * moves + 1e-12)


def test_step_lengths_are_summable():
    """
    On a converged run the last tenth of the steps adds at most 1% of the total path length.
    """
    obj, x0 = _random_objective(13)
    result = solve(obj, x0, SolverConfig(), SolverVariant.PPGA_ML, keep_iterates=True)
    assert result.termination == Termination.REL_TOL
    lengths = np.linalg.norm(np.diff(result.iterates, axis=0), axis=1)
    tail = lengths[-max(1, len(lengths) // 10) :]
    assert tail.sum() <= 0.01 * lengths.sum()


def test_backtrack_bound_values():
    """
    A = I with the default alpha_hi = 10 / L and M = 0: ceil(log2(10) + 1) = 5.
    """
    obj = _identity_objective()
    cfg = SolverConfig()
    assert backtrack_bound(obj, cfg, 10.0 / obj.lipschitz, 0.0) == 5
    assert backtrack_bound(obj, cfg, 0.5 / obj.lipschitz, 0.0) == 1
    with pytest.raises(ValueError):
        backtrack_bound(obj, cfg, 0.0, 1.0)
    with pytest.raises(ValueError):
        backtrack_bound(obj, cfg, 1.0, -1.0)


@pytest.mark.parametrize("x0", [np.zeros(5), np.array([20.0, 0.0, 0.0, 0.0, 0.0])])
@pytest.mark.parametrize("variant", list(SolverVariant))
def test_infeasible_start_is_rejected(x0, variant):
    with pytest.raises(InfeasibleStartError):
        solve(_identity_objective(d=10.0), x0, SolverConfig(), variant)


def test_ppga_rejects_step_at_or_above_inverse_lipschitz():
    obj = _identity_objective()
    cfg = SolverConfig(alpha_hi=2.0 / obj.lipschitz)
    with pytest.raises(ValueError, match="below 1/L"):
        solve(obj, np.ones(5), cfg, SolverVariant.PPGA)


def test_nonmonotone_needs_a_window():
    obj = _identity_objective()
    with pytest.raises(ValueError, match="window"):
        solve(obj, np.ones(5), SolverConfig(window=0), SolverVariant.PPGA_NL)


def test_monotone_variant_ignores_configured_window():
    """PPGA_ML forces N = 0, so the configured window makes no difference."""
    obj, x0 = _random_objective(5)
    first = solve(obj, x0, SolverConfig(window=2, max_iter=100), SolverVariant.PPGA_ML)
    second = solve(obj, x0, SolverConfig(window=7, max_iter=100), SolverVariant.PPGA_ML)
    np.testing.assert_array_equal(first.x_final, second.x_final)


def test_solve_is_deterministic():
    obj, x0 = _random_objective(6)
    first = solve(obj, x0, SolverConfig(max_iter=100), SolverVariant.PPGA_NL)
    second = solve(obj, x0, SolverConfig(max_iter=100), SolverVariant.PPGA_NL)
    np.testing.assert_array_equal(first.x_final, second.x_final)
    np.testing.assert_array_equal(first.objective_trace, second.objective_trace)


def test_max_iter_terminates():
    obj, x0 = _random_objective(7)
    result = solve(obj, x0, SolverConfig(max_iter=3, rel_tol=0.0), SolverVariant.PPGA)
    assert result.iterations == 3
    assert result.termination == Termination.MAX_ITER


def test_lambda_schedule_values():
    schedule = LambdaSchedule(factor=0.5, every=10, freeze_after=30)
    assert schedule.lambda_at(1.0, 0) == 1.0
    assert schedule.lambda_at(1.0, 9) == 1.0
    assert schedule.lambda_at(1.0, 10) == 0.5
    assert schedule.lambda_at(1.0, 25) == 0.25
    assert schedule.lambda_at(1.0, 1000) == 0.125


@pytest.mark.parametrize(
    "fields", [{"factor": 0.0}, {"factor": 1.5}, {"every": 0}, {"freeze_after": -1}]
)
def test_lambda_schedule_validation(fields):
    with pytest.raises(ValidationError):
        LambdaSchedule(**fields)


def test_lambda_schedule_is_applied_during_solve():
    obj, x0 = _random_objective(8, lam=0.2)
    cfg = SolverConfig(
        max_iter=6, rel_tol=0.0, lambda_schedule=LambdaSchedule(factor=0.5, every=2)
    )
    result = solve(obj, x0, cfg, SolverVariant.PPGA)
    assert result.iterations == 6
    np.testing.assert_allclose(result.lambda_trace, 0.2 * np.array([1, 1, 0.5, 0.5, 0.25, 0.25]))


@pytest.mark.parametrize(
    "fields",
    [
        {"eta": 1.5},
        {"eta": 0.0},
        {"a": -1.0},
        {"window": -1},
        {"max_iter": 0},
        {"alpha_lo": 1.0, "alpha_hi": 0.5},
        {"alpha_hi": -1.0},
    ],
)
def test_solver_config_validation(fields):
    with pytest.raises(ValidationError):
        SolverConfig(**fields)


def test_default_step_bounds():
    cfg = SolverConfig()
    assert resolve_step_bounds(cfg, 2.0, SolverVariant.PPGA_NL) == pytest.approx((5e-9, 5.0))
    assert resolve_step_bounds(cfg, 2.0, SolverVariant.PPGA) == pytest.approx((0.4995, 0.4995))
    assert cfg.iteration_cap(16) == 8000


def test_admm_identity_converges_to_soft_threshold():
    """
    With A = I the l1 problem is solved by soft thresholding b.
    """
    b = np.array([1.0, -0.05, 0.5])
    z = admm_l1_warm_start(np.eye(3), b, weight=0.08, iters=200)
    np.testing.assert_allclose(z, soft_threshold(b, 0.08), atol=1e-10)


def test_admm_zero_measurements_give_zero():
    rng = np.random.default_rng(9)
    z = admm_l1_warm_start(rng.standard_normal((4, 8)), np.zeros(4))
    assert np.array_equal(z, np.zeros(8))


def test_admm_wide_path_matches_tall_path():
    """
    Padding A with zero rows leaves A^T A and A^T b unchanged but switches the
    factorization to the n x n system.
    """
    rng = np.random.default_rng(10)
    A = rng.standard_normal((5, 12))
    b = rng.standard_normal(5)
    A_tall = np.vstack([A, np.zeros((7, 12))])
    b_tall = np.concatenate([b, np.zeros(7)])
    wide = admm_l1_warm_start(A, b, iters=40)
    tall = admm_l1_warm_start(A_tall, b_tall, iters=40)
    np.testing.assert_allclose(wide, tall, atol=1e-9)


@pytest.mark.parametrize("kwargs", [{"weight": 0.0}, {"rho": -1.0}, {"iters": 0}])
def test_admm_argument_checks(kwargs):
    with pytest.raises(ValueError):
        admm_l1_warm_start(np.eye(2), np.ones(2), **kwargs)


def test_noisy_warm_start_inside_tube_is_unchanged():
    prob = ProblemInstance(A=np.eye(2), b=np.array([1.0, 0.0]), eps=0.5, d=10.0)
    x = np.array([1.2, 0.1])
    np.testing.assert_array_equal(noisy_warm_start(prob, x), x)


def test_noisy_warm_start_lands_on_tube_boundary():
    """
    For full-row-rank A the returned point has residual exactly eps.
    """
    rng = np.random.default_rng(11)
    A = rng.standard_normal((4, 9))
    b = rng.standard_normal(4) * 5.0
    prob = ProblemInstance(A=A, b=b, eps=0.1, d=1e7)
    x = noisy_warm_start(prob, np.zeros(9))
    assert np.linalg.norm(A @ x - b) == pytest.approx(0.1, rel=1e-6)


def test_failed_line_search_returns_best_iterate(monkeypatch):
    """
    The nonmonotone rule accepts (1.5, 0) after (1, 0) although its value is
    higher; when the next line search fails, (1, 0) is returned.
    """
    prob = ProblemInstance(A=np.eye(2), b=np.array([1.0, 0.0]), eps=0.0, d=10.0)
    obj = PenaltyObjective.build(prob, 0.1)
    scripted = [np.array([1.0, 0.0]), np.array([1.5, 0.0])]

    def scripted_step(_obj, _point, _alpha):
        x = scripted.pop(0) if scripted else np.zeros(2)
        return ProxSelection(ProxCase.I, None, x)

    monkeypatch.setattr(ppga, "_prox_gradient_step", scripted_step)
    cfg = SolverConfig(window=4, backtrack_cap=2)
    result = solve(obj, np.array([2.0, 0.0]), cfg, SolverVariant.PPGA_NL)
    assert result.termination == Termination.LINE_SEARCH_FAIL
    np.testing.assert_allclose(result.objective_trace, [0.35, 0.1, 0.275 / 1.5], rtol=1e-12)
    np.testing.assert_array_equal(result.x_final, [1.0, 0.0])
