from src.lq_recovery.errors import BudgetExceededError, DomainError, NumericalFailure
from src.lq_recovery.guarantee import certify
from src.lq_recovery.harness import gen_gaussian, gen_sparse
from src.lq_recovery.options import MatrixEnsemble, SignalDistribution, SolverOptions
from src.lq_recovery.ric import RicOracle
from src.lq_recovery.solver import irls_lq, irls_lq_denoise, l0_oracle, null_space_probe
import math
import numpy as np
import pytest


def pinned_gaussian_case():
    A = gen_gaussian(20, 40, 20240, MatrixEnsemble.GAUSSIAN_IID)
    x = gen_sparse(40, 3, 4020, SignalDistribution.GAUSSIAN)
    return A, x, A @ x


def pinned_certified_case():
    A = gen_gaussian(24, 32, 2432, MatrixEnsemble.ROW_ORTHONORMAL)
    x = gen_sparse(32, 1, 3224, SignalDistribution.RADEMACHER)
    return A, x, A @ x


def relative_error(x_hat, x):
    return np.linalg.norm(x_hat - x) / np.linalg.norm(x)


def test_irls_lq_square_system():
    y = np.array([1.5, -2.0, 0.25])
    result = irls_lq(np.eye(3), y, 0.5, logging=True)
    assert np.array_equal(result.x_hat, y)
    assert result.converged
    assert result.residual2 == 0.0
    assert result.log and "Square" in result.log[0]["text"]


def test_irls_lq_breaks_the_symmetric_saddle():
    result = irls_lq([[1.0, 1.0]], [1.0], 0.5)
    assert result.converged
    assert sorted(result.x_hat.tolist()) == pytest.approx([0.0, 1.0], abs=1e-6)
    assert result.objective == pytest.approx(1.0, abs=1e-4)
    assert result.residual2 <= 1e-12
    # same seed, same answer
    again = irls_lq([[1.0, 1.0]], [1.0], 0.5)
    assert np.array_equal(again.x_hat, result.x_hat)


def test_irls_lq_recovers_a_sparse_vector():
    A, x, y = pinned_gaussian_case()
    solution = l0_oracle(A, y, kmax=3, count_matches=True)
    assert solution.k == 3
    assert solution.matches == 1
    assert np.allclose(solution.x, x, atol=1e-9)

    result = irls_lq(A, y, 0.5, logging=True)
    assert result.converged
    assert relative_error(result.x_hat, x) <= 1e-6
    assert result.residual2 <= 1e-9
    trace = result.objective_trace
    assert len(trace) >= 2
    assert all(later <= earlier * (1 + 1e-9) + 1e-12 for earlier, later in zip(trace, trace[1:]))
    assert result.eps_final == SolverOptions().eps_floor
    assert all(set(entry) == {"text", "context"} for entry in result.log)


def test_irls_lq_q_equal_one():
    A, x, y = pinned_gaussian_case()
    result = irls_lq(A, y, 1.0)
    assert result.residual2 <= 1e-9
    assert result.objective == pytest.approx(np.abs(result.x_hat).sum())


def test_irls_lq_refusals():
    with pytest.raises(NumericalFailure) as excinfo:
        irls_lq([[1.0, 1.0], [2.0, 2.0]], [1.0, 2.0], 0.5)
    assert excinfo.value.exit_code == 4
    with pytest.raises(DomainError):
        irls_lq([[1.0, 1.0]], [1.0, 2.0], 0.5)
    with pytest.raises(DomainError):
        irls_lq([[1.0, 1.0]], [1.0], 0.0)


def test_irls_lq_budget_exhaustion_is_not_an_error():
    A, _, y = pinned_gaussian_case()
    result = irls_lq(A, y, 0.5, SolverOptions(max_outer=2, max_inner=2))
    assert not result.converged
    assert result.residual2 <= 1e-9


def test_irls_lq_decays_eps_without_a_stall():
    A, _, y = pinned_gaussian_case()
    result = irls_lq(A, y, 0.5, SolverOptions(max_outer=3, max_inner=1), logging=True)
    assert not result.converged
    assert result.eps_final == 0.125
    assert len(result.objective_trace) == 4
    assert sum("ran out of inner steps" in entry["text"] for entry in result.log) == 3


def test_irls_lq_denoise_degenerate():
    result = irls_lq_denoise(np.eye(3), [0.3, 0.4, 0.0], 0.5, eta=0.5)
    assert result.degenerate
    assert result.x_hat.tolist() == [0.0, 0.0, 0.0]
    assert result.objective == 0.0
    with pytest.raises(DomainError):
        irls_lq_denoise(np.eye(3), [0.3, 0.4, 0.0], 0.5, eta=0.0)


def test_irls_lq_denoise_calibrates_the_residual():
    y = np.array([3.0, -1.0, 0.5, 2.0])
    for q in (0.5, 1.0):
        result = irls_lq_denoise(np.eye(4), y, q, eta=1.0)
        assert not result.degenerate
        assert 0.99 <= result.residual2 <= 1.0 + 1e-6


def test_irls_lq_denoise_is_continuous_at_zero_noise():
    A, _, y = pinned_gaussian_case()
    exact = irls_lq(A, y, 0.5)
    denoised = irls_lq_denoise(A, y, 0.5, eta=1e-6)
    assert denoised.residual2 <= 1e-6 * (1 + 1e-6)
    assert np.linalg.norm(denoised.x_hat - exact.x_hat) <= 1e-3


def test_l0_oracle():
    y = np.array([0.0, 2.0, 0.0, -1.0])
    solution = l0_oracle(np.eye(4), y, kmax=3)
    assert solution.k == 2
    assert solution.support == (1, 3)
    assert np.allclose(solution.x, y)

    solution = l0_oracle(np.eye(4), np.zeros(4), kmax=3)
    assert solution.k == 0
    assert solution.x.tolist() == [0.0] * 4

    A = np.array([[1.0, 0.0, 1.0], [0.0, 1.0, 0.0]])
    solution = l0_oracle(A, [1.0, 0.0], kmax=2, count_matches=True)
    assert solution.k == 1
    assert solution.support == (0,)
    assert solution.matches == 2

    assert l0_oracle(np.eye(3), [1.0, 1.0, 1.0], kmax=2) is None


def test_l0_oracle_budget():
    A = np.random.default_rng(0).standard_normal((5, 40))
    with pytest.raises(BudgetExceededError):
        l0_oracle(A, np.ones(5), kmax=10, budget=1000)
    with pytest.raises(DomainError):
        l0_oracle(A, np.ones(5), kmax=41)


def test_null_space_probe_trivial_null_space():
    report = null_space_probe(np.eye(3), [1.0, 0.0, 0.0], 0.5, trials=10, radius=1.0, seed=0)
    assert report.trivial_null_space
    assert report.violations == 0
    assert report.null_dim == 0


def test_null_space_probe_duplicate_columns():
    report = null_space_probe(
        [[1.0, 1.0]],
        [1.0, 0.0],
        0.5,
        trials=100,
        radius=math.sqrt(2),
        seed=7,
        directions=[[-1.0, 1.0]],
    )
    assert not report.trivial_null_space
    assert report.null_dim == 1
    assert report.trials == 200
    assert report.violations == 0
    # full transfer of the mass to the duplicate column ties the objective
    assert report.near_violations >= 1


def test_certified_instance_end_to_end():
    A, x, y = pinned_certified_case()
    certificate = certify(RicOracle(A), k=1, q=0.5, max_order=4)
    assert certificate.satisfied
    assert certificate.sound

    solution = l0_oracle(A, y, kmax=1, count_matches=True)
    assert solution.k == 1
    assert solution.matches == 1
    assert np.allclose(solution.x, x, atol=1e-9)

    report = null_space_probe(A, x, 0.5, trials=10_000, radius=1.0, seed=1)
    assert report.violations == 0
    assert report.null_dim == 8

    result = irls_lq(A, y, 0.5)
    assert relative_error(result.x_hat, x) <= 1e-6
