import numpy as np
import pytest

from qsupermaps.errors import ShapeMismatchError, SolverFailureError
from qsupermaps.sdp import (
    SdpProblem,
    Status,
    hermitian_basis,
    lambda_max_problem,
    solve_or_raise,
    solve_sdp,
)

from oracles import random_hermitian, random_psd


def test_lambda_max_diagonal():
    sol = solve_sdp(lambda_max_problem(np.diag([3.0, 1.0])))
    assert sol.status is Status.OPTIMAL
    assert abs(sol.primal_value - 3) <= 1e-8
    assert np.allclose(sol.x, np.diag([1, 0]), atol=1e-6)


@pytest.mark.parametrize("n", [2, 5, 16, 64])
def test_lambda_max_random(n):
    rng = np.random.default_rng(n)
    c = random_hermitian(n, rng)
    sol = solve_sdp(lambda_max_problem(c))
    assert sol.status is Status.OPTIMAL
    assert abs(sol.primal_value - np.linalg.eigvalsh(c)[-1]) <= 1e-8
    assert sol.iterations <= 200


def test_optimal_certificates():
    rng = np.random.default_rng(1)
    c = random_hermitian(6, rng)
    cons = [(np.kron(h, np.eye(3)), float(np.trace(h).real)) for h in hermitian_basis(2)]
    sol = solve_sdp(SdpProblem.from_constraints(c, cons), tol=1e-8)
    assert sol.status is Status.OPTIMAL
    assert abs(sol.gap) <= 1e-8
    assert sol.primal_residual <= 1e-8 and sol.dual_residual <= 1e-8
    assert sol.min_eigenvalue >= -1e-8
    assert np.linalg.eigvalsh(sol.s)[0] >= -1e-8
    # weak duality at the returned point
    assert sol.dual_value >= sol.primal_value - 10 * 1e-8


def test_unitary_conjugation_invariance():
    rng = np.random.default_rng(2)
    c = random_hermitian(4, rng)
    cons = [(np.kron(np.eye(2), h), float(np.trace(h).real)) for h in hermitian_basis(2)]
    base = solve_sdp(SdpProblem.from_constraints(c, cons)).primal_value
    g = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    u, _ = np.linalg.qr(g)
    rot = [(u @ a @ u.conj().T, b) for a, b in cons]
    turned = solve_sdp(SdpProblem.from_constraints(u @ c @ u.conj().T, rot)).primal_value
    assert abs(base - turned) <= 1e-8


def test_dependent_constraints_are_dropped():
    p = SdpProblem(np.diag([2.0, 1.0]), np.array([np.eye(2), 2 * np.eye(2)]), np.array([1.0, 2.0]))
    sol = solve_sdp(p)
    assert sol.status is Status.OPTIMAL
    assert sol.dropped == (1,)
    assert sol.y[1] == 0.0
    assert abs(sol.primal_value - 2) <= 1e-8


def test_inconsistent_dependent_constraints():
    p = SdpProblem(np.eye(2), np.array([np.eye(2), 2 * np.eye(2)]), np.array([1.0, 3.0]))
    assert solve_sdp(p).status is Status.INFEASIBLE


def test_infeasible_trace():
    p = SdpProblem(np.eye(2), np.eye(2)[None], np.array([-1.0]))
    assert solve_sdp(p).status is Status.INFEASIBLE


def test_unbounded():
    p = SdpProblem(np.eye(2), np.diag([1.0, -1.0])[None], np.array([0.0]))
    assert solve_sdp(p).status is Status.UNBOUNDED


def test_solve_or_raise_reports_failure():
    with pytest.raises(SolverFailureError):
        solve_or_raise(SdpProblem(np.eye(2), np.eye(2)[None], np.array([-1.0])))


def test_max_iter_status():
    rng = np.random.default_rng(3)
    sol = solve_sdp(lambda_max_problem(random_hermitian(8, rng)), max_iter=2)
    assert sol.status is Status.MAX_ITER
    assert sol.iterations == 2


def test_non_hermitian_input_rejected():
    with pytest.raises(ShapeMismatchError):
        SdpProblem(np.array([[0, 1], [0, 0]]), np.eye(2)[None], np.array([1.0]))
    with pytest.raises(ShapeMismatchError):
        SdpProblem(np.eye(2), np.eye(3)[None], np.array([1.0]))


def test_deterministic():
    rng = np.random.default_rng(4)
    p = lambda_max_problem(random_psd(5, rng))
    a, b = solve_sdp(p), solve_sdp(p)
    assert np.array_equal(a.x, b.x) and a.iterations == b.iterations


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_hermitian_basis_orthonormal(d):
    for traceless in (False, True):
        basis = hermitian_basis(d, traceless=traceless)
        assert len(basis) == d * d - (1 if traceless else 0)
        gram = np.array([[np.trace(a @ b).real for b in basis] for a in basis])
        assert np.allclose(gram, np.eye(len(basis)))
        for b in basis:
            assert np.allclose(b, b.conj().T)
            if traceless:
                assert abs(np.trace(b)) < 1e-12
