import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from robustcs.core_model import HuberParams, SensingProblem, robust_grad
from robustcs.linalg_kernels import (NotPositiveDefiniteError, QSpec, _cholesky,
                                     build_cached_solver, cached_solve, spectral_bound)


def dense(phi, mu, qspec):
    return mu * phi.T @ phi + qspec.matrix(phi.shape[1])


def test_spectral_bound_examples():
    assert spectral_bound(np.eye(6)).lambda_max == pytest.approx(1.0)
    assert spectral_bound(np.diag([1.0, 2.0])).lambda_max == pytest.approx(4.0, rel=1e-8)
    zero = spectral_bound(np.zeros((3, 5)))
    assert zero.lambda_max == 0.0 and zero.is_zero


@pytest.mark.parametrize("shape", [(20, 50), (50, 20), (1, 7)])
def test_spectral_bound_matches_eigensolver(shape):
    phi = np.random.default_rng(0).standard_normal(shape)
    sb = spectral_bound(phi)
    assert sb.lambda_max == pytest.approx(np.linalg.eigvalsh(phi.T @ phi)[-1], rel=1e-6)
    assert sb.iterations_used <= 10000
    assert spectral_bound(phi).lambda_max == sb.lambda_max  # seeded


def test_gradient_lipschitz_bound():
    rng = np.random.default_rng(1)
    phi = rng.standard_normal((30, 60))
    prob = SensingProblem(phi, 4.0 * rng.standard_normal(30))
    p = HuberParams.from_threshold(1.0)
    L = 2.0 * spectral_bound(phi).lambda_max
    violations = 0
    for _ in range(1000):
        a, b = rng.standard_normal((2, 60)) * rng.uniform(0.01, 5.0)
        lhs = np.linalg.norm(robust_grad(a, prob, p) - robust_grad(b, prob, p))
        violations += lhs > L * np.linalg.norm(a - b)
    assert violations == 0


def test_sherman_morrison_gamma_inverts_q():
    c = np.random.default_rng(2).standard_normal(9)
    qs = QSpec(1.7, (0.6, c))
    qinv = qs.apply_inverse(np.eye(9))
    np.testing.assert_allclose(qs.matrix(9) @ qinv, np.eye(9), atol=1e-10)
    # the coefficient as printed in the source does not invert Q
    printed = 1.7 ** -2 * (1 / 0.6 + c @ c / 1.7)
    wrong = np.eye(9) / 1.7 - printed * np.outer(c, c)
    assert np.abs(qs.matrix(9) @ wrong - np.eye(9)).max() > 1e-3


def test_cached_solver_degenerate_cases():
    rng = np.random.default_rng(3)
    phi = rng.standard_normal((4, 6))
    q = rng.standard_normal(6)
    np.testing.assert_allclose(cached_solve(build_cached_solver(phi, 0.0, QSpec(1.0)), q), q)
    np.testing.assert_allclose(
        cached_solve(build_cached_solver(np.zeros((4, 6)), 2.0, QSpec(2.5)), q), q / 2.5)
    np.testing.assert_array_equal(cached_solve(build_cached_solver(phi, 1.0, QSpec(1.0)),
                                               np.zeros(6)), 0.0)


@pytest.mark.parametrize("m, n", [(8, 20), (20, 8), (10, 10)])
@pytest.mark.parametrize("rank_one", [False, True])
def test_cached_solve_matches_dense(m, n, rank_one):
    rng = np.random.default_rng(m * n)
    phi = rng.standard_normal((m, n))
    qs = QSpec(3.0, (1.5, rng.standard_normal(n)) if rank_one else None)
    solver = build_cached_solver(phi, 2.0, qs)
    assert solver.mode == ("woodbury" if m < n else "direct")
    H = dense(phi, 2.0, qs)
    q = rng.standard_normal(n)
    x = cached_solve(solver, q)
    np.testing.assert_allclose(x, np.linalg.solve(H, q), rtol=1e-10, atol=1e-12)
    assert np.linalg.norm(H @ x - q) <= 1e-10 * np.linalg.norm(q)
    Q = rng.standard_normal((n, 3))
    np.testing.assert_allclose(cached_solve(solver, Q), np.linalg.solve(H, Q), rtol=1e-10,
                               atol=1e-12)
    assert np.array_equal(cached_solve(solver, q), x)


def test_factor_reconstructs_p():
    rng = np.random.default_rng(4)
    phi = rng.standard_normal((8, 20))
    qs = QSpec(3.0)
    s = build_cached_solver(phi, 2.0, qs)
    P = np.eye(8) + 2.0 * phi @ phi.T / 3.0
    assert np.linalg.norm(s.factor @ s.factor.T - P) <= 1e-10 * np.linalg.norm(P)


def test_errors():
    phi = np.ones((3, 5))
    s = build_cached_solver(phi, 1.0, QSpec(1.0))
    with pytest.raises(ValueError):
        cached_solve(s, np.ones(4))
    with pytest.raises(ValueError):
        build_cached_solver(phi, 1.0, QSpec(1.0, (1.0, np.ones(4))))
    with pytest.raises(ValueError):
        build_cached_solver(phi, -1.0, QSpec(1.0))
    with pytest.raises(ValueError):
        QSpec(0.0)
    with pytest.raises(ValueError):
        QSpec(1.0, (0.0, np.ones(2)))
    with pytest.raises(NotPositiveDefiniteError) as err:
        _cholesky(np.diag([1.0, 2.0, -1.0, 4.0]))
    assert err.value.pivot == 3


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**31), m=st.integers(1, 12), n=st.integers(1, 12),
       mu=st.floats(0.01, 10), rho1=st.floats(0.1, 10), rho2=st.floats(0.1, 10))
def test_lemma_solve_property(seed, m, n, mu, rho1, rho2):
    rng = np.random.default_rng(seed)
    phi = rng.standard_normal((m, n))
    qs = QSpec(rho1, (rho2, rng.standard_normal(n)))
    H = dense(phi, mu, qs)
    q = rng.standard_normal(n)
    x = cached_solve(build_cached_solver(phi, mu, qs), q)
    assert np.linalg.norm(H @ x - q) <= 1e-9 * np.linalg.cond(H) * np.linalg.norm(q)
