import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import gmm_instance
from robustcs.core_model import HuberParams, SensingProblem, huber_rho
from robustcs.regpath import (_ENGINES, PathConfig, criterion_value, estimate_epsilon, lambda_max,
                              select_lambda, solver_names, write_path_csv)
from robustcs.solvers import (MultiTaskProblem, SolverOptions, solve_admm_robust,
                              sum_constraint)

C1 = HuberParams.from_threshold(1.0)
TIGHT = SolverOptions(abs_tol=1e-9, rel_tol=1e-9, max_iter=100000)
PATH_TIGHT = SolverOptions(abs_tol=1e-7, rel_tol=1e-7, max_iter=100000)


def test_lambda_max_examples():
    prob = SensingProblem(np.eye(2), np.array([3.0, -1.0]))
    assert lambda_max(prob, C1, "l2") == 3.0
    assert lambda_max(prob, C1, "huber") == 1.0
    assert lambda_max(prob, C1, "l1") == 1.0
    small = SensingProblem(np.random.default_rng(0).standard_normal((5, 7)),
                           np.array([0.1, -0.5, 0.9, 0.0, 0.3]))
    assert lambda_max(small, C1, "huber") == lambda_max(small, C1, "l2")
    assert lambda_max(SensingProblem(np.eye(3), np.zeros(3)), C1) == 0.0
    with pytest.raises(ValueError):
        lambda_max(prob, C1, "l3")


def test_lambda_max_round_trip():
    prob = SensingProblem(np.eye(2), np.array([10.0, 0.5]))
    assert lambda_max(prob, C1) == 1.0
    np.testing.assert_array_equal(solve_admm_robust(prob, 1.01, C1).x, 0.0)
    assert np.any(solve_admm_robust(prob, 0.9, C1).x != 0)


@pytest.mark.parametrize("solver", sorted(set(solver_names()) - {"affine"}))
def test_zero_solution_boundary(solver):
    prob, _, _ = gmm_instance(1)
    params = HuberParams.from_threshold(0.05)
    if solver.startswith("mt-"):
        prob = MultiTaskProblem(prob.phi, np.column_stack([prob.y, 0.5 * prob.y]))
    loss = {"cs": "l2", "l1": "l1"}.get(solver, "huber")
    lmax = lambda_max(prob, params, loss)
    opts = SolverOptions()
    solve = _ENGINES[solver].solve
    cache = _ENGINES[solver].cache(prob.phi, opts)
    above = solve(prob, 1.01 * lmax, params, opts, cache)
    assert np.abs(above.x).max() <= opts.abs_tol
    below = solve(prob, 0.9 * lmax, params, opts, cache)
    assert np.any(below.x != 0)
    # the path starts at lambda_max with the exact zero solution
    res = select_lambda(prob, params, solver, PathConfig(epsilon=1e12), opts)
    assert res.lambda_star == lmax
    np.testing.assert_array_equal(res.solution.x, 0.0)


def test_criterion_examples():
    for kind in ("huber", "l1", "l2"):
        assert criterion_value(np.zeros(4), C1, kind) == 0.0
    assert criterion_value([0.5, 2.0], C1, "huber") == pytest.approx(1.625)
    assert criterion_value([3.0, -4.0], C1, "l2") == 25.0
    assert criterion_value([3.0, -4.0], C1, "l1") == 7.0
    with pytest.raises(ValueError):
        criterion_value([1.0], C1, "max")


def test_criterion_scalar_oracle():
    r = np.random.default_rng(2).standard_normal(200) * 3
    p = HuberParams.from_threshold(1.3)
    total = 0.0
    for v in r:
        total += 0.5 * v * v if abs(v) <= 1.3 else 1.3 * abs(v) - 0.5 * 1.3 ** 2
    assert criterion_value(r, p, "huber") == pytest.approx(total, rel=1e-12)


def test_epsilon_examples():
    assert estimate_epsilon(C1, 50, 1e-12) < 1e-20
    assert estimate_epsilon(C1, 50, 0.0) == 0.0
    assert estimate_epsilon(HuberParams.quadratic(), 40, 1.0) == pytest.approx(20.0)
    assert estimate_epsilon(HuberParams.from_threshold(1e9), 40, 1.0) == pytest.approx(20.0)
    assert estimate_epsilon(C1, 10, 2.0, "l1") == pytest.approx(10 * 2 * np.sqrt(2 / np.pi))
    assert estimate_epsilon(C1, 10, 2.0, "l2") == pytest.approx(40.0)
    with pytest.raises(ValueError):
        estimate_epsilon(C1, 0, 1.0)


def test_epsilon_monte_carlo():
    n = np.random.default_rng(3).standard_normal(1_000_000)
    mc = 7 * np.mean(huber_rho(n, C1))
    assert estimate_epsilon(C1, 7, 1.0) == pytest.approx(mc, rel=1e-2)


def test_epsilon_mixture_monte_carlo():
    rng = np.random.default_rng(4)
    scale = np.where(rng.random(1_000_000) < 0.1, 10.0, 1.0) * 0.3
    n = scale * rng.standard_normal(scale.size)
    p = HuberParams.from_threshold(0.5)
    mc = 12 * np.mean(huber_rho(n, p))
    est = estimate_epsilon(p, 12, 0.3, contamination=0.1, kappa=100.0)
    assert est == pytest.approx(mc, rel=1e-2)


@settings(max_examples=40, deadline=None)
@given(c=st.floats(0.05, 20), sigma=st.floats(0.01, 10))
def test_epsilon_bounded_by_quadratic(c, sigma):
    e = estimate_epsilon(HuberParams.from_threshold(c), 1, sigma)
    assert 0 <= e <= 0.5 * sigma * sigma * (1 + 1e-12)


def test_path_config_validation():
    for bad in ({"epsilon": 0.0}, {"epsilon": 1.0, "grid_points": 1},
                {"epsilon": 1.0, "decades": 0}, {"epsilon": 1.0, "bisect_rel_width": 0},
                {"epsilon": 1.0, "criterion": "max"}):
        with pytest.raises(ValueError):
            PathConfig(**bad)
    prob, _, _ = gmm_instance(0)
    with pytest.raises(ValueError):
        select_lambda(prob, C1, "newton", PathConfig(1.0))


def test_loose_budget_returns_zero():
    prob, _, _ = gmm_instance(0)
    eps = criterion_value(prob.y, C1, "huber")
    res = select_lambda(prob, C1, "admm", PathConfig(epsilon=eps))
    assert res.lambda_star == lambda_max(prob, C1) and res.met
    np.testing.assert_array_equal(res.solution.x, 0.0)
    assert len(res.records) == 1


def test_noiseless_exact_recovery():
    rng = np.random.default_rng(5)
    m, n, k = 40, 80, 5
    phi = rng.standard_normal((m, n)) / np.sqrt(m)
    x = np.zeros(n)
    x[rng.choice(n, k, replace=False)] = rng.choice([-1, 1], k) * rng.uniform(1, 2, k)
    prob = SensingProblem(phi, phi @ x)
    res = select_lambda(prob, C1, "admm", PathConfig(epsilon=1e-8, decades=6), TIGHT)
    assert res.met
    assert np.linalg.norm(res.solution.x - x) <= 1e-2 * np.linalg.norm(x)


def test_unreachable_budget_not_met():
    prob, _, _ = gmm_instance(0)
    res = select_lambda(prob, C1, "admm", PathConfig(epsilon=1e-30, decades=1, grid_points=4))
    assert not res.met
    assert res.lambda_star == pytest.approx(res.records[-1].lam)
    assert len(res.records) == 4


@pytest.mark.parametrize("solver", ["admm", "cs", "l1", "fista"])
def test_path_monotone_and_selected(solver):
    prob, _, sigma = gmm_instance(6, m=60, n=120, k=8)
    params = HuberParams.from_threshold(1.345 * sigma)
    kind = {"cs": "l2", "l1": "l1"}.get(solver, "huber")
    noise_budget = criterion_value(prob.y - prob.phi @ solve_admm_robust(
        prob, 1e-3, params, TIGHT).x, params, kind) * 3
    res = select_lambda(prob, params, solver, PathConfig(epsilon=noise_budget), PATH_TIGHT)
    assert res.met
    grid = [r for r in res.records if np.any(np.isclose(r.lam, res.grid, rtol=1e-12))]
    crit = [r.criterion for r in sorted(grid, key=lambda r: -r.lam)]
    l1 = [r.l1_norm for r in sorted(grid, key=lambda r: -r.lam)]
    assert all(a >= b - 1e-8 * max(1.0, a) for a, b in zip(crit, crit[1:]))
    assert all(a <= b + 1e-8 * max(1.0, b) for a, b in zip(l1, l1[1:]))
    assert [r.lam for r in res.records] == sorted((r.lam for r in res.records), reverse=True)
    sel = [r for r in res.records if r.lam == res.lambda_star][0]
    assert sel.criterion <= noise_budget
    assert res.n_factorizations == (0 if solver == "fista" else 1)


def test_bisection_matches_dense_grid():
    prob, _, sigma = gmm_instance(9, m=60, n=120, k=8)
    params = HuberParams.from_threshold(1.345 * sigma)
    lmax = lambda_max(prob, params)

    def crit(lam):
        x = solve_admm_robust(prob, lam, params, PATH_TIGHT).x
        return criterion_value(prob.y - prob.phi @ x, params, "huber")

    eps = crit(0.05 * lmax)
    res = select_lambda(prob, params, "admm", PathConfig(epsilon=eps, bisect_rel_width=1e-2),
                        PATH_TIGHT)
    # dense oracle: steps of 0.1% around the returned value
    window = res.lambda_star * np.exp(np.linspace(0.03, -0.03, 61))
    ok = np.array([crit(lam) <= eps for lam in window])
    crossing = window[np.argmax(ok)]
    assert crossing / (1 + 1e-2) <= res.lambda_star <= crossing * (1 + 2e-3)


def test_multitask_path():
    prob, _, sigma = gmm_instance(3)
    params = HuberParams.from_threshold(1.345 * sigma)
    mt = MultiTaskProblem(prob.phi, np.column_stack([prob.y, prob.y]))
    res = select_lambda(mt, params, "mt-admm", PathConfig(epsilon=2 * 0.5 * prob.m * sigma ** 2))
    assert res.solution.x.shape == (prob.n, 2)
    assert res.n_factorizations == 1


def test_nested_and_affine_paths_share_one_factorization():
    prob, x_true, sigma = gmm_instance(4)
    params = HuberParams.from_threshold(1.345 * sigma)
    cfg = PathConfig(epsilon=0.5 * prob.m * sigma ** 2 * 5, grid_points=6)
    res = select_lambda(prob, params, "nested", cfg)
    assert res.n_factorizations == 1
    c = sum_constraint(float(np.sum(x_true)), prob.n)
    res = select_lambda(prob, params, "affine", cfg, c=c)
    assert res.n_factorizations == 1


def test_write_path_csv(tmp_path):
    prob, _, _ = gmm_instance(0)
    res = select_lambda(prob, C1, "admm", PathConfig(epsilon=1.0, grid_points=5))
    path = tmp_path / "path.csv"
    write_path_csv(res, path)
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["lambda", "criterion", "l1_norm", "nnz", "iterations", "seconds"]
    assert len(rows) == len(res.records) + 1
    assert float(rows[1][0]) == res.records[0].lam
    assert open(path, "rb").read().count(b"\r\n") == len(rows)
