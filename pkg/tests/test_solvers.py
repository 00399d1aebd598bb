import pytest

import torch
from green_colloc import config
from green_colloc.convlab.problems import get_solution, manufactured_problem
from green_colloc.functions import sup_norm
from green_colloc.kernelop import apply_K, get_kernel
from green_colloc.meshspace import make_grid, make_mesh
from green_colloc.solvers import (
    basis_function,
    iterate,
    iterate_modified,
    kernel_basis_matrix,
    METHODS,
    solve_collocation,
    solve_modified,
    SolverFailure,
)
from pytools.convergence import estimate_order_of_convergence


def _solve_all(problem, grid):
    collocation = solve_collocation(problem, grid)
    modified = solve_modified(problem, grid)
    return {
        "collocation": collocation,
        "iterated": iterate(problem, collocation),
        "modified": modified,
        "iterated_modified": iterate_modified(problem, modified),
    }


def _errors(kernel, solution, r, n_list, methods=METHODS, offsets=None):
    problem = manufactured_problem(get_kernel(kernel), get_solution(solution))
    errors = {method: [] for method in methods}
    for n in n_list:
        grid = make_grid(make_mesh(n), r, offsets)
        collocation = solve_collocation(problem, grid) if {"collocation", "iterated"} & set(methods) else None
        modified = solve_modified(problem, grid) if {"modified", "iterated_modified"} & set(methods) else None
        results = {
            "collocation": lambda: collocation,
            "iterated": lambda: iterate(problem, collocation),
            "modified": lambda: modified,
            "iterated_modified": lambda: iterate_modified(problem, modified),
        }
        for method in methods:
            errors[method].append(sup_norm(results[method]().solution - problem.exact_solution, grid))
    return errors


@pytest.mark.parametrize("kernel", ["bvp_green", "abs_exp", "rank_one"])
def test_exact_in_space(kernel):
    problem = manufactured_problem(get_kernel(kernel), get_solution("linear"))
    grid = make_grid(make_mesh(4), 1)
    for method, result in _solve_all(problem, grid).items():
        assert result.method == method
        assert sup_norm(result.solution - problem.exact_solution, grid) <= 1e-11, method


@pytest.mark.parametrize("r", [0, 1])
def test_zero_kernel(r):
    phi = get_solution("sin_pi")
    problem = manufactured_problem(get_kernel("zero"), phi)
    grid = make_grid(make_mesh(8), r)
    results = _solve_all(problem, grid)
    expected = phi.evaluate(grid.flat_nodes)
    assert torch.allclose(results["collocation"].nodal.coefficients, expected, atol=1e-15, rtol=0)
    for method in ("iterated", "modified", "iterated_modified"):
        assert sup_norm(results[method].solution - phi, grid) <= 1e-14, method


def test_kernel_basis_matrix():
    kernel = get_kernel("bvp_green")
    grid = make_grid(make_mesh(4), 1)
    a = kernel_basis_matrix(kernel, grid)
    assert a.shape == (grid.dim, grid.dim)
    # the basis sums to one, so the rows sum to (K1)(tau) = tau (1 - tau) / 2
    tau = grid.flat_nodes
    assert torch.allclose(a.sum(dim=1), tau * (1 - tau) / 2, atol=1e-14, rtol=0)


def test_iterated_agrees_at_nodes():
    problem = manufactured_problem(get_kernel("bvp_green"), get_solution("sin_pi"))
    grid = make_grid(make_mesh(8), 1)
    collocation = solve_collocation(problem, grid)
    iterated = iterate(problem, collocation)
    nodes = grid.flat_nodes
    assert torch.allclose(iterated.solution(nodes), collocation.solution(nodes), atol=1e-9, rtol=0)


@pytest.mark.parametrize("kernel", ["bvp_green", "abs_exp"])
def test_modified_nodal_identity(kernel):
    problem = manufactured_problem(get_kernel(kernel), get_solution("exp"))
    grid = make_grid(make_mesh(4), 1)
    modified = solve_modified(problem, grid)
    nodes = grid.flat_nodes
    assert torch.allclose(modified.solution(nodes), modified.nodal.coefficients, atol=1e-8, rtol=0)


def test_modified_equation_residual():
    problem = manufactured_problem(get_kernel("bvp_green"), get_solution("sin_pi"))
    grid = make_grid(make_mesh(4), 1)
    phi = solve_modified(problem, grid).solution
    s = torch.linspace(0.0, 1.0, 11, dtype=torch.float64)
    nodal = phi(grid.flat_nodes)
    interpolate = grid.basis_matrix(s)
    # K_n^M phi = P_n K phi + K P_n phi - P_n K P_n phi
    p_kphi = interpolate @ apply_K(problem.kernel, phi, grid.flat_nodes)
    k_pphi = apply_K(problem.kernel, basis_function(grid), s) @ nodal
    p_k_pphi = interpolate @ (kernel_basis_matrix(problem.kernel, grid) @ nodal)
    assert torch.allclose(phi(s) - p_kphi - k_pphi + p_k_pphi, problem.f(s), atol=1e-9, rtol=0)


@pytest.mark.parametrize("method,target", [("collocation", 3), ("iterated", 4)])
def test_collocation_orders(method, target):
    n_list = [8, 16, 32]
    errors = _errors("bvp_green", "sin_pi", 1, n_list, methods=(method,))[method]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    order = estimate_order_of_convergence([1.0 / n for n in n_list], errors)[1]
    assert order == pytest.approx(target, abs=0.3), errors


@pytest.mark.parametrize("method,target", [("modified", 4), ("iterated_modified", 5)])
def test_modified_orders(method, target):
    n_list = [4, 8, 16]
    errors = _errors("bvp_green", "sin_pi", 1, n_list, methods=(method,))[method]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    order = estimate_order_of_convergence([1.0 / n for n in n_list], errors)[1]
    assert order >= target - 0.3, errors


def test_r0_midpoint_orders():
    n_list = [8, 16, 32]
    errors = _errors("bvp_green", "sin_pi", 0, n_list, methods=("collocation", "iterated"), offsets=[0.5])
    h = [1.0 / n for n in n_list]
    assert estimate_order_of_convergence(h, errors["collocation"])[1] == pytest.approx(1, abs=0.3)
    assert estimate_order_of_convergence(h, errors["iterated"])[1] == pytest.approx(2, abs=0.3)


@pytest.mark.parametrize("method,target", [("modified", 3), ("iterated_modified", 4)])
def test_r0_midpoint_modified_orders(method, target):
    n_list = [8, 16, 32, 64]
    errors = _errors("bvp_green", "sin_pi", 0, n_list, methods=(method,), offsets=[0.5])[method]
    assert all(b < a for a, b in zip(errors, errors[1:]))
    order = estimate_order_of_convergence([1.0 / n for n in n_list[-3:]], errors[-3:])[1]
    assert order >= target - 0.3, errors


def test_iterated_beats_collocation():
    errors = _errors("abs_exp", "exp", 1, [8], methods=METHODS)
    assert errors["iterated"][0] < errors["collocation"][0]
    assert errors["iterated_modified"][0] < errors["modified"][0]


def test_kernel_evaluations_recorded():
    problem = manufactured_problem(get_kernel("bvp_green"), get_solution("sin_pi"))
    grid = make_grid(make_mesh(4), 1)
    collocation = solve_collocation(problem, grid)
    assert collocation.kernel_evaluations > 0
    assert solve_modified(problem, grid).kernel_evaluations > collocation.kernel_evaluations


def test_cond_threshold_failure():
    problem = manufactured_problem(get_kernel("bvp_green"), get_solution("sin_pi"))
    grid = make_grid(make_mesh(4), 1)
    with config.patch({"solver.cond_threshold": 0.5}):
        with pytest.raises(SolverFailure, match="condition estimate"):
            solve_collocation(problem, grid)


def test_reconstruction_failure():
    problem = manufactured_problem(get_kernel("bvp_green"), get_solution("sin_pi"))
    grid = make_grid(make_mesh(4), 1)
    with config.patch({"solver.reconstruction_tolerance": -1.0}):
        with pytest.raises(SolverFailure, match="reconstruction"):
            solve_modified(problem, grid)
    with config.patch({"solver.reconstruction_tolerance": -1.0, "solver.check_reconstruction": False}):
        solve_modified(problem, grid)


def test_iterate_requires_matching_method():
    problem = manufactured_problem(get_kernel("bvp_green"), get_solution("sin_pi"))
    grid = make_grid(make_mesh(2), 1)
    modified = solve_modified(problem, grid)
    with pytest.raises(ValueError, match="Unsupported input"):
        iterate(problem, modified)
    with pytest.raises(ValueError, match="Unsupported input"):
        iterate_modified(problem, solve_collocation(problem, grid))


def test_counterexample_ratio():
    problem = manufactured_problem(get_kernel("rank_one"), get_solution("linear"))
    for n in (4, 8):
        grid = make_grid(make_mesh(n), 0, [1 / 3])
        collocation = solve_collocation(problem, grid)
        iterated = iterate(problem, collocation)
        ratio = sup_norm(iterated.solution - problem.exact_solution, grid) / sup_norm(
            collocation.solution - problem.exact_solution, grid
        )
        assert ratio == pytest.approx(1 / 3, abs=1e-9)
