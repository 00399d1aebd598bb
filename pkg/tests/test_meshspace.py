import itertools
import math

import pytest

import torch
from green_colloc.meshspace import (
    default_offsets,
    divided_difference,
    make_grid,
    make_mesh,
    PiecewisePolynomial,
    pp_eval,
)


def _brute_force_divided_difference(points, fn):
    if len(points) == 1:
        return fn(points[0])
    return (_brute_force_divided_difference(points[1:], fn) - _brute_force_divided_difference(points[:-1], fn)) / (
        points[-1] - points[0]
    )


@pytest.mark.parametrize(
    "n,expected",
    [
        (4, [0.0, 0.25, 0.5, 0.75, 1.0]),
        (1, [0.0, 1.0]),
        (3, [0.0, 1 / 3, 2 / 3, 1.0]),
    ],
)
def test_make_mesh(n, expected):
    mesh = make_mesh(n)
    assert mesh.breakpoints.tolist() == pytest.approx(expected, abs=1e-15)
    assert mesh.h == pytest.approx(1.0 / n)
    assert mesh.breakpoints[0] == 0.0 and mesh.breakpoints[-1] == 1.0
    assert bool((mesh.breakpoints[1:] > mesh.breakpoints[:-1]).all())


@pytest.mark.parametrize("n", [0, -2, 2.5, True])
def test_make_mesh_rejects(n):
    with pytest.raises(ValueError, match="Unsupported input"):
        make_mesh(n)


@pytest.mark.parametrize(
    "n,r,offsets,j,expected",
    [
        (2, 1, None, 0, [0.0, 0.25, 0.5]),
        (2, 0, [1 / 3], None, [1 / 6, 2 / 3]),
        (1, 2, None, 0, [0.0, 0.25, 0.5, 0.75, 1.0]),
    ],
)
def test_make_grid(n, r, offsets, j, expected):
    grid = make_grid(make_mesh(n), r, offsets)
    nodes = grid.flat_nodes if j is None else grid.nodes[j]
    assert nodes.tolist() == pytest.approx(expected, abs=1e-15)
    assert grid.dim == n * (2 * r + 1)
    lo = grid.mesh.breakpoints[:-1, None]
    hi = grid.mesh.breakpoints[1:, None]
    assert bool(((grid.nodes >= lo) & (grid.nodes <= hi)).all())


def test_default_offsets():
    assert default_offsets(0) == (0.0,)
    assert default_offsets(1) == (0.0, 0.5, 1.0)
    assert default_offsets(2) == (0.0, 0.25, 0.5, 0.75, 1.0)


@pytest.mark.parametrize(
    "r,offsets",
    [
        (1, [0.0, 0.5, 0.5]),
        (1, [0.0, 0.5, 1.5]),
        (1, [0.0, 1.0]),
        (0, [-0.1]),
        (1, [0.5, 0.0, 1.0]),
    ],
)
def test_make_grid_rejects(r, offsets):
    with pytest.raises(ValueError, match="Unsupported input"):
        make_grid(make_mesh(2), r, offsets)


@pytest.mark.parametrize("r", [0, 1, 2])
def test_lagrange_cardinality(r):
    grid = make_grid(make_mesh(3), r)
    basis = grid.local_basis(torch.tensor(grid.offsets, dtype=torch.float64))
    assert torch.allclose(basis, torch.eye(grid.local_dim, dtype=torch.float64), atol=1e-13, rtol=0)


def _test_polynomial_exactness(n, r, offsets):
    torch.manual_seed(0)
    coeffs = torch.randn(2 * r + 1, dtype=torch.float64)

    def q(t):
        return sum(c * t**i for i, c in enumerate(coeffs))

    grid = make_grid(make_mesh(n), r, offsets)
    p = PiecewisePolynomial(grid, q(grid.flat_nodes))
    t = torch.linspace(0.0, 1.0, 101, dtype=torch.float64)
    assert float((pp_eval(p, t) - q(t)).abs().max()) <= 1e-12


@pytest.mark.parametrize("n", [1, 4, 7])
@pytest.mark.parametrize("r,offsets", [(0, None), (0, [0.5]), (1, None), (1, [0.1, 0.5, 0.8]), (2, None)])
def test_polynomial_exactness(n, r, offsets):
    _test_polynomial_exactness(n, r, offsets)


def test_pp_eval_examples():
    grid = make_grid(make_mesh(4), 1)
    p = PiecewisePolynomial(grid, grid.flat_nodes.clone())
    assert pp_eval(p, 0.3) == pytest.approx(0.3, abs=1e-14)

    ones = PiecewisePolynomial(grid, torch.ones(grid.dim, dtype=torch.float64))
    assert pp_eval(ones, torch.rand(17, dtype=torch.float64)).tolist() == pytest.approx([1.0] * 17, abs=1e-14)

    grid = make_grid(make_mesh(2), 1)
    cubic = PiecewisePolynomial(grid, grid.flat_nodes**3)
    # Lagrange weights at 0.1 through {0, 0.25, 0.5} are 0.48, 0.64, -0.12
    assert pp_eval(cubic, 0.1) == pytest.approx(0.015625 * 0.64 - 0.125 * 0.12, abs=1e-15)


@pytest.mark.parametrize("t", [-1e-9, 1.5])
def test_pp_eval_rejects_outside(t):
    grid = make_grid(make_mesh(2), 0)
    p = PiecewisePolynomial(grid, torch.zeros(2, dtype=torch.float64))
    with pytest.raises(ValueError, match="Unsupported input"):
        pp_eval(p, t)


def test_breakpoint_side():
    values = torch.tensor([1.0, 2.0], dtype=torch.float64)
    midpoint = PiecewisePolynomial(make_grid(make_mesh(2), 0, [0.5]), values)
    assert pp_eval(midpoint, 0.5) == 1.0
    # a node of the right subinterval only is evaluated on that subinterval
    left = PiecewisePolynomial(make_grid(make_mesh(2), 0), values)
    assert pp_eval(left, 0.5) == 2.0
    third = PiecewisePolynomial(make_grid(make_mesh(2), 0, [1 / 3]), values)
    assert pp_eval(third, 0.5) == 1.0


def test_divided_difference_examples():
    assert divided_difference([0, 1, 2], [0, 1, 4]) == pytest.approx(1.0)
    assert divided_difference([0.1, 0.4, 0.9], [3.0, 3.0, 3.0]) == 0.0
    assert divided_difference([1, 1], [1, 1], [None, 3.0]) == pytest.approx(3.0)

    points = [0.0, 0.5, 1.0]
    expected = _brute_force_divided_difference(points, math.exp)
    assert divided_difference(points, [math.exp(z) for z in points]) == pytest.approx(expected, rel=1e-13)


def test_divided_difference_rejects():
    with pytest.raises(ValueError, match="Unsupported input"):
        divided_difference([1.0, 2.0, 1.0], [1.0, 4.0, 1.0], [None, None, 2.0])
    with pytest.raises(ValueError, match="Unsupported input"):
        divided_difference([1.0, 1.0], [1.0, 1.0])
    with pytest.raises(ValueError, match="Unsupported input"):
        divided_difference([1.0, 1.0], [1.0, 1.0], [None, None])
    with pytest.raises(ValueError, match="Unsupported input"):
        divided_difference([1.0, 2.0], [1.0])


def test_confluent_consistency():
    a, b = 0.3, 0.7
    confluent = divided_difference([a, a, b], [math.exp(a), math.exp(a), math.exp(b)], [None, math.exp(a), None])

    def distinct(eps):
        points = [a, a + eps, b]
        return divided_difference(points, [math.exp(z) for z in points])

    coarse = abs(distinct(1e-5) - confluent)
    fine = abs(distinct(1e-6) - confluent)
    assert fine < coarse


def test_divided_difference_symmetry():
    torch.manual_seed(0)
    points = torch.rand(5, dtype=torch.float64).tolist()
    reference = divided_difference(points, [math.sin(3 * z) for z in points])
    permutations = list(itertools.permutations(range(5)))
    for i in torch.randperm(len(permutations))[:3].tolist():
        permuted = [points[k] for k in permutations[i]]
        value = divided_difference(permuted, [math.sin(3 * z) for z in permuted])
        assert value == pytest.approx(reference, rel=1e-10)


@pytest.mark.parametrize("r,offsets,expected", [(0, None, 1.0), (0, [0.5], 1.0), (1, None, 1.25)])
def test_lebesgue_constant(r, offsets, expected):
    for n in (2, 8):
        assert make_grid(make_mesh(n), r, offsets).lebesgue_constant() == pytest.approx(expected, abs=1e-12)


def test_nodal_polynomial_vanishes_at_nodes():
    grid = make_grid(make_mesh(4), 1)
    assert float(grid.nodal_polynomial(grid.flat_nodes).abs().max()) <= 1e-15
    t = 0.1
    assert grid.nodal_polynomial(t) == pytest.approx(0.1 * (0.1 - 0.125) * (0.1 - 0.25), rel=1e-12)
