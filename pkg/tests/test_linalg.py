import pytest

import torch
from green_colloc import config
from green_colloc.linalg import linear_solve, LinearSystem, SingularSystemError, SolverFailure


def test_identity():
    b = torch.tensor([1.0, -2.0, 3.0], dtype=torch.float64)
    coefficients, cond = linear_solve(LinearSystem(torch.eye(3, dtype=torch.float64), b))
    assert torch.equal(coefficients, b)
    assert cond == pytest.approx(1.0)


def test_diagonal():
    matrix = torch.diag(torch.tensor([2.0, 4.0], dtype=torch.float64))
    coefficients, cond = linear_solve(LinearSystem(matrix, torch.tensor([1.0, 1.0], dtype=torch.float64)))
    assert coefficients.tolist() == pytest.approx([0.5, 0.25], abs=1e-15)
    assert cond == pytest.approx(2.0)


def test_random_system():
    torch.manual_seed(0)
    matrix = torch.eye(50, dtype=torch.float64) + 0.1 * torch.randn(50, 50, dtype=torch.float64)
    expected = torch.randn(50, dtype=torch.float64)
    coefficients, cond = linear_solve(LinearSystem(matrix, matrix @ expected))
    assert torch.allclose(coefficients, expected, atol=1e-12, rtol=0)
    exact = float(torch.linalg.cond(matrix, p=1))
    assert cond <= exact * (1 + 1e-10)
    assert cond >= exact / 10


def test_singular():
    with pytest.raises(SingularSystemError, match="zero pivot"):
        linear_solve(LinearSystem(torch.zeros(2, 2, dtype=torch.float64), torch.ones(2, dtype=torch.float64)))


def test_ill_conditioned():
    matrix = torch.diag(torch.tensor([1.0, 1e-14], dtype=torch.float64))
    with pytest.raises(SolverFailure, match="condition estimate") as excinfo:
        linear_solve(LinearSystem(matrix, torch.ones(2, dtype=torch.float64)))
    assert not isinstance(excinfo.value, SingularSystemError)


def test_cond_threshold_patch():
    matrix = torch.diag(torch.tensor([2.0, 4.0], dtype=torch.float64))
    with config.patch({"solver.cond_threshold": 1.5}):
        with pytest.raises(SolverFailure):
            linear_solve(LinearSystem(matrix, torch.ones(2, dtype=torch.float64)))


@pytest.mark.parametrize(
    "matrix,rhs",
    [
        (torch.ones(2, 3, dtype=torch.float64), torch.ones(2, dtype=torch.float64)),
        (torch.eye(2, dtype=torch.float64), torch.ones(3, dtype=torch.float64)),
        (torch.tensor([[1.0, float("nan")], [0.0, 1.0]], dtype=torch.float64), torch.ones(2, dtype=torch.float64)),
    ],
)
def test_rejects(matrix, rhs):
    with pytest.raises(ValueError, match="Unsupported input"):
        LinearSystem(matrix, rhs)
