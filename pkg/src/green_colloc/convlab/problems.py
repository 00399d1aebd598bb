import functools
import math
from typing import Dict

import torch

from green_colloc.functions import EvaluableFunction
from green_colloc.kernelop import FredholmProblem, GreensKernel, k_image

__all__ = [
    "catalog_solutions",
    "get_solution",
    "manufactured_problem",
]

# closed-form derivatives kept for smoothness_norm up to this order
_DERIVATIVES = 8


def _sin_pi() -> EvaluableFunction:
    pi = math.pi
    derivatives = [
        lambda t, k=k: pi**k * torch.sin(pi * t + k * pi / 2) for k in range(1, _DERIVATIVES + 1)
    ]
    return EvaluableFunction(lambda t: torch.sin(pi * t), (), "sin_pi", derivatives)


def _poly_cubic() -> EvaluableFunction:
    zero = lambda t: torch.zeros_like(t)
    derivatives = [lambda t: 3 * t**2, lambda t: 6 * t, lambda t: torch.full_like(t, 6.0)]
    derivatives += [zero] * (_DERIVATIVES - 3)
    return EvaluableFunction(lambda t: t**3 + 1, (), "poly_cubic", derivatives)


def _exp() -> EvaluableFunction:
    return EvaluableFunction(torch.exp, (), "exp", [torch.exp] * _DERIVATIVES)


def _linear() -> EvaluableFunction:
    zero = lambda t: torch.zeros_like(t)
    derivatives = [lambda t: torch.full_like(t, 4.0)] + [zero] * (_DERIVATIVES - 1)
    return EvaluableFunction(lambda t: 4 * t, (), "linear", derivatives)


def _zero() -> EvaluableFunction:
    zero = lambda t: torch.zeros_like(t)
    return EvaluableFunction(zero, (), "zero", [zero] * _DERIVATIVES)


@functools.cache
def catalog_solutions() -> Dict[str, EvaluableFunction]:
    solutions = (_sin_pi(), _poly_cubic(), _exp(), _linear(), _zero())
    return {phi.description: phi for phi in solutions}


def get_solution(name: str) -> EvaluableFunction:
    solutions = catalog_solutions()
    if name not in solutions:
        raise ValueError(f"Unsupported solution: {name!r}, expected one of {sorted(solutions)}")
    return solutions[name]


def manufactured_problem(kernel: GreensKernel, phi: EvaluableFunction) -> FredholmProblem:
    """The problem x - Kx = f whose solution is phi, with f = phi - K phi evaluated on demand."""
    image = k_image(kernel, phi)
    f = EvaluableFunction(
        lambda t: phi.evaluate(t) - image.evaluate(t),
        phi.kinks,
        f"{phi.description} - K[{kernel.name}]{phi.description}",
    ).memoized()
    return FredholmProblem(kernel, f, phi, f"{kernel.name}/{phi.description}")
