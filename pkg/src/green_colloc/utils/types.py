from typing import Sequence, Union

import torch

DTYPE = torch.float64

Real = Union[float, int]
RealLike = Union[Real, Sequence[Real], torch.Tensor]


def as_tensor(x: RealLike) -> torch.Tensor:
    return torch.as_tensor(x, dtype=DTYPE)


def as_points(x: RealLike) -> torch.Tensor:
    return as_tensor(x).reshape(-1)


def is_scalar(x) -> bool:
    if isinstance(x, torch.Tensor):
        return x.dim() == 0
    return not isinstance(x, (list, tuple))
