import logging
import math
from typing import Callable, Dict, List, Optional, Sequence

import torch

from green_colloc import config
from green_colloc.functions import EvaluableFunction, random_mesh_oscillations, sup_norm
from green_colloc.kernelop import apply_K, apply_K_ds, GreensKernel, k_image
from green_colloc.meshspace import CollocationGrid, newton_divided_difference, PiecewisePolynomial
from green_colloc.utils.types import as_tensor, DTYPE

__all__ = [
    "project",
    "as_function",
    "residual",
    "residual_norm_K",
    "residual_norm_PKP",
    "residual_norm_KPK",
    "divided_diff_K",
    "divided_diff_K_repeated",
    "divided_diff_K_sup",
    "operator_decay_probe",
]

logger = logging.getLogger(__name__)


def project(grid: CollocationGrid, x: EvaluableFunction) -> PiecewisePolynomial:
    """P_n x: the piecewise interpolant of x at every node of the grid."""
    return PiecewisePolynomial(grid, x.evaluate(grid.flat_nodes))


def as_function(p: PiecewisePolynomial, description: str = "") -> EvaluableFunction:
    grid = p.grid
    return EvaluableFunction(p, grid.mesh.breakpoints.tolist(), description or f"X_n(n={grid.n}, r={grid.r})")


def residual(grid: CollocationGrid, x: EvaluableFunction) -> EvaluableFunction:
    """(I - P_n) x, kinked at every breakpoint."""
    p = project(grid, x)
    return EvaluableFunction(
        lambda t: x.evaluate(t) - p(t),
        (*grid.mesh.breakpoints.tolist(), *x.kinks),
        f"(I - P_n)({x.description})",
    )


def residual_norm_K(grid: CollocationGrid, kernel: GreensKernel, x: EvaluableFunction) -> float:
    """||K (I - P_n) x||_inf, sampled."""
    return sup_norm(k_image(kernel, residual(grid, x)), grid)


def residual_norm_PKP(grid: CollocationGrid, kernel: GreensKernel, x: EvaluableFunction) -> float:
    """||(I - P_n) K (I - P_n) x||_inf, sampled."""
    return sup_norm(residual(grid, k_image(kernel, residual(grid, x))), grid)


def residual_norm_KPK(grid: CollocationGrid, kernel: GreensKernel, x: EvaluableFunction) -> float:
    """||K (I - P_n) K (I - P_n) x||_inf, sampled."""
    inner = residual(grid, k_image(kernel, residual(grid, x)))
    return sup_norm(k_image(kernel, inner), grid)


def _check_subinterval(grid: CollocationGrid, j: int, s: float):
    if not 1 <= j <= grid.n:
        raise ValueError(f"Unsupported input: expected 1 <= j <= {grid.n}, but got j: {j} instead.")
    lo, hi = grid.mesh.subinterval(j)
    if not lo <= s <= hi:
        raise ValueError(f"Unsupported input: s = {s} is outside subinterval {j} = [{lo}, {hi}]")


def _batched_divided_diff(
    grid: CollocationGrid,
    kernel: GreensKernel,
    x: EvaluableFunction,
    idx: torch.Tensor,
    s: torch.Tensor,
    repeated: bool,
) -> torch.Tensor:
    nodes = grid.nodes[idx]
    kx_nodes = apply_K(kernel, x, grid.flat_nodes).reshape(grid.n, grid.local_dim)[idx]
    kx_s = apply_K(kernel, x, s)[:, None]
    if not repeated:
        return newton_divided_difference(torch.cat([nodes, s[:, None]], dim=1), torch.cat([kx_nodes, kx_s], dim=1))
    points = torch.cat([nodes, s[:, None], s[:, None]], dim=1)
    values = torch.cat([kx_nodes, kx_s, kx_s], dim=1)
    derivatives = torch.full_like(values, float("nan"))
    derivatives[:, -1] = apply_K_ds(kernel, x, s)
    return newton_divided_difference(points, values, derivatives)


def divided_diff_K(grid: CollocationGrid, kernel: GreensKernel, x: EvaluableFunction, j: int, s: float) -> float:
    """[tau_j^0, ..., tau_j^2r, s] Kx for s in the j-th subinterval, away from its nodes."""
    s = float(s)
    _check_subinterval(grid, j, s)
    nodes = grid.nodes[j - 1]
    if bool(((nodes - s).abs() <= config.probes.node_exclusion * grid.h).any()):
        raise ValueError(
            f"Unsupported input: s = {s} coincides with a node of subinterval {j}, use divided_diff_K_repeated"
        )
    out = _batched_divided_diff(grid, kernel, x, torch.tensor([j - 1]), as_tensor([s]), repeated=False)
    return float(out[0])


def divided_diff_K_repeated(
    grid: CollocationGrid, kernel: GreensKernel, x: EvaluableFunction, j: int, s: float
) -> float:
    """[tau_j^0, ..., tau_j^2r, s, s] Kx using (Kx)'(s) for the doubled point.

    When s is itself a node the point would be tripled; s is then moved by probes.confluent_shift * h
    towards the middle of the subinterval, which approximates the limit.
    """
    s = float(s)
    _check_subinterval(grid, j, s)
    nodes = grid.nodes[j - 1]
    shift = config.probes.confluent_shift * grid.h
    if bool(((nodes - s).abs() <= config.probes.node_exclusion * grid.h).any()):
        lo, hi = grid.mesh.subinterval(j)
        s = s + shift if s < (lo + hi) / 2 else s - shift
    out = _batched_divided_diff(grid, kernel, x, torch.tensor([j - 1]), as_tensor([s]), repeated=True)
    return float(out[0])


def _probe_points(grid: CollocationGrid, points_per_interval: int):
    theta = (torch.arange(points_per_interval, dtype=DTYPE) + 0.5) / points_per_interval
    zeta = as_tensor(grid.offsets)
    keep = ((theta[:, None] - zeta[None, :]).abs() > config.probes.node_exclusion).all(dim=-1)
    theta = theta[keep]
    idx = torch.arange(grid.n).repeat_interleave(theta.numel())
    s = grid.mesh.breakpoints[idx] + grid.h * theta.repeat(grid.n)
    return idx, s


def divided_diff_K_sup(
    grid: CollocationGrid,
    kernel: GreensKernel,
    x: EvaluableFunction,
    repeated: bool = False,
    points_per_interval: Optional[int] = None,
) -> float:
    """Sampled sup over all subintervals and interior s of |[tau_j^0, ..., tau_j^2r, s(, s)] Kx|."""
    if points_per_interval is None:
        points_per_interval = config.probes.points_per_interval
    idx, s = _probe_points(grid, points_per_interval)
    values = _batched_divided_diff(grid, kernel, x, idx, s, repeated)
    out = float(values.abs().max())
    logger.debug(f"divided difference sup (repeated={repeated}) at n={grid.n}, r={grid.r}: {out:.6e}")
    return out


def operator_decay_probe(
    kernel: GreensKernel,
    grid_factory: Callable[[int], CollocationGrid],
    n_list: Sequence[int],
    count: int = 10,
    seed: int = 0,
) -> Dict[str, object]:
    """max over random unit-sup mesh oscillations x of ||K (I - P_n) K (I - P_n) x||_inf, per n.

    The oscillations vanish at the nodes, so they realize the operator norm rather than smooth decay.
    Passes when every ratio between consecutive n falls in [0.3, 0.8].
    """
    values: List[float] = []
    for n in n_list:
        grid = grid_factory(n)
        generator = torch.Generator().manual_seed(seed)
        worst = 0.0
        for x in random_mesh_oscillations(grid, count, generator):
            worst = max(worst, residual_norm_KPK(grid, kernel, x))
        values.append(worst)
        logger.debug(f"operator decay probe at n={n}: {worst:.6e}")
    ratios = [b / a if a > 0.0 else math.nan for a, b in zip(values, values[1:])]
    passed = all(0.3 <= ratio <= 0.8 for ratio in ratios)
    return {"n": list(n_list), "values": values, "ratios": ratios, "passed": passed}
