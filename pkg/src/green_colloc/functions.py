import threading
from typing import Callable, Iterable, List, Optional, Sequence, Union

import torch

from green_colloc import config
from green_colloc.meshspace import CollocationGrid, UniformMesh
from green_colloc.utils.types import as_points, as_tensor, DTYPE, is_scalar, RealLike

__all__ = [
    "EvaluableFunction",
    "constant",
    "sample_points",
    "sup_norm",
    "smoothness_norm",
    "random_piecewise_linear",
    "random_mesh_oscillations",
]

TensorFn = Callable[[torch.Tensor], torch.Tensor]


def _merge_kinks(*kink_sets: Iterable[float]) -> tuple:
    merged = set()
    for kinks in kink_sets:
        merged.update(float(k) for k in kinks)
    return tuple(sorted(k for k in merged if 0.0 < k < 1.0))


class _Memo:
    def __init__(self, fn: TensorFn):
        self._fn = fn
        self._cache = {}
        self._lock = threading.Lock()

    def __call__(self, t: torch.Tensor) -> torch.Tensor:
        keys = t.tolist()
        with self._lock:
            missing = [i for i, k in enumerate(keys) if k not in self._cache]
        if missing:
            index = torch.tensor(missing, dtype=torch.long)
            values = self._fn(t[index]).tolist()
            with self._lock:
                for i, v in zip(missing, values):
                    self._cache[keys[i]] = v
        with self._lock:
            return torch.tensor([self._cache[k] for k in keys], dtype=DTYPE)


class EvaluableFunction:
    """A real function on [0, 1] evaluated on float64 tensors, with the points where it may fail to be smooth.

    ``fn`` maps a 1-D tensor of abscissae to a tensor of the same length, or to an (N, m) matrix
    for a block of m functions sharing one kink set. ``derivative_fns[i]`` evaluates the
    (i + 1)-th derivative when known in closed form.
    """

    def __init__(
        self,
        fn: TensorFn,
        kinks: Iterable[float] = (),
        description: str = "",
        derivative_fns: Sequence[TensorFn] = (),
    ):
        self._fn = fn
        self.kinks = _merge_kinks(kinks)
        self.description = description
        self._derivative_fns = tuple(derivative_fns)

    def __repr__(self):
        return f"EvaluableFunction({self.description!r}, kinks={len(self.kinks)})"

    def evaluate(self, t: torch.Tensor) -> torch.Tensor:
        out = self._fn(t)
        finite = torch.isfinite(out)
        if finite.dim() > 1:
            finite = finite.all(dim=-1)
        if not bool(finite.all()):
            bad = float(t[~finite][0])
            raise FloatingPointError(f"Non-finite value of {self.description or 'function'} at t = {bad!r}")
        return out

    def __call__(self, t: RealLike) -> Union[float, torch.Tensor]:
        if is_scalar(t):
            return float(self.evaluate(as_points(t))[0])
        return self.evaluate(as_points(t))

    @property
    def max_derivative_order(self) -> int:
        return len(self._derivative_fns)

    def derivative(self, order: int) -> "EvaluableFunction":
        if order == 0:
            return self
        if order > len(self._derivative_fns):
            raise ValueError(f"Unsupported input: derivative of order {order} not available for {self.description}")
        return EvaluableFunction(
            self._derivative_fns[order - 1],
            self.kinks,
            f"d^{order}/ds^{order} {self.description}",
            self._derivative_fns[order:],
        )

    def memoized(self) -> "EvaluableFunction":
        """Same function, with values cached by abscissa; safe to share between threads."""
        return EvaluableFunction(_Memo(self.evaluate), self.kinks, self.description, self._derivative_fns)

    def with_kinks(self, kinks: Iterable[float]) -> "EvaluableFunction":
        return EvaluableFunction(self._fn, _merge_kinks(self.kinks, kinks), self.description, self._derivative_fns)

    def _combine(self, other: "EvaluableFunction", alpha: float, beta: float, description: str):
        derivative_fns = []
        for df, dg in zip(self._derivative_fns, other._derivative_fns):
            derivative_fns.append(lambda t, df=df, dg=dg: alpha * df(t) + beta * dg(t))
        return EvaluableFunction(
            lambda t: alpha * self.evaluate(t) + beta * other.evaluate(t),
            _merge_kinks(self.kinks, other.kinks),
            description,
            derivative_fns,
        )

    def __add__(self, other: "EvaluableFunction") -> "EvaluableFunction":
        return self._combine(other, 1.0, 1.0, f"({self.description} + {other.description})")

    def __sub__(self, other: "EvaluableFunction") -> "EvaluableFunction":
        return self._combine(other, 1.0, -1.0, f"({self.description} - {other.description})")

    def __mul__(self, alpha: float) -> "EvaluableFunction":
        alpha = float(alpha)
        return EvaluableFunction(
            lambda t: alpha * self.evaluate(t),
            self.kinks,
            f"{alpha!r} * {self.description}",
            [lambda t, df=df: alpha * df(t) for df in self._derivative_fns],
        )

    __rmul__ = __mul__

    def __neg__(self) -> "EvaluableFunction":
        return self * -1.0


def constant(c: float) -> EvaluableFunction:
    c = float(c)
    zero = lambda t: torch.zeros_like(t)
    return EvaluableFunction(lambda t: torch.full_like(t, c), (), f"{c!r}", [zero] * 8)


def sample_points(
    grid: Union[CollocationGrid, UniformMesh],
    kinks: Iterable[float] = (),
    points_per_interval: Optional[int] = None,
) -> torch.Tensor:
    """Uniform points per subinterval plus all breakpoints, collocation nodes and kinks, sorted."""
    if points_per_interval is None:
        points_per_interval = config.sampling.points_per_interval
    mesh = grid.mesh if isinstance(grid, CollocationGrid) else grid
    local = torch.arange(points_per_interval, dtype=DTYPE) / points_per_interval
    parts: List[torch.Tensor] = [
        ((torch.arange(mesh.n, dtype=DTYPE)[:, None] + local[None, :]) / mesh.n).reshape(-1),
        mesh.breakpoints,
        as_tensor(list(kinks)).reshape(-1),
    ]
    if isinstance(grid, CollocationGrid):
        parts.append(grid.flat_nodes)
    return torch.unique(torch.cat(parts).clamp(0.0, 1.0))


def sup_norm(
    g: EvaluableFunction,
    grid: Union[CollocationGrid, UniformMesh],
    points: Optional[torch.Tensor] = None,
) -> float:
    if points is None:
        points = sample_points(grid, g.kinks)
    values = g.evaluate(points)
    if values.numel() == 0:
        return 0.0
    return float(values.abs().max())


def smoothness_norm(
    x: EvaluableFunction, order: int, grid: Union[CollocationGrid, UniformMesh]
) -> float:
    """max_{i <= order} ||x^(i)||_inf from closed-form derivatives, sampled like sup_norm."""
    points = sample_points(grid, x.kinks)
    return max(sup_norm(x.derivative(i), grid, points) for i in range(order + 1))


def random_piecewise_linear(
    count: int, generator: torch.Generator, knots: int = 6
) -> List[EvaluableFunction]:
    """Continuous piecewise linear functions with random interior knots and sup-norm exactly 1."""
    functions = []
    for i in range(count):
        inner = torch.sort(torch.rand(knots, generator=generator, dtype=DTYPE)).values
        xs = torch.cat([torch.zeros(1, dtype=DTYPE), inner, torch.ones(1, dtype=DTYPE)])
        ys = 2.0 * torch.rand(knots + 2, generator=generator, dtype=DTYPE) - 1.0
        ys = ys / ys.abs().max()

        def fn(t, xs=xs, ys=ys):
            idx = (torch.searchsorted(xs, t.contiguous(), right=True) - 1).clamp(0, xs.numel() - 2)
            w = (t - xs[idx]) / (xs[idx + 1] - xs[idx])
            return (1.0 - w) * ys[idx] + w * ys[idx + 1]

        functions.append(EvaluableFunction(fn, inner.tolist(), f"random_piecewise_linear[{i}]"))
    return functions


def random_mesh_oscillations(
    grid: CollocationGrid, count: int, generator: torch.Generator, modes: int = 4
) -> List[EvaluableFunction]:
    """a(t) * Psi_j(t) / max|Psi_j| with a random smooth amplitude |a| <= 1.

    These vanish at every collocation node, so P_n x = 0 and (I - P_n)x = x with unit-order size;
    they probe operator norms rather than smooth-function decay.
    """
    theta = torch.linspace(0.0, 1.0, 2001, dtype=DTYPE)
    local_nodes = torch.tensor(grid.offsets, dtype=DTYPE)
    psi_max = float((theta[:, None] - local_nodes[None, :]).prod(dim=-1).abs().max()) * grid.h ** grid.local_dim
    functions = []
    for i in range(count):
        coeffs = 2.0 * torch.rand(modes, generator=generator, dtype=DTYPE) - 1.0
        phases = 2.0 * torch.pi * torch.rand(modes, generator=generator, dtype=DTYPE)
        coeffs = coeffs / coeffs.abs().sum()
        freqs = torch.arange(modes, dtype=DTYPE) * torch.pi

        def fn(t, coeffs=coeffs, phases=phases):
            amplitude = (coeffs[None, :] * torch.cos(freqs[None, :] * t[:, None] + phases[None, :])).sum(dim=-1)
            return amplitude * grid.nodal_polynomial(t) / psi_max

        functions.append(EvaluableFunction(fn, grid.mesh.breakpoints.tolist(), f"random_mesh_oscillation[{i}]"))
    return functions
