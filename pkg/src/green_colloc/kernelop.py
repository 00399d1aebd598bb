import contextlib
import dataclasses
import functools
import math
import threading
from typing import Callable, Dict, Iterable, Mapping, Optional, Tuple, Union

import numpy as np
import torch

from green_colloc import config
from green_colloc.functions import EvaluableFunction, random_piecewise_linear
from green_colloc.meshspace import UniformMesh
from green_colloc.utils.types import as_points, as_tensor, DTYPE, is_scalar, RealLike

__all__ = [
    "GreensKernel",
    "SmoothnessBounds",
    "FredholmProblem",
    "KernelEvaluationCounter",
    "count_kernel_evaluations",
    "gauss_rule",
    "integrate_split",
    "apply_K",
    "apply_K_ds",
    "k_image",
    "sample_bounds",
    "derivative_bound_check",
    "builtin_kernels",
    "get_kernel",
]

PieceFn = Callable[[torch.Tensor, torch.Tensor], torch.Tensor]

_MAX_GAUSS_ORDER = 64


class KernelEvaluationCounter:
    def __init__(self):
        self.count = 0


_local = threading.local()


@contextlib.contextmanager
def count_kernel_evaluations():
    """Counts (s, t) kernel-piece evaluations made by this thread inside the block."""
    counter = KernelEvaluationCounter()
    stack = getattr(_local, "stack", None)
    if stack is None:
        stack = _local.stack = []
    stack.append(counter)
    try:
        yield counter
    finally:
        stack.remove(counter)


def _record_evaluations(count: int):
    for counter in getattr(_local, "stack", ()):
        counter.count += count


@functools.cache
def _gauss_rule(q: int) -> Tuple[torch.Tensor, torch.Tensor]:
    nodes, weights = np.polynomial.legendre.leggauss(q)
    return torch.from_numpy(nodes).to(DTYPE), torch.from_numpy(weights).to(DTYPE)


def gauss_rule(q: int) -> Tuple[torch.Tensor, torch.Tensor]:
    """q-point Gauss-Legendre nodes and weights on [-1, 1]."""
    if isinstance(q, bool) or not isinstance(q, int) or not 1 <= q <= _MAX_GAUSS_ORDER:
        raise ValueError(f"Unsupported input: expected 1 <= q <= {_MAX_GAUSS_ORDER}, but got q: {q!r} instead.")
    nodes, weights = _gauss_rule(q)
    return nodes.clone(), weights.clone()


def _segment_rule(a: torch.Tensor, b: torch.Tensor, q: int) -> Tuple[torch.Tensor, torch.Tensor]:
    nodes, weights = _gauss_rule(q)
    half = (b - a) / 2
    mid = (a + b) / 2
    return mid[..., None] + half[..., None] * nodes, half[..., None] * weights


def integrate_split(
    g: EvaluableFunction, a: float, b: float, extra_splits: Iterable[float] = (), q: Optional[int] = None
) -> float:
    """Composite Gauss rule over [a, b] split at the kinks of g and at ``extra_splits``."""
    if q is None:
        q = config.quadrature.order
    gauss_rule(q)
    a, b = float(a), float(b)
    if not a <= b:
        raise ValueError(f"Unsupported input: expected a <= b, but got a: {a}, b: {b} instead.")
    extra_splits = [float(z) for z in extra_splits]
    for z in extra_splits:
        if not a <= z <= b:
            raise ValueError(f"Unsupported input: split point {z} outside [{a}, {b}]")
    edges = sorted({a, b} | {z for z in (*g.kinks, *extra_splits) if a < z < b})
    if len(edges) < 2:
        return 0.0
    edges = as_tensor(edges)
    lo, hi = edges[:-1], edges[1:]
    keep = hi > lo
    t, w = _segment_rule(lo[keep], hi[keep], q)
    return float((g.evaluate(t.reshape(-1)) * w.reshape(-1)).sum())


def _fd_partial(piece: PieceFn, j: int, k: int, step: float) -> PieceFn:
    def diff(f, axis):
        def df(s, t):
            if axis == 0:
                return (f(s + step, t) - f(s - step, t)) / (2 * step)
            return (f(s, t + step) - f(s, t - step)) / (2 * step)

        return df

    out = piece
    for _ in range(j):
        out = diff(out, 0)
    for _ in range(k):
        out = diff(out, 1)
    return out


def _broadcasting(piece: PieceFn) -> PieceFn:
    """Lets a piece return a Python number or a tensor of any broadcastable shape."""
    if getattr(piece, "_broadcasting", False):
        return piece

    @functools.wraps(piece)
    def wrapper(s, t):
        s, t = as_tensor(s), as_tensor(t)
        return torch.broadcast_to(as_tensor(piece(s, t)), torch.broadcast_shapes(s.shape, t.shape))

    wrapper._broadcasting = True
    return wrapper


@dataclasses.dataclass(frozen=True, eq=False)
class GreensKernel:
    """kappa(s, t) = kappa1(s, t) for t <= s and kappa2(s, t) for s <= t, continuous across the diagonal.

    ``partials[(j, k)]`` holds closed-form (D^(j,k) kappa1, D^(j,k) kappa2) pairs. ``alpha`` is the
    smoothness order of the pieces, kept as metadata.
    """

    kappa1: PieceFn
    kappa2: PieceFn
    alpha: int = 2
    name: str = "custom"
    partials: Mapping[Tuple[int, int], Tuple[PieceFn, PieceFn]] = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "kappa1", _broadcasting(self.kappa1))
        object.__setattr__(self, "kappa2", _broadcasting(self.kappa2))
        object.__setattr__(
            self, "partials", {key: (_broadcasting(p1), _broadcasting(p2)) for key, (p1, p2) in self.partials.items()}
        )
        s = torch.linspace(0.0, 1.0, config.sampling.check_points, dtype=DTYPE)
        gap = (self.kappa1(s, s) - self.kappa2(s, s)).abs()
        if not bool(torch.isfinite(gap).all()):
            raise ValueError(f"Unsupported input: kernel {self.name} is not finite on the diagonal")
        if float(gap.max()) > config.kernel.diagonal_tolerance:
            raise ValueError(
                f"Unsupported input: kernel {self.name} is not continuous across the diagonal "
                f"(max |kappa1(s,s) - kappa2(s,s)| = {float(gap.max()):.3e})"
            )
        u = torch.linspace(0.0, 1.0, 21, dtype=DTYPE)
        a, b = torch.meshgrid(u, u, indexing="ij")
        for piece, (ss, tt) in ((self.kappa1, (a, a * b)), (self.kappa2, (a * b, a))):
            if not bool(torch.isfinite(piece(ss, tt)).all()):
                raise ValueError(f"Unsupported input: kernel {self.name} is not finite on its triangles")

    def __call__(self, s: torch.Tensor, t: torch.Tensor) -> torch.Tensor:
        s, t = torch.broadcast_tensors(as_tensor(s), as_tensor(t))
        return torch.where(t <= s, self.kappa1(s, t), self.kappa2(s, t))

    def has_partial(self, j: int, k: int) -> bool:
        return (j, k) == (0, 0) or (j, k) in self.partials

    def partial(self, j: int, k: int, allow_fd: bool = True) -> Tuple[PieceFn, PieceFn]:
        if (j, k) == (0, 0):
            return self.kappa1, self.kappa2
        if (j, k) in self.partials:
            return self.partials[(j, k)]
        if not allow_fd:
            raise ValueError(f"Unsupported input: kernel {self.name} has no D^({j},{k}) evaluators")
        step = config.kernel.fd_step
        if j + k > 1:
            # balances truncation against roundoff for higher-order differences
            step = math.sqrt(step)
        return _fd_partial(self.kappa1, j, k, step), _fd_partial(self.kappa2, j, k, step)


@dataclasses.dataclass(frozen=True)
class SmoothnessBounds:
    C1: float
    M1: float
    M2: float


@dataclasses.dataclass(frozen=True, eq=False)
class FredholmProblem:
    """x - Kx = f on C[0, 1], optionally with its known solution."""

    kernel: GreensKernel
    f: EvaluableFunction
    exact_solution: Optional[EvaluableFunction] = None
    name: str = ""

    def equation_residual(self, points: Optional[int] = None) -> float:
        """sup over uniform samples of |phi - K phi - f| for the attached exact solution."""
        if self.exact_solution is None:
            raise ValueError("Unsupported input: problem has no exact solution attached")
        if points is None:
            points = config.sampling.check_points
        s = torch.linspace(0.0, 1.0, points, dtype=DTYPE)
        phi = self.exact_solution.evaluate(s)
        return float((phi - apply_K(self.kernel, self.exact_solution, s) - self.f.evaluate(s)).abs().max())


def _kernel_integral(
    piece1: PieceFn, piece2: PieceFn, x: EvaluableFunction, s: torch.Tensor, q: int
) -> torch.Tensor:
    """int_0^s piece1(s, t) x(t) dt + int_s^1 piece2(s, t) x(t) dt for every s.

    Segments are the kinks of x; the segment containing s is split at s. Works for block
    functions x returning (N, m) values, giving an (S, m) result.
    """
    edges = as_tensor([0.0, *x.kinks, 1.0])
    num_segments = edges.numel() - 1
    tb, wb = _segment_rule(edges[:-1], edges[1:], q)
    tb, wb = tb.reshape(-1), wb.reshape(-1)
    node_segment = torch.arange(num_segments).repeat_interleave(q)
    xb = x.evaluate(tb)
    block = xb.dim() > 1

    chunks = []
    for sc in torch.split(s, config.quadrature.chunk_size):
        segment = (torch.searchsorted(edges, sc.contiguous(), right=True) - 1).clamp(0, num_segments - 1)
        lo, hi = edges[segment], edges[segment + 1]
        interior = (sc > lo) & (sc < hi)

        ss, tt = sc[:, None], tb[None, :]
        kmat = torch.where(tt <= ss, piece1(ss, tt), piece2(ss, tt)) * wb[None, :]
        kmat = kmat.masked_fill(interior[:, None] & (node_segment[None, :] == segment[:, None]), 0.0)
        out = kmat @ xb
        _record_evaluations(kmat.numel())

        rows = interior.nonzero().reshape(-1)
        if rows.numel() > 0:
            si = sc[rows]
            tl, wl = _segment_rule(lo[rows], si, q)
            tr, wr = _segment_rule(si, hi[rows], q)
            weights = torch.cat([piece1(si[:, None], tl) * wl, piece2(si[:, None], tr) * wr], dim=1)
            xs = x.evaluate(torch.cat([tl, tr], dim=1).reshape(-1))
            _record_evaluations(weights.numel())
            if block:
                split = torch.einsum("iq,iqm->im", weights, xs.reshape(rows.numel(), 2 * q, -1))
            else:
                split = (weights * xs.reshape(rows.numel(), 2 * q)).sum(dim=-1)
            out = out.index_add(0, rows, split)
        chunks.append(out)
    return torch.cat(chunks, dim=0)


def _check_unit_interval(s: torch.Tensor):
    if not bool(torch.all((s >= 0.0) & (s <= 1.0))):
        raise ValueError(f"Unsupported input: s must lie in [0, 1], got {s[(s < 0) | (s > 1)].tolist()}")


def apply_K(kernel: GreensKernel, x: EvaluableFunction, s: RealLike, q: Optional[int] = None):
    """(Kx)(s), split at the diagonal point s and at the kinks of x."""
    if q is None:
        q = config.quadrature.order
    scalar = is_scalar(s)
    s = as_points(s)
    _check_unit_interval(s)
    out = _kernel_integral(kernel.kappa1, kernel.kappa2, x, s, q)
    return float(out[0]) if scalar else out


def apply_K_ds(kernel: GreensKernel, x: EvaluableFunction, s: RealLike, q: Optional[int] = None):
    """(Kx)'(s) by the Leibnitz rule; the diagonal boundary terms cancel by continuity."""
    if q is None:
        q = config.quadrature.order
    d1, d2 = kernel.partial(1, 0, allow_fd=False)
    scalar = is_scalar(s)
    s = as_points(s)
    _check_unit_interval(s)
    out = _kernel_integral(d1, d2, x, s, q)
    return float(out[0]) if scalar else out


def k_image(kernel: GreensKernel, x: EvaluableFunction, memoize: bool = False) -> EvaluableFunction:
    """s -> (Kx)(s). K adds no kinks of its own; those of x are kept for outer quadratures."""
    image = EvaluableFunction(
        lambda t: _kernel_integral(kernel.kappa1, kernel.kappa2, x, t, config.quadrature.order),
        x.kinks,
        f"K[{kernel.name}]({x.description})",
    )
    return image.memoized() if memoize else image


def sample_bounds(kernel: GreensKernel, mesh: UniformMesh, density: int = 41) -> SmoothnessBounds:
    """Sampled C1, M1, M2; maxima over finite grids, so lower bounds of the true suprema."""
    if density < 2:
        raise ValueError(f"Unsupported input: expected density >= 2, but got density: {density} instead.")
    u = torch.linspace(0.0, 1.0, density, dtype=DTYPE)
    a, b = torch.meshgrid(u, u, indexing="ij")
    lower = (a, a * b)  # t <= s
    upper = (a * b, a)  # s <= t

    c1 = 0.0
    for j in range(3):
        for k in range(3):
            p1, p2 = kernel.partial(j, k)
            c1 = max(c1, float(p1(*lower).abs().max()), float(p2(*upper).abs().max()))

    origin = mesh.breakpoints[:-1].reshape(-1, 1, 1)
    lower = (origin + mesh.h * a, origin + mesh.h * a * b)
    upper = (origin + mesh.h * a * b, origin + mesh.h * a)
    m = []
    for l in (1, 2):
        p1, p2 = kernel.partial(l, 0)
        m.append(max(float(p1(*lower).abs().max()), float(p2(*upper).abs().max())))

    bounds = SmoothnessBounds(c1, m[0], m[1])
    if not all(math.isfinite(v) for v in dataclasses.astuple(bounds)):
        raise FloatingPointError(f"Non-finite smoothness bounds for kernel {kernel.name}: {bounds}")
    return bounds


def derivative_bound_check(
    kernel: GreensKernel,
    mesh: UniformMesh,
    count: int = 20,
    seed: int = 0,
    points: int = 101,
    step: float = 1e-4,
) -> Dict[str, Union[float, bool]]:
    """Finite-difference ||(Kx)'|| for random unit-sup piecewise linear x against the sampled C1."""
    generator = torch.Generator().manual_seed(seed)
    bounds = sample_bounds(kernel, mesh)
    s = torch.linspace(0.0, 1.0, points, dtype=DTYPE)
    # centered inside, second-order one-sided at the ends
    left = s < step
    right = s > 1.0 - step
    worst = 0.0
    for x in random_piecewise_linear(count, generator):
        kx = lambda p: apply_K(kernel, x, p.clamp(0.0, 1.0))
        centered = (kx(s + step) - kx(s - step)) / (2 * step)
        forward = (-3 * kx(s) + 4 * kx(s + step) - kx(s + 2 * step)) / (2 * step)
        backward = (3 * kx(s) - 4 * kx(s - step) + kx(s - 2 * step)) / (2 * step)
        derivative = torch.where(left, forward, torch.where(right, backward, centered))
        worst = max(worst, float(derivative.abs().max()))
    bound = bounds.C1 * 1.05 + 1e-6
    return {"max_derivative": worst, "C1": bounds.C1, "bound": bound, "passed": worst <= bound}


def _zeros(s, t):
    return torch.zeros(torch.broadcast_shapes(s.shape, t.shape), dtype=DTYPE)


def _ones(s, t):
    return torch.ones(torch.broadcast_shapes(s.shape, t.shape), dtype=DTYPE)


def _bvp_green() -> GreensKernel:
    # Green's function of -u'' = g, u(0) = u(1) = 0
    return GreensKernel(
        kappa1=lambda s, t: t * (1 - s),
        kappa2=lambda s, t: s * (1 - t),
        alpha=8,
        name="bvp_green",
        partials={
            (1, 0): (lambda s, t: -t * _ones(s, t), lambda s, t: (1 - t) * _ones(s, t)),
            (0, 1): (lambda s, t: (1 - s) * _ones(s, t), lambda s, t: -s * _ones(s, t)),
            (1, 1): (lambda s, t: -_ones(s, t), lambda s, t: -_ones(s, t)),
            (2, 0): (_zeros, _zeros),
            (0, 2): (_zeros, _zeros),
            (2, 1): (_zeros, _zeros),
            (1, 2): (_zeros, _zeros),
            (2, 2): (_zeros, _zeros),
        },
    )


def _rank_one() -> GreensKernel:
    partials = {(1, 0): (_ones, _ones)}
    for jk in ((0, 1), (1, 1), (2, 0), (0, 2), (2, 1), (1, 2), (2, 2)):
        partials[jk] = (_zeros, _zeros)
    return GreensKernel(
        kappa1=lambda s, t: s * _ones(s, t),
        kappa2=lambda s, t: s * _ones(s, t),
        alpha=8,
        name="rank_one",
        partials=partials,
    )


def _abs_exp() -> GreensKernel:
    partials = {}
    for j in range(3):
        for k in range(3):
            if (j, k) != (0, 0):
                partials[(j, k)] = (
                    lambda s, t, j=j: (-1.0) ** j * torch.exp(t - s),
                    lambda s, t, k=k: (-1.0) ** k * torch.exp(s - t),
                )
    return GreensKernel(
        kappa1=lambda s, t: torch.exp(t - s),
        kappa2=lambda s, t: torch.exp(s - t),
        alpha=8,
        name="abs_exp",
        partials=partials,
    )


def _zero() -> GreensKernel:
    partials = {(j, k): (_zeros, _zeros) for j in range(3) for k in range(3) if (j, k) != (0, 0)}
    return GreensKernel(kappa1=_zeros, kappa2=_zeros, alpha=8, name="zero", partials=partials)


@functools.cache
def builtin_kernels() -> Dict[str, GreensKernel]:
    return {kernel.name: kernel for kernel in (_bvp_green(), _rank_one(), _abs_exp(), _zero())}


def get_kernel(name: str) -> GreensKernel:
    kernels = builtin_kernels()
    if name not in kernels:
        raise ValueError(f"Unsupported kernel: {name!r}, expected one of {sorted(kernels)}")
    return kernels[name]
