import dataclasses
from typing import Optional, Sequence, Tuple

import torch

from green_colloc.utils import checks
from green_colloc.utils.types import as_points, as_tensor, DTYPE, is_scalar, RealLike

__all__ = [
    "UniformMesh",
    "CollocationGrid",
    "PiecewisePolynomial",
    "make_mesh",
    "make_grid",
    "default_offsets",
    "divided_difference",
    "newton_divided_difference",
    "pp_eval",
]


@dataclasses.dataclass(frozen=True)
class UniformMesh:
    n: int
    breakpoints: torch.Tensor = dataclasses.field(init=False, repr=False, compare=False)

    def __post_init__(self):
        valid, reason = checks.validate_subinterval_count(self.n)
        if not valid:
            raise ValueError(f"Unsupported input: {reason}")
        breakpoints = torch.arange(self.n + 1, dtype=DTYPE) / self.n
        breakpoints[0] = 0.0
        breakpoints[-1] = 1.0
        object.__setattr__(self, "breakpoints", breakpoints)

    @property
    def h(self) -> float:
        return 1.0 / self.n

    def subinterval(self, j: int) -> Tuple[float, float]:
        # 1-based, like Δ_j = [t_{j-1}, t_j]
        return float(self.breakpoints[j - 1]), float(self.breakpoints[j])

    def locate(self, t: torch.Tensor) -> torch.Tensor:
        """0-based subinterval index of each point, interior breakpoints belonging to the left subinterval."""
        idx = torch.searchsorted(self.breakpoints, t.contiguous(), right=False) - 1
        return idx.clamp(0, self.n - 1)


def make_mesh(n: int) -> UniformMesh:
    return UniformMesh(n)


def default_offsets(r: int) -> Tuple[float, ...]:
    if r == 0:
        return (0.0,)
    return tuple(k / (2 * r) for k in range(2 * r + 1))


@dataclasses.dataclass(frozen=True)
class CollocationGrid:
    """Piecewise polynomials of degree <= 2r on a uniform mesh, interpolating at t_{j-1} + h * zeta_k."""

    mesh: UniformMesh
    r: int
    offsets: Tuple[float, ...]
    nodes: torch.Tensor = dataclasses.field(init=False, repr=False, compare=False)
    _zeta: torch.Tensor = dataclasses.field(init=False, repr=False, compare=False)
    _denominators: torch.Tensor = dataclasses.field(init=False, repr=False, compare=False)

    def __post_init__(self):
        valid, reason = checks.validate_offsets(self.offsets, self.r)
        if not valid:
            raise ValueError(f"Unsupported input: {reason}")
        zeta = as_tensor(self.offsets)
        # (j - 1 + zeta_k) / n puts zeta = 0 and zeta = 1 exactly on the breakpoints
        nodes = (torch.arange(self.mesh.n, dtype=DTYPE)[:, None] + zeta[None, :]) / self.mesh.n
        diffs = zeta[:, None] - zeta[None, :]
        diffs.fill_diagonal_(1.0)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "_zeta", zeta)
        object.__setattr__(self, "_denominators", diffs.prod(dim=-1))

    @property
    def n(self) -> int:
        return self.mesh.n

    @property
    def h(self) -> float:
        return self.mesh.h

    @property
    def local_dim(self) -> int:
        return 2 * self.r + 1

    @property
    def dim(self) -> int:
        return self.n * self.local_dim

    @property
    def flat_nodes(self) -> torch.Tensor:
        # lexicographic (j, k)
        return self.nodes.reshape(-1)

    def locate(self, t: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        """Subinterval index and local coordinate theta in [0, 1] of each point.

        Interior breakpoints use the left subinterval, except when the breakpoint is a node of the
        right subinterval only (zeta_0 = 0 without zeta_2r = 1), so that every node is evaluated
        on its own subinterval.
        """
        mesh = self.mesh
        idx = mesh.locate(t)
        if self.offsets[0] == 0.0 and self.offsets[-1] != 1.0:
            right_end = mesh.breakpoints[(idx + 1).clamp(max=mesh.n)]
            idx = torch.where((t == right_end) & (idx < mesh.n - 1), idx + 1, idx)
        theta = (t - mesh.breakpoints[idx]) * mesh.n
        return idx, theta

    def local_basis(self, theta: torch.Tensor) -> torch.Tensor:
        """Lagrange basis l_k(theta) of the offsets, shape (N, 2r+1)."""
        diffs = theta[:, None] - self._zeta[None, :]
        p = self.local_dim
        eye = torch.eye(p, dtype=torch.bool)
        expanded = diffs[:, None, :].expand(-1, p, -1)
        numerators = torch.where(eye[None, :, :], torch.ones_like(expanded), expanded).prod(dim=-1)
        return numerators / self._denominators[None, :]

    def basis_matrix(self, t: torch.Tensor) -> torch.Tensor:
        """Global piecewise Lagrange basis L_j evaluated at t, shape (N, dim)."""
        t = as_points(t)
        idx, theta = self.locate(t)
        local = self.local_basis(theta)
        out = torch.zeros(t.numel(), self.dim, dtype=DTYPE)
        cols = idx[:, None] * self.local_dim + torch.arange(self.local_dim)[None, :]
        out.scatter_(1, cols, local)
        return out

    def nodal_polynomial(self, t: RealLike):
        """Psi_j(t) = prod_k (t - tau_j^k) on the subinterval containing t."""
        scalar = is_scalar(t)
        t = as_points(t)
        idx, _ = self.locate(t)
        out = (t[:, None] - self.nodes[idx]).prod(dim=-1)
        return float(out[0]) if scalar else out

    def lebesgue_constant(self, points_per_interval: int = 1000) -> float:
        """Sampled sup-norm of P_n, max over theta of sum_k |l_k(theta)|; independent of n."""
        theta = torch.linspace(0.0, 1.0, points_per_interval + 1, dtype=DTYPE)
        return float(self.local_basis(theta).abs().sum(dim=-1).max())


def make_grid(mesh: UniformMesh, r: int, offsets: Optional[Sequence[float]] = None) -> CollocationGrid:
    valid, reason = checks.validate_offsets(offsets, r)
    if not valid:
        raise ValueError(f"Unsupported input: {reason}")
    if offsets is None:
        offsets = default_offsets(r)
    return CollocationGrid(mesh, r, tuple(float(z) for z in offsets))


@dataclasses.dataclass(frozen=True, eq=False)
class PiecewisePolynomial:
    grid: CollocationGrid
    values: torch.Tensor

    def __post_init__(self):
        values = as_tensor(self.values).reshape(self.grid.n, self.grid.local_dim)
        object.__setattr__(self, "values", values)

    @property
    def coefficients(self) -> torch.Tensor:
        return self.values.reshape(-1)

    def __call__(self, t: torch.Tensor) -> torch.Tensor:
        idx, theta = self.grid.locate(t)
        return (self.grid.local_basis(theta) * self.values[idx]).sum(dim=-1)


def pp_eval(p: PiecewisePolynomial, t: RealLike):
    scalar = is_scalar(t)
    t = as_points(t)
    if not bool(torch.all((t >= 0.0) & (t <= 1.0))):
        outside = t[(t < 0) | (t > 1)].tolist()
        raise ValueError(f"Unsupported input: evaluation points must lie in [0, 1], got {outside}")
    out = p(t)
    return float(out[0]) if scalar else out


def newton_divided_difference(
    points: torch.Tensor, values: torch.Tensor, derivatives: Optional[torch.Tensor] = None
) -> torch.Tensor:
    """Leading Newton coefficient over the last dimension, batched over leading dimensions.

    Equal adjacent points take their first-order entry from ``derivatives`` at the second
    occurrence. Multiplicities above two are not supported.
    """
    table = values
    for k in range(1, points.shape[-1]):
        den = points[..., k:] - points[..., :-k]
        col = (table[..., 1:] - table[..., :-1]) / den
        if k == 1 and derivatives is not None:
            col = torch.where(den == 0, derivatives[..., 1:], col)
        table = col
    return table[..., 0]


def divided_difference(
    points: Sequence[float], values: Sequence[float], derivatives: Optional[Sequence[Optional[float]]] = None
) -> float:
    """[z_0, ..., z_m]x from x(z_i) and, for repeated points, x'(z_i).

    Repeated points must be adjacent; ``derivatives[i]`` is required whenever ``points[i]``
    repeats ``points[i - 1]``.
    """
    points = [float(z) for z in points]
    if len(points) == 0 or len(values) != len(points):
        raise ValueError("Unsupported input: expected one value per point")
    if derivatives is not None and len(derivatives) != len(points):
        raise ValueError("Unsupported input: expected one derivative slot per point")
    valid, reason = checks.validate_confluent_points(points, derivatives)
    if not valid:
        raise ValueError(f"Unsupported input: {reason}")
    deriv = None
    if derivatives is not None:
        deriv = as_tensor([float("nan") if d is None else float(d) for d in derivatives])
    return float(newton_divided_difference(as_tensor(points), as_tensor(values), deriv))
