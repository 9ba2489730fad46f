"""Uniform box grids, node-indexed fields, and discrete calculus.

The domain is always a box in dimension 1 or 2, discretized by a uniform
lattice.  Scalar and vector fields store one value (or one n-vector) per
node.  Gradients and divergences use central differences at interior nodes
and one-sided second-order stencils at boundary nodes, so both operators
are exact on affine data and second-order accurate everywhere else.

Fields are value types: the constructor copies its input and the stored
array is marked read-only.  All operations here are pure functions.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "ScalarField",
    "VectorField",
    "InteriorMask",
    "gradient",
    "divergence",
    "interior_mask",
    "adjointness_defect",
    "write_grid_json",
    "read_grid_json",
    "write_field_csv",
    "read_field_csv",
]

# Relative slack used when comparing node coordinates against box bounds.
_GEOM_RTOL = 1e-12


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular lattice over a box, dim 1 or 2, >= 3 nodes per axis."""

    dim: int
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    nodes: tuple[int, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise ValueError(f"dim must be 1 or 2, got {self.dim}")
        lower = tuple(float(v) for v in self.lower)
        upper = tuple(float(v) for v in self.upper)
        nodes = tuple(int(n) for n in self.nodes)
        if not (len(lower) == len(upper) == len(nodes) == self.dim):
            raise ValueError("lower/upper/nodes must all have length dim")
        for lo, hi in zip(lower, upper):
            if not hi > lo:
                raise ValueError(f"upper must exceed lower per axis, got [{lo}, {hi}]")
        for n in nodes:
            if n < 3:
                raise ValueError(f"need at least 3 nodes per axis, got {n}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "nodes", nodes)

    @classmethod
    def line(cls, lower: float, upper: float, nodes: int) -> "Grid":
        return cls(1, (lower,), (upper,), (nodes,))

    @classmethod
    def box(cls, lower, upper, nodes) -> "Grid":
        lower = tuple(lower)
        return cls(len(lower), lower, tuple(upper), tuple(nodes))

    @property
    def h(self) -> tuple[float, ...]:
        """Spacing per axis, (upper - lower) / (nodes - 1)."""
        return tuple(
            (hi - lo) / (n - 1) for lo, hi, n in zip(self.lower, self.upper, self.nodes)
        )

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes

    @property
    def num_nodes(self) -> int:
        return int(np.prod(self.nodes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @property
    def volume(self) -> float:
        return float(np.prod([hi - lo for lo, hi in zip(self.lower, self.upper)]))

    def axis(self, k: int) -> np.ndarray:
        return np.linspace(self.lower[k], self.upper[k], self.nodes[k])

    def axes(self) -> list[np.ndarray]:
        return [self.axis(k) for k in range(self.dim)]

    def coords(self) -> np.ndarray:
        """Node coordinates, shape ``grid.shape + (dim,)``."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def quad_weights(self) -> np.ndarray:
        """Tensor-product trapezoid weights, shape ``grid.shape``."""
        axes_w = []
        for k in range(self.dim):
            w = np.full(self.nodes[k], self.h[k])
            w[0] = w[-1] = 0.5 * self.h[k]
            axes_w.append(w)
        if self.dim == 1:
            return axes_w[0]
        return np.outer(axes_w[0], axes_w[1])

    def boundary_flags(self) -> np.ndarray:
        """Boolean array marking nodes on the box boundary."""
        flags = np.zeros(self.shape, dtype=bool)
        for k in range(self.dim):
            idx_lo = [slice(None)] * self.dim
            idx_lo[k] = 0
            flags[tuple(idx_lo)] = True
            idx_hi = [slice(None)] * self.dim
            idx_hi[k] = -1
            flags[tuple(idx_hi)] = True
        return flags

    def refine(self, factor: int = 2) -> "Grid":
        """Same box with (n - 1) * factor + 1 nodes per axis."""
        return Grid(
            self.dim,
            self.lower,
            self.upper,
            tuple((n - 1) * factor + 1 for n in self.nodes),
        )


def _freeze(values: np.ndarray) -> np.ndarray:
    out = np.array(values, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ScalarField:
    """One real value per grid node; values are copied and frozen."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {values.shape} does not match grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _freeze(values))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Evaluate ``fn(x1[, x2])`` on the node coordinates."""
        return cls(grid, fn(*np.moveaxis(grid.coords(), -1, 0)))

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)


@dataclass(frozen=True)
class VectorField:
    """One n-vector per grid node, stored with a trailing component axis."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape + (self.grid.dim,):
            raise ValueError(
                f"values shape {values.shape} does not match "
                f"{self.grid.shape + (self.grid.dim,)}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError("field values must be finite")
        object.__setattr__(self, "values", _freeze(values))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "VectorField":
        """``fn`` may return the stacked array or a tuple of component arrays."""
        out = fn(*np.moveaxis(grid.coords(), -1, 0))
        if isinstance(out, (tuple, list)):
            out = np.stack(
                [np.broadcast_to(np.asarray(c, dtype=float), grid.shape) for c in out],
                axis=-1,
            )
        return cls(grid, out)

    def component(self, k: int) -> ScalarField:
        return ScalarField(self.grid, self.values[..., k])

    def magnitude(self) -> ScalarField:
        return ScalarField(self.grid, np.linalg.norm(self.values, axis=-1))


@dataclass(frozen=True)
class InteriorMask:
    """Nodes whose max-norm box of radius ``delta`` lies inside the domain box.

    An empty mask is a valid state (delta too large for the box), exposed via
    ``is_empty`` rather than raised here; consumers that cannot work on an
    empty mask raise themselves.
    """

    grid: Grid
    delta: float
    flags: np.ndarray

    def __post_init__(self):
        if self.delta <= 0:
            raise ValueError("delta must be > 0")
        flags = np.asarray(self.flags, dtype=bool)
        if flags.shape != self.grid.shape:
            raise ValueError("flags shape does not match grid")
        out = flags.copy()
        out.setflags(write=False)
        object.__setattr__(self, "flags", out)

    @property
    def is_empty(self) -> bool:
        return not bool(self.flags.any())

    @property
    def count(self) -> int:
        return int(self.flags.sum())

    @property
    def measure(self) -> float:
        """Riemann measure of the mask, count * cell volume."""
        return self.count * self.grid.cell_volume


def interior_mask(grid: Grid, delta: float) -> InteriorMask:
    """Flag the nodes x with [x - delta, x + delta] inside the box on every axis."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    flags = np.ones(grid.shape, dtype=bool)
    for k in range(grid.dim):
        x = grid.axis(k)
        tol = _GEOM_RTOL * max(1.0, abs(grid.upper[k] - grid.lower[k]))
        ok = (x - delta >= grid.lower[k] - tol) & (x + delta <= grid.upper[k] + tol)
        shape = [1] * grid.dim
        shape[k] = grid.nodes[k]
        flags &= ok.reshape(shape)
    return InteriorMask(grid, float(delta), flags)


def gradient(u: ScalarField) -> VectorField:
    """Discrete gradient: central differences inside, one-sided second order
    at the boundary.  Exact for affine (and per-axis quadratic) data."""
    grid = u.grid
    comps = [
        np.gradient(u.values, grid.h[k], axis=k, edge_order=2)
        for k in range(grid.dim)
    ]
    return VectorField(grid, np.stack(comps, axis=-1))


def divergence(F: VectorField) -> ScalarField:
    """Discrete divergence with the same stencils as :func:`gradient`.

    The pair (gradient, divergence) is anti-adjoint in the trapezoid inner
    product up to a defect supported on the three outermost node layers of
    each axis; see :func:`adjointness_defect`.
    """
    grid = F.grid
    out = np.zeros(grid.shape)
    for k in range(grid.dim):
        out += np.gradient(F.values[..., k], grid.h[k], axis=k, edge_order=2)
    return ScalarField(grid, out)


def adjointness_defect(F: VectorField, phi: ScalarField) -> float:
    """Return <F, grad phi> + <div F, phi> in the trapezoid inner product.

    For the continuum operators this vanishes whenever phi vanishes on the
    boundary.  For the discrete pair the defect is exactly zero when phi
    vanishes on the three outermost node layers of every axis (the one-sided
    boundary rows then read only zeros and all interior rows cancel pairwise).
    Otherwise it is a pure boundary-layer quantity, independent of h: the sum
    splits per axis, and along each axis line the interior central-difference
    terms telescope, leaving the four outermost nodes at each end with weights
    that cancel the 1/h stencil factors.  Per axis the worst case over fields
    bounded by 1 is exactly 6 times the trapezoid measure of the transverse
    cross-section, so

        |defect| <= 6 * max|F| * max|phi| * sum_a prod_{b != a} side_b

    (in 1D the transverse measure is the empty product, giving plain 6).
    """
    if F.grid != phi.grid:
        raise ValueError("fields must share a grid")
    w = F.grid.quad_weights()
    g = gradient(phi)
    term1 = float(np.sum(w[..., None] * F.values * g.values))
    term2 = float(np.sum(w * divergence(F).values * phi.values))
    return term1 + term2


# ---------------------------------------------------------------------------
# serialization: CSV fields with a JSON grid sidecar

def write_grid_json(grid: Grid, path) -> None:
    payload = {
        "dim": grid.dim,
        "lower": list(grid.lower),
        "upper": list(grid.upper),
        "nodes": list(grid.nodes),
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def read_grid_json(path) -> Grid:
    payload = json.loads(Path(path).read_text())
    return Grid(
        payload["dim"],
        tuple(payload["lower"]),
        tuple(payload["upper"]),
        tuple(payload["nodes"]),
    )


def write_field_csv(field: ScalarField | VectorField, path) -> None:
    """Row-major node order; header ``x1[,x2],value...``."""
    grid = field.grid
    coords = grid.coords().reshape(-1, grid.dim)
    if isinstance(field, ScalarField):
        data = field.values.reshape(-1, 1)
        names = ["value"]
    else:
        data = field.values.reshape(-1, grid.dim)
        names = [f"value{k + 1}" for k in range(grid.dim)]
    header = ",".join([f"x{k + 1}" for k in range(grid.dim)] + names)
    np.savetxt(
        path,
        np.hstack([coords, data]),
        delimiter=",",
        header=header,
        comments="",
        fmt="%.17g",
    )


def read_field_csv(path, grid: Grid) -> ScalarField | VectorField:
    """Read a field written by :func:`write_field_csv` back onto ``grid``."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[0] != grid.num_nodes:
        raise ValueError(
            f"{path}: {data.shape[0]} rows, expected {grid.num_nodes} for grid"
        )
    ncols = data.shape[1] - grid.dim
    coords = grid.coords().reshape(-1, grid.dim)
    if not np.allclose(data[:, : grid.dim], coords, rtol=0, atol=1e-9):
        raise ValueError(f"{path}: node coordinates do not match grid")
    if ncols == 1:
        return ScalarField(grid, data[:, grid.dim].reshape(grid.shape))
    if ncols == grid.dim:
        return VectorField(grid, data[:, grid.dim :].reshape(grid.shape + (grid.dim,)))
    raise ValueError(f"{path}: unexpected column count {data.shape[1]}")
