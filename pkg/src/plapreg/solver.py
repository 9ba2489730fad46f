"""Energy minimization for the regularized p-Dirichlet functional.

The discrete energy is

    E(u) = sum_cells vol * L_eps(c(u)) + sum_nodes w * u * f

where c(u) is the cell-centered gradient (forward difference per cell in
1D, corner-averaged differences per cell in 2D) and w are trapezoid node
weights for the source term.  With this pairing the exact gradient of E
with respect to an interior node value equals minus the node weight times
the conservative flux-difference operator, so the Euler-Lagrange residual
reported here is the first variation of the energy and vanishes at the
discrete minimizer (no separate adjointness defect enters the solve).

Minimization is damped Newton on the interior unknowns with the closed
form cell Hessians, an Armijo backtracking line search, and a gradient
descent fallback if a Newton direction ever fails to decrease the energy.
For small eps the solve walks a geometric eps continuation path, warm
starting each stage, which keeps Newton steps well scaled even when the
initial iterate has vanishing gradient.

The node-based operators in :mod:`plapreg.fields` stay the analysis tools
(norms, seminorms, transforms of the solution); the cell machinery here is
internal to the solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
import csv
import json

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .fields import Grid, ScalarField, write_field_csv, write_grid_json
from .pointwise import PLapParams, L_eps, grad_L_eps, hess_L_eps

__all__ = [
    "ProblemSpec",
    "SolveResult",
    "SolverError",
    "energy",
    "energy_and_gradient",
    "solve",
    "el_residual",
    "energy_upper_bound",
    "grad_tolerance",
    "residual_tolerance",
    "write_solve_result",
]

MAX_ITER_DEFAULT = 200
_ARMIJO_C = 1e-4
_BACKTRACK_MAX = 60
# boundary values of u are compared against g with this absolute slack
_BOUNDARY_ATOL = 1e-12


class SolverError(RuntimeError):
    """A solve failed in a context that cannot continue (e.g. inside a sweep)."""


@dataclass(frozen=True)
class ProblemSpec:
    """Grid, exponents, source f and Dirichlet trace g (read on the boundary)."""

    grid: Grid
    params: PLapParams
    f: ScalarField
    g: ScalarField

    def __post_init__(self):
        if self.f.grid != self.grid or self.g.grid != self.grid:
            raise ValueError("f and g must live on the problem grid")

    def with_params(self, params: PLapParams) -> "ProblemSpec":
        return ProblemSpec(self.grid, params, self.f, self.g)


@dataclass(frozen=True)
class SolveResult:
    u: ScalarField
    energy: float
    el_residual: float
    iterations: int
    converged: bool
    trace: list = field(default_factory=list)  # (iteration, energy, grad_norm)


# ---------------------------------------------------------------------------
# cell-centered machinery

def _cell_gradients(grid: Grid, vals: np.ndarray) -> np.ndarray:
    """Gradient per cell, shape (ncells..., dim)."""
    if grid.dim == 1:
        (h,) = grid.h
        return ((vals[1:] - vals[:-1]) / h)[:, None]
    hx, hy = grid.h
    cx = (vals[1:, :-1] + vals[1:, 1:] - vals[:-1, :-1] - vals[:-1, 1:]) / (2 * hx)
    cy = (vals[:-1, 1:] + vals[1:, 1:] - vals[:-1, :-1] - vals[1:, :-1]) / (2 * hy)
    return np.stack([cx, cy], axis=-1)


def _scatter_flux(grid: Grid, flux: np.ndarray) -> np.ndarray:
    """Adjoint of _cell_gradients scaled by cell volume.

    Returns the node array sum_cells vol * <flux_cell, d c_cell / d u_node>,
    i.e. the gradient of sum_cells vol * L(c) once flux = dL/dc.
    """
    vol = grid.cell_volume
    out = np.zeros(grid.shape)
    if grid.dim == 1:
        (h,) = grid.h
        gx = vol * flux[:, 0] / h
        out[1:] += gx
        out[:-1] -= gx
        return out
    hx, hy = grid.h
    gx = vol * flux[..., 0] / (2 * hx)
    gy = vol * flux[..., 1] / (2 * hy)
    out[1:, :-1] += gx - gy
    out[1:, 1:] += gx + gy
    out[:-1, :-1] += -gx - gy
    out[:-1, 1:] += -gx + gy
    return out


def _check_boundary(spec: ProblemSpec, u: ScalarField) -> None:
    bnd = spec.grid.boundary_flags()
    scale = 1.0 + float(np.max(np.abs(spec.g.values)))
    gap = np.max(np.abs(u.values[bnd] - spec.g.values[bnd]))
    if gap > _BOUNDARY_ATOL * scale:
        raise ValueError(f"u does not match g on the boundary (max gap {gap:.3e})")


def energy(spec: ProblemSpec, u: ScalarField) -> float:
    """Discrete energy of an admissible field (u = g on the boundary)."""
    _check_boundary(spec, u)
    return _energy_raw(spec, u.values)


def _energy_raw(spec: ProblemSpec, vals: np.ndarray, eps: float | None = None) -> float:
    p = spec.params.p
    eps = spec.params.eps if eps is None else eps
    c = _cell_gradients(spec.grid, vals)
    e_cells = spec.grid.cell_volume * float(np.sum(L_eps(c, eps, p)))
    w = spec.grid.quad_weights()
    return e_cells + float(np.sum(w * vals * spec.f.values))


def _gradient_raw(spec: ProblemSpec, vals: np.ndarray, eps: float | None = None) -> np.ndarray:
    p = spec.params.p
    eps = spec.params.eps if eps is None else eps
    c = _cell_gradients(spec.grid, vals)
    flux = grad_L_eps(c, eps, p)
    out = _scatter_flux(spec.grid, flux)
    out += spec.grid.quad_weights() * spec.f.values
    return out


def energy_and_gradient(spec: ProblemSpec, u: ScalarField) -> tuple[float, ScalarField]:
    """Energy and its exact nodal gradient (all nodes, boundary included)."""
    _check_boundary(spec, u)
    return _energy_raw(spec, u.values), ScalarField(
        spec.grid, _gradient_raw(spec, u.values)
    )


def _cell_node_indices(grid: Grid) -> np.ndarray:
    """Flat node index per cell corner, shape (ncells, 2**dim)."""
    ids = np.arange(grid.num_nodes).reshape(grid.shape)
    if grid.dim == 1:
        return np.stack([ids[:-1], ids[1:]], axis=-1)
    return np.stack(
        [ids[:-1, :-1], ids[1:, :-1], ids[:-1, 1:], ids[1:, 1:]], axis=-1
    ).reshape(-1, 4)


def _cell_jacobian(grid: Grid) -> np.ndarray:
    """d c / d u_corner, shape (dim, 2**dim), corner order as above."""
    if grid.dim == 1:
        (h,) = grid.h
        return np.array([[-1.0 / h, 1.0 / h]])
    hx, hy = grid.h
    # corners: (0,0), (1,0), (0,1), (1,1)
    jx = np.array([-1.0, 1.0, -1.0, 1.0]) / (2 * hx)
    jy = np.array([-1.0, -1.0, 1.0, 1.0]) / (2 * hy)
    return np.stack([jx, jy])


def _assemble_hessian(spec: ProblemSpec, vals: np.ndarray, eps: float) -> sp.csr_matrix:
    grid = spec.grid
    c = _cell_gradients(grid, vals).reshape(-1, grid.dim)
    Hc = hess_L_eps(c, eps, spec.params.p)
    J = _cell_jacobian(grid)
    blocks = grid.cell_volume * np.einsum("ka,ckl,lb->cab", J, Hc, J)
    idx = _cell_node_indices(grid)
    m = idx.shape[1]
    rows = np.repeat(idx, m, axis=1).ravel()
    cols = np.tile(idx, (1, m)).ravel()
    n = grid.num_nodes
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


# ---------------------------------------------------------------------------
# tolerances tied to the convergence contract

def grad_tolerance(energy_value: float) -> float:
    return 1e-10 * (1.0 + abs(energy_value))


def residual_tolerance(spec: ProblemSpec) -> float:
    w = spec.grid.quad_weights()
    f_l2 = float(np.sqrt(np.sum(w * spec.f.values**2)))
    return 1e-6 * f_l2 + 1e-10


def el_residual(spec: ProblemSpec, u: ScalarField) -> float:
    """RMS over interior nodes of div(grad L(grad u)) - f.

    Computed from the first variation of the discrete energy: the residual
    at an interior node is minus the energy gradient divided by the node
    weight, which is the conservative flux-difference form of the operator.
    """
    interior = ~spec.grid.boundary_flags()
    g = _gradient_raw(spec, u.values)
    w = spec.grid.quad_weights()
    res = -g[interior] / w[interior]
    return float(np.sqrt(np.mean(res**2)))


def energy_upper_bound(spec: ProblemSpec, u0: ScalarField) -> float:
    """Energy bound sum vol*(1 + |c(u0)|^2)^(p/2)/p + sum w*u0*f, valid for eps <= 1.

    Dominates E(u0) cell by cell, hence dominates the minimum energy when
    u0 is admissible.
    """
    if spec.params.eps > 1.0:
        raise ValueError("bound requires eps <= 1")
    _check_boundary(spec, u0)
    p = spec.params.p
    c = _cell_gradients(spec.grid, u0.values)
    bulk = spec.grid.cell_volume * float(
        np.sum((1.0 + np.sum(c * c, axis=-1)) ** (p / 2.0) / p)
    )
    w = spec.grid.quad_weights()
    return bulk + float(np.sum(w * u0.values * spec.f.values))


# ---------------------------------------------------------------------------
# the solve

def _harmonic_extension(spec: ProblemSpec) -> np.ndarray:
    """Solve the discrete Laplace equation with trace g (p = 2 energy, f = 0)."""
    grid = spec.grid
    vals = spec.g.values.copy()
    int_flat = (~grid.boundary_flags()).ravel()
    lap = ProblemSpec(
        grid, PLapParams(p=2.0, eps=1.0), ScalarField.constant(grid, 0.0), spec.g
    )
    K = _assemble_hessian(lap, vals, eps=1.0)
    g = _gradient_raw(lap, vals).ravel()[int_flat]
    Kii = K[int_flat][:, int_flat]
    vals.ravel()[int_flat] -= spla.spsolve(Kii.tocsc(), g)
    return vals


def _eps_path(eps: float) -> list[float]:
    """Geometric continuation path ending at eps, starting no higher than 0.1."""
    if eps >= 0.1:
        return [eps]
    n_dec = int(np.ceil(np.log10(0.1 / eps)))
    return [0.1 * (eps / 0.1) ** (k / n_dec) for k in range(n_dec + 1)]


def solve(
    spec: ProblemSpec,
    u0: ScalarField | None = None,
    max_iter: int = MAX_ITER_DEFAULT,
) -> SolveResult:
    """Minimize the discrete energy over interior nodes at fixed trace g.

    The minimizer is unique (the energy is strictly convex for eps > 0), so
    the result does not depend on u0 beyond the stopping tolerance.  A result
    with converged = False is returned if the iteration cap is hit.
    """
    if spec.params.eps <= 0.0:
        raise ValueError("solve requires eps > 0")
    grid = spec.grid
    interior = ~grid.boundary_flags()
    int_flat = interior.ravel()
    w_int = grid.quad_weights()[interior]

    if u0 is None:
        vals = _harmonic_extension(spec)
    else:
        if u0.grid != grid:
            raise ValueError("u0 must live on the problem grid")
        vals = u0.values.copy()
        vals[grid.boundary_flags()] = spec.g.values[grid.boundary_flags()]

    tol_res = residual_tolerance(spec)
    trace: list[tuple[int, float, float]] = []
    it_total = 0
    converged = False

    path = _eps_path(spec.params.eps)
    for stage, eps_k in enumerate(path):
        final = stage == len(path) - 1
        # intermediate stages only need a rough minimizer to warm start
        stage_scale = 1.0 if final else 1e6
        prev_g_norm = np.inf
        polishing = False
        stall = 0
        while it_total < max_iter:
            e_val = _energy_raw(spec, vals, eps_k)
            g_full = _gradient_raw(spec, vals, eps_k)
            g_int = g_full.ravel()[int_flat]
            g_norm = float(np.linalg.norm(g_int))
            res = float(np.sqrt(np.mean((g_int / w_int) ** 2)))
            trace.append((it_total, e_val, g_norm))
            if g_norm <= grad_tolerance(e_val) * stage_scale and (
                not final or res <= tol_res
            ):
                converged = final
                break
            if polishing:
                stall = stall + 1 if g_norm >= 0.5 * prev_g_norm else 0
                if stall >= 8:
                    break  # at the rounding floor of the gradient
            prev_g_norm = g_norm

            K = _assemble_hessian(spec, vals, eps_k)
            Kii = K[int_flat][:, int_flat].tocsc()
            step = spla.spsolve(Kii, -g_int)
            slope = float(np.dot(g_int, step))
            polishing = slope < 0.0 and _ARMIJO_C * (-slope) <= 1e-15 * (1.0 + abs(e_val))
            if polishing:
                # predicted decrease is below the energy's float resolution:
                # the line search would only compare rounding noise, so take
                # the full Newton step and let the gradient norm decide
                vals = vals.copy()
                vals.ravel()[int_flat] += step
            else:
                vals, ok = _line_search(spec, vals, int_flat, step, e_val, g_int, eps_k)
                if not ok:
                    # fallback: gradient descent direction, same Armijo search
                    vals, ok = _line_search(
                        spec, vals, int_flat, -g_int, e_val, g_int, eps_k
                    )
                    if not ok:
                        break  # no decrease possible: at numerical stationarity
            it_total += 1
        if not final and it_total >= max_iter:
            break

    e_val = _energy_raw(spec, vals)
    u = ScalarField(grid, vals)
    res = el_residual(spec, u)
    if trace and trace[-1][0] != it_total:
        g_int = _gradient_raw(spec, vals).ravel()[int_flat]
        trace.append((it_total, e_val, float(np.linalg.norm(g_int))))
    converged = converged and res <= tol_res
    return SolveResult(
        u=u,
        energy=e_val,
        el_residual=res,
        iterations=it_total,
        converged=converged,
        trace=trace,
    )


def _line_search(spec, vals, int_flat, direction, e0, g_int, eps_k):
    """Armijo backtracking along an interior direction; returns (new_vals, ok)."""
    slope = float(np.dot(g_int, direction))
    if slope >= 0.0:
        return vals, False
    t = 1.0
    for _ in range(_BACKTRACK_MAX):
        trial = vals.copy()
        trial.ravel()[int_flat] += t * direction
        e_trial = _energy_raw(spec, trial, eps_k)
        # strict decrease: sufficient-decrease alone can round to equality
        # once t*slope underflows the energy's resolution
        if e_trial <= e0 + _ARMIJO_C * t * slope and e_trial < e0:
            return trial, True
        t *= 0.5
    return vals, False


# ---------------------------------------------------------------------------
# output

def write_solve_result(
    result: SolveResult, spec: ProblemSpec, outdir, basename: str = "solution"
) -> dict:
    """Write <basename>.csv/.json, grid.json and trace.csv; returns the summary."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_grid_json(spec.grid, outdir / "grid.json")
    write_field_csv(result.u, outdir / f"{basename}.csv")
    with open(outdir / "trace.csv", "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["iter", "energy", "grad_norm"])
        for row in result.trace:
            wr.writerow([row[0], repr(row[1]), repr(row[2])])
    summary = {
        "energy": result.energy,
        "el_residual": result.el_residual,
        "iterations": result.iterations,
        "converged": result.converged,
        "params": {
            "p": spec.params.p,
            "eps": spec.params.eps,
            "s": spec.params.s,
            "theta": spec.params.theta,
            "q_nik": spec.params.q_nik,
        },
    }
    (outdir / f"{basename}.json").write_text(
        json.dumps(summary, sort_keys=True, indent=2) + "\n"
    )
    return summary
