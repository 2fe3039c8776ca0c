"""Phase field on a structured node grid and its Euler-Lagrange solve."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional, Union

import numpy as np

from . import kernels
from .errors import NoConvergence, NonConformingSpacing, OutOfDomain, ResolutionTooCoarse
from .geometry import Box, Domain
from .params import SolverParams

if TYPE_CHECKING:
    from .coupling import SurfaceMeasure

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform node grid over a box: ``dims`` cells, ``dims + 1`` nodes per axis."""

    origin: np.ndarray
    h: float
    dims: tuple[int, int, int]

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(n + 1 for n in self.dims)

    @property
    def upper(self) -> np.ndarray:
        return self.origin + self.h * np.asarray(self.dims, dtype=float)

    @property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        mask[[0, -1], :, :] = True
        mask[:, [0, -1], :] = True
        mask[:, :, [0, -1]] = True
        return mask

    def node_coords(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        return tuple(self.origin[a] + self.h * np.arange(self.shape[a]) for a in range(3))

    def nodes(self) -> np.ndarray:
        """All node positions as an ``(N, 3)`` array in C order."""
        x, y, z = self.node_coords()
        X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
        return np.stack([X.ravel(), Y.ravel(), Z.ravel()], axis=1)

    def contains(self, p: np.ndarray, tol: float = 1e-12) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return np.all((p >= self.origin - tol) & (p <= self.upper + tol), axis=-1)


def make_grid(domain: Union[Domain, Box], h: float) -> Grid:
    box = domain.outer_box if isinstance(domain, Domain) else domain
    n = box.lengths / h
    dims = np.rint(n)
    if np.any(np.abs(n - dims) > 1e-9) or np.any(dims < 2):
        raise NonConformingSpacing(f"h={h:g} does not divide box edges {box.lengths.tolist()}")
    return Grid(box.lo.copy(), float(h), tuple(int(d) for d in dims))


@dataclass(frozen=True, eq=False)
class PhaseField:
    grid: Grid
    values: np.ndarray
    iterations: int = 0
    residual: float = 0.0

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            raise ValueError(f"field shape {v.shape} does not match grid {self.grid.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)


def constant_field(grid: Grid, value: float = 1.0) -> PhaseField:
    return PhaseField(grid, np.full(grid.shape, float(value)))


def field_from_function(grid: Grid, fn) -> PhaseField:
    x, y, z = grid.node_coords()
    X, Y, Z = np.meshgrid(x, y, z, indexing="ij")
    return PhaseField(grid, np.broadcast_to(fn(X, Y, Z), grid.shape).astype(float))


def sample_field(u: PhaseField, p: np.ndarray) -> Union[float, np.ndarray]:
    """Trilinear interpolation at a point or an ``(N, 3)`` array of points."""
    p = np.asarray(p, dtype=float)
    single = p.ndim == 1
    pts = np.atleast_2d(p)
    if not np.all(u.grid.contains(pts)):
        raise OutOfDomain("sample point outside the grid box")
    vals = kernels.trilinear(u.values, pts, u.grid.origin, u.grid.h)
    return float(vals[0]) if single else vals


def _system(grid: Grid, node_mass: np.ndarray, params: SolverParams):
    """Stencil coefficient and zeroth-order diagonal of the SPD system for v = 1 - u."""
    eps, h = params.epsilon, grid.h
    lap = eps * h
    diag = np.full(grid.shape, h ** 3 / (4.0 * eps))
    diag += node_mass / params.c_eps
    diag[grid.boundary_mask] = 0.0
    return lap, diag


def solve_phase_field(
    grid: Grid,
    measure: "SurfaceMeasure",
    params: SolverParams,
    tol: Optional[float] = None,
    initial: Optional[PhaseField] = None,
) -> PhaseField:
    """Unique minimizer of the discrete phase-field energy for a fixed surface measure.

    Minimizes  eps*h*sum_edges (du)^2 + h^3/(4 eps) sum (1-u)^2 + (1/c_eps) sum w u^2
    with u = 1 on the boundary nodes. The unknown is v = 1 - u, which solves
    the M-matrix system  (eps h L + h^3/(4 eps) + W/c_eps) v = w / c_eps
    by Jacobi-preconditioned conjugate gradients.
    """
    tol = params.cg_tol if tol is None else tol
    if grid.h > params.epsilon / 2.0 * (1 + 1e-12):
        raise ResolutionTooCoarse(f"h={grid.h:g} exceeds eps/2={params.epsilon / 2:g}")
    w = np.asarray(measure.node_mass, dtype=float)
    if w.shape != grid.shape:
        raise ValueError("measure lives on a different grid")
    lap, diag = _system(grid, w, params)
    bmask = grid.boundary_mask
    b = w / params.c_eps
    b[bmask] = 0.0
    x0 = None if initial is None else 1.0 - initial.values
    v, iters, res = _pcg(lap, diag, b, bmask, tol, 50 * sum(grid.dims), x0)
    logger.debug("phase-field CG: %d iterations, relative residual %.3e", iters, res)
    return PhaseField(grid, 1.0 - v, iters, res)


def _pcg(lap, diag, b, bmask, tol, maxiter, x0=None):
    bnorm = np.linalg.norm(b)
    x = np.zeros_like(b)
    if bnorm == 0.0:
        return x, 0, 0.0
    Ax = np.empty_like(b)
    if x0 is not None:
        x[...] = x0
        x[bmask] = 0.0
        r = b - kernels.stencil_apply(x, diag, lap, Ax)
    else:
        r = b.copy()
    inv = 1.0 / (diag + 6.0 * lap)
    inv[bmask] = 0.0
    z = inv * r
    p = z.copy()
    rz = float(np.vdot(r, z))
    res = np.linalg.norm(r) / bnorm
    it = 0
    # written so that a NaN residual keeps iterating into NoConvergence
    while not res <= tol:
        if it >= maxiter:
            raise NoConvergence(it, res)
        kernels.stencil_apply(p, diag, lap, Ax)
        alpha = rz / float(np.vdot(p, Ax))
        x += alpha * p
        r -= alpha * Ax
        z = inv * r
        rz_new = float(np.vdot(r, z))
        p *= rz_new / rz
        p += z
        rz = rz_new
        res = np.linalg.norm(r) / bnorm
        it += 1
    return x, it, float(res)


def field_energy_terms(u: PhaseField, node_mass: np.ndarray, params: SolverParams) -> tuple[float, float, float]:
    """(Dirichlet, potential, coupling) terms of the discrete quadratic energy."""
    h, eps = u.grid.h, params.epsilon
    v = u.values
    dir_sum = sum(float(np.sum(np.diff(v, axis=a) ** 2)) for a in range(3))
    dirichlet = eps * h * dir_sum
    potential = h ** 3 / (4.0 * eps) * float(np.sum((1.0 - v) ** 2))
    coupling = float(np.sum(node_mass * v * v)) / params.c_eps
    return dirichlet, potential, coupling


def quadratic_energy(u: PhaseField, node_mass: np.ndarray, params: SolverParams) -> float:
    return float(sum(field_energy_terms(u, node_mass, params)))
