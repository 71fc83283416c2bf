"""Uniform Cartesian grid, second-order discrete operators, quadrature, solvers.

Arrays are node-centered with shape (ny, nx); entry [j, i] sits at
(x_i, y_j).  Two boundary modes:

* ``periodic``  -- nodes x_i = i h, h = Lx / nx (no duplicated seam node).
* ``dirichlet`` -- nodes x_i = i h, h = Lx / (nx - 1), boundary nodes included;
  the physical boundary condition (v, phi) = (0, -1) is applied by the solver.

Snapshot format (External interface): a header line
``NSAC-SNAP v1 nx ny Lx Ly bc t`` followed by nx*ny rows ``x y phi u v p``
in row-major node order at full double precision.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

PERIODIC = "periodic"
DIRICHLET = "dirichlet"


class GridMismatchError(ValueError):
    pass


class SolverFailureError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg)
        self.residual = residual


@dataclass(frozen=True)
class Grid:
    nx: int
    ny: int
    Lx: float = 1.0
    Ly: float = 1.0
    bc: str = PERIODIC

    def __post_init__(self):
        if self.nx < 16 or self.ny < 16:
            raise ValueError("grid needs at least 16 nodes per direction")
        if self.bc not in (PERIODIC, DIRICHLET):
            raise ValueError(f"unknown boundary mode {self.bc!r}")
        if abs(self.Lx / self.nx - self.Ly / self.ny) > 1e-12 * (self.Lx / self.nx):
            raise ValueError("grid spacing must be isotropic (Lx/nx == Ly/ny)")

    @property
    def h(self) -> float:
        if self.bc == PERIODIC:
            return self.Lx / self.nx
        return self.Lx / (self.nx - 1)

    @property
    def shape(self):
        return (self.ny, self.nx)

    def axes(self):
        h = self.h
        return np.arange(self.nx) * h, np.arange(self.ny) * h

    def meshgrid(self):
        x, y = self.axes()
        return np.meshgrid(x, y)

    def points(self):
        """Node coordinates, shape (ny, nx, 2)."""
        X, Y = self.meshgrid()
        return np.stack([X, Y], axis=-1)


@dataclass
class ScalarField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise GridMismatchError(
                f"values shape {self.values.shape} != grid shape {self.grid.shape}")

    def copy(self):
        return ScalarField(self.grid, self.values.copy())


@dataclass
class VectorField:
    grid: Grid
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        self.u = np.asarray(self.u, dtype=float)
        self.v = np.asarray(self.v, dtype=float)
        if self.u.shape != self.grid.shape or self.v.shape != self.grid.shape:
            raise GridMismatchError("component shape does not match grid")

    def copy(self):
        return VectorField(self.grid, self.u.copy(), self.v.copy())

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.shape), np.zeros(grid.shape))


def _check_same_grid(*fields):
    g = fields[0].grid
    for f in fields[1:]:
        if f.grid != g:
            raise GridMismatchError("fields live on different grids")
    return g


# --- raw-array stencils ------------------------------------------------------

def _dx(a, h, bc):
    if bc == PERIODIC:
        return (np.roll(a, -1, axis=1) - np.roll(a, 1, axis=1)) / (2 * h)
    return np.gradient(a, h, axis=1, edge_order=2)


def _dy(a, h, bc):
    if bc == PERIODIC:
        return (np.roll(a, -1, axis=0) - np.roll(a, 1, axis=0)) / (2 * h)
    return np.gradient(a, h, axis=0, edge_order=2)


def _lap(a, h, bc):
    if bc == PERIODIC:
        return (np.roll(a, -1, 1) + np.roll(a, 1, 1) + np.roll(a, -1, 0)
                + np.roll(a, 1, 0) - 4 * a) / (h * h)
    out = np.empty_like(a)
    out[1:-1, 1:-1] = (a[1:-1, 2:] + a[1:-1, :-2] + a[2:, 1:-1] + a[:-2, 1:-1]
                       - 4 * a[1:-1, 1:-1]) / (h * h)
    # one-sided second-order copies for the boundary ring (rarely consumed)
    out[0, :], out[-1, :] = out[1, :], out[-2, :]
    out[:, 0], out[:, -1] = out[:, 1], out[:, -2]
    return out


def gradient(f: ScalarField) -> VectorField:
    g = f.grid
    return VectorField(g, _dx(f.values, g.h, g.bc), _dy(f.values, g.h, g.bc))


def divergence(w: VectorField) -> ScalarField:
    g = w.grid
    return ScalarField(g, _dx(w.u, g.h, g.bc) + _dy(w.v, g.h, g.bc))


def laplacian(f: ScalarField) -> ScalarField:
    g = f.grid
    return ScalarField(g, _lap(f.values, g.h, g.bc))


def integrate(f: ScalarField) -> float:
    g = f.grid
    if g.bc == PERIODIC:
        return float(g.h * g.h * np.sum(f.values))
    w = np.ones(g.shape)
    w[0, :] *= 0.5
    w[-1, :] *= 0.5
    w[:, 0] *= 0.5
    w[:, -1] *= 0.5
    return float(g.h * g.h * np.sum(w * f.values))


def integrate_values(grid: Grid, values: np.ndarray) -> float:
    return integrate(ScalarField(grid, values))


# --- spectral symbols (periodic) ---------------------------------------------

def _compact_symbol(grid: Grid):
    """Eigenvalues of the 5-point laplacian under the DFT (nonpositive)."""
    h = grid.h
    kx = np.fft.fftfreq(grid.nx) * grid.nx
    ky = np.fft.fftfreq(grid.ny) * grid.ny
    sx = np.sin(np.pi * kx / grid.nx) ** 2
    sy = np.sin(np.pi * ky / grid.ny) ** 2
    return -4.0 / (h * h) * (sy[:, None] + sx[None, :])


def _wide_symbol(grid: Grid):
    """Eigenvalues of div_h grad_h with centered first differences."""
    h = grid.h
    kx = np.fft.fftfreq(grid.nx) * grid.nx
    ky = np.fft.fftfreq(grid.ny) * grid.ny
    sx = np.sin(2 * np.pi * kx / grid.nx) ** 2
    sy = np.sin(2 * np.pi * ky / grid.ny) ** 2
    return -(sy[:, None] + sx[None, :]) / (h * h)


@dataclass
class PoissonResult:
    field: ScalarField
    mean_removed: bool
    residual: float


def _neumann_laplacian_matrix(grid: Grid):
    """5-point laplacian with homogeneous Neumann conditions (mirror ghosts)."""
    nx, ny, h = grid.nx, grid.ny, grid.h
    ex = np.ones(nx)
    ey = np.ones(ny)
    Tx = sp.diags([ex[:-1], -2 * ex, ex[:-1]], [-1, 0, 1], format="lil")
    Tx[0, 1] = 2.0
    Tx[-1, -2] = 2.0
    Ty = sp.diags([ey[:-1], -2 * ey, ey[:-1]], [-1, 0, 1], format="lil")
    Ty[0, 1] = 2.0
    Ty[-1, -2] = 2.0
    Ix = sp.identity(nx)
    Iy = sp.identity(ny)
    return (sp.kron(Iy, Tx) + sp.kron(Ty, Ix)).tocsr() / (h * h)


_MAXITER = 10_000


def _trapezoid_weights(grid: Grid):
    wx = np.ones(grid.nx)
    wy = np.ones(grid.ny)
    if grid.bc == DIRICHLET:
        wx[0] = wx[-1] = 0.5
        wy[0] = wy[-1] = 0.5
    return np.outer(wy, wx)


@lru_cache(maxsize=8)
def _neumann_factorization(grid: Grid):
    """LU of the Neumann -laplacian with one pinned node (cached per grid)."""
    A = (-_neumann_laplacian_matrix(grid)).tolil()
    pinned = A.copy()
    pinned.rows[0] = [0]
    pinned.data[0] = [1.0]
    solve_pinned = spla.factorized(pinned.tocsc())
    w = _trapezoid_weights(grid).ravel()
    return solve_pinned, A.tocsr(), w / w.sum()


def poisson_solve(rhs: ScalarField, stencil: str = "compact") -> PoissonResult:
    """Solve lap(u) = rhs with mean-zero gauge.

    ``stencil`` selects the 5-point laplacian ("compact") or the composition of
    the centered divergence and gradient ("wide", used by the pressure
    projection so that the corrected velocity is discretely solenoidal).
    """
    g = rhs.grid
    mean = integrate(rhs) / (g.Lx * g.Ly)
    mean_removed = abs(mean) > 1e-10
    b = rhs.values - mean
    if g.bc == PERIODIC:
        sym = _compact_symbol(g) if stencil == "compact" else _wide_symbol(g)
        bh = np.fft.fft2(b)
        with np.errstate(divide="ignore", invalid="ignore"):
            uh = np.where(np.abs(sym) > 1e-14, bh / sym, 0.0)
        u = np.real(np.fft.ifft2(uh))
        u -= np.mean(u)
        return PoissonResult(ScalarField(g, u), mean_removed, 0.0)
    if stencil != "compact":
        raise ValueError("wide stencil is only used in periodic mode")
    # the mirror-ghost Neumann laplacian is singular (constants in the right
    # null space, trapezoid weights in the left), so project the rhs onto the
    # compatible range, pin one node, and solve by cached LU
    solve, A, w = _neumann_factorization(g)
    bb = -b.ravel()
    bb = bb - (w @ bb)
    rhs_pinned = bb.copy()
    rhs_pinned[0] = 0.0
    u = solve(rhs_pinned)
    res = float(np.linalg.norm(A @ u - bb) / max(np.linalg.norm(bb), 1e-300))
    if res > 1e-8:
        raise SolverFailureError("neumann poisson solve inaccurate", residual=res)
    u = u - np.mean(u)
    return PoissonResult(ScalarField(g, u.reshape(g.shape)), mean_removed, res)


def helmholtz_solve(f: ScalarField, a: float, b: float,
                    boundary_value=0.0) -> ScalarField:
    """Solve (a I - b lap) u = f.

    In dirichlet mode u is pinned on the rim; ``boundary_value`` is either a
    scalar or a full-grid array whose boundary ring supplies the trace.
    """
    if a <= 0 or b < 0:
        raise ValueError("helmholtz_solve needs a > 0 and b >= 0")
    g = f.grid
    if b == 0:
        return ScalarField(g, f.values / a)
    if g.bc == PERIODIC:
        sym = _compact_symbol(g)
        uh = np.fft.fft2(f.values) / (a - b * sym)
        return ScalarField(g, np.real(np.fft.ifft2(uh)))
    # dirichlet: solve for interior unknowns, boundary pinned
    nx, ny, h = g.nx, g.ny, g.h
    if np.ndim(boundary_value) == 0:
        bnd = np.full(g.shape, float(boundary_value))
    else:
        bnd = np.asarray(boundary_value, dtype=float)
        if bnd.shape != g.shape:
            raise GridMismatchError("boundary data shape does not match grid")
    mi, mj = nx - 2, ny - 2
    ex = np.ones(mi)
    ey = np.ones(mj)
    Tx = sp.diags([ex[:-1], -2 * ex, ex[:-1]], [-1, 0, 1])
    Ty = sp.diags([ey[:-1], -2 * ey, ey[:-1]], [-1, 0, 1])
    L = (sp.kron(sp.identity(mj), Tx) + sp.kron(Ty, sp.identity(mi))) / (h * h)
    A = (a * sp.identity(mi * mj) - b * L).tocsr()
    rhs = f.values[1:-1, 1:-1].copy()
    coef = b / (h * h)
    rhs[0, :] += coef * bnd[0, 1:-1]
    rhs[-1, :] += coef * bnd[-1, 1:-1]
    rhs[:, 0] += coef * bnd[1:-1, 0]
    rhs[:, -1] += coef * bnd[1:-1, -1]
    rhs = rhs.ravel()
    u, info = spla.cg(A, rhs, rtol=1e-12, atol=0.0, maxiter=_MAXITER)
    res = float(np.linalg.norm(A @ u - rhs) / max(np.linalg.norm(rhs), 1e-300))
    if info != 0 and res > 1e-10:
        raise SolverFailureError(f"helmholtz CG did not converge (info={info})", residual=res)
    out = bnd.copy()
    out[1:-1, 1:-1] = u.reshape(mj, mi)
    return ScalarField(g, out)


# --- snapshot IO -------------------------------------------------------------

def save_snapshot(path, grid: Grid, t: float, phi: np.ndarray, u: np.ndarray,
                  v: np.ndarray, p: np.ndarray) -> None:
    X, Y = grid.meshgrid()
    cols = np.column_stack([arr.ravel() for arr in (X, Y, phi, u, v, p)])
    with open(path, "w") as fh:
        fh.write(f"NSAC-SNAP v1 {grid.nx} {grid.ny} {grid.Lx:.17g} {grid.Ly:.17g} "
                 f"{grid.bc} {t:.17g}\n")
        np.savetxt(fh, cols, fmt="%.17g")


def load_snapshot(path):
    """Returns (grid, t, phi, u, v, p) with arrays of shape (ny, nx)."""
    with open(path) as fh:
        header = fh.readline().split()
        if header[:2] != ["NSAC-SNAP", "v1"]:
            raise ValueError(f"{path}: not an NSAC-SNAP v1 file")
        nx, ny = int(header[2]), int(header[3])
        Lx, Ly = float(header[4]), float(header[5])
        bc = header[6]
        t = float(header[7])
        data = np.loadtxt(fh)
    if data.shape != (nx * ny, 6):
        raise ValueError(f"{path}: expected {nx * ny} rows of 6 columns")
    grid = Grid(nx, ny, Lx, Ly, bc)
    phi, u, v, p = (data[:, k].reshape(ny, nx) for k in range(2, 6))
    return grid, t, phi, u, v, p
