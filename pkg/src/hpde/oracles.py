"""Dense reference matrices assembled entry by entry.

These are deliberately written with explicit loops over cells and do not
call the stencil code, so they serve as independent oracles for small grids.
"""
from __future__ import annotations

import numpy as np
import scipy.linalg as sla

from .grid import FieldBC, GridSpec


def _idx2(i: int, j: int, ny: int) -> int:
    return i * ny + j


def _idx3(c: int, i: int, j: int, k: int, grid: GridSpec) -> int:
    return ((c * grid.nx + i) * grid.ny + j) * grid.nz + k


def mean_divergence_matrix(grid: GridSpec) -> np.ndarray:
    """Matrix of ``u -> D0 ubar`` (no flux through the walls)."""
    nx, ny, nz = grid.shape
    C = np.zeros((nx * ny, 2 * nx * ny * nz))
    for i in range(nx):
        for j in range(ny):
            row = _idx2(i, j, ny)
            for k in range(nz):
                w = 1.0 / nz
                # x-direction: (u[i+1] - u[i-1]) / (2 dx), ghost = -u[edge]
                if i + 1 < nx:
                    C[row, _idx3(0, i + 1, j, k, grid)] += w / (2 * grid.dx)
                else:
                    C[row, _idx3(0, i, j, k, grid)] += -w / (2 * grid.dx)
                if i - 1 >= 0:
                    C[row, _idx3(0, i - 1, j, k, grid)] -= w / (2 * grid.dx)
                else:
                    C[row, _idx3(0, i, j, k, grid)] -= -w / (2 * grid.dx)
                if j + 1 < ny:
                    C[row, _idx3(1, i, j + 1, k, grid)] += w / (2 * grid.dy)
                else:
                    C[row, _idx3(1, i, j, k, grid)] += -w / (2 * grid.dy)
                if j - 1 >= 0:
                    C[row, _idx3(1, i, j - 1, k, grid)] -= w / (2 * grid.dy)
                else:
                    C[row, _idx3(1, i, j, k, grid)] -= -w / (2 * grid.dy)
    return C


def projection_matrix(grid: GridSpec) -> np.ndarray:
    """Orthogonal projector onto ``{u : D0 ubar = 0}`` built from an explicit
    orthonormal basis of that subspace."""
    Z = sla.null_space(mean_divergence_matrix(grid))
    return Z @ Z.T


def apply_matrix_to_vector_field(M: np.ndarray, u: np.ndarray) -> np.ndarray:
    return (M @ u.ravel()).reshape(u.shape)


def neg_laplacian_matrix(grid: GridSpec, kind: str) -> np.ndarray:
    """5-point ``-Delta`` on the footprint with face ghosts (``dirichlet`` or
    ``neumann``)."""
    nx, ny = grid.shape2d
    s = -1.0 if kind == "dirichlet" else 1.0
    A = np.zeros((nx * ny, nx * ny))
    for i in range(nx):
        for j in range(ny):
            row = _idx2(i, j, ny)
            for di, dj, h2 in ((1, 0, grid.dx**2), (-1, 0, grid.dx**2), (0, 1, grid.dy**2), (0, -1, grid.dy**2)):
                A[row, row] += 1.0 / h2
                ii, jj = i + di, j + dj
                if 0 <= ii < nx and 0 <= jj < ny:
                    A[row, _idx2(ii, jj, ny)] -= 1.0 / h2
                else:
                    A[row, row] -= s / h2
    return A


def dirichlet_solve(f: np.ndarray, grid: GridSpec) -> np.ndarray:
    A = neg_laplacian_matrix(grid, "dirichlet")
    return np.linalg.solve(A, -f.ravel()).reshape(f.shape)


def neumann_solve(f: np.ndarray, g_source: np.ndarray, grid: GridSpec) -> np.ndarray:
    """Zero-mean pseudo-inverse solution of ``Delta q = f`` with boundary
    source ``g_source`` already expressed per cell."""
    A = neg_laplacian_matrix(grid, "neumann")
    rhs = -(f - g_source).ravel()
    rhs = rhs - rhs.mean()
    q = np.linalg.pinv(A) @ rhs
    return (q - q.mean()).reshape(f.shape)


def diffusion_matrix(grid: GridSpec, bc: FieldBC, nu: float, mu: float) -> np.ndarray:
    """``-nu Delta_h - mu d_zz`` on one scalar component with ghost BCs."""
    nx, ny, nz = grid.shape
    g = bc.ghost_factors(grid)
    n = nx * ny * nz
    A = np.zeros((n, n))

    def idx(i, j, k):
        return (i * ny + j) * nz + k

    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                row = idx(i, j, k)
                for axis, (c, h) in enumerate(((nu, grid.dx), (nu, grid.dy), (mu, grid.dz))):
                    coef = c / h**2
                    A[row, row] += 2.0 * coef
                    for side in (-1, 1):
                        p = [i, j, k]
                        p[axis] += side
                        if 0 <= p[axis] < grid.shape[axis]:
                            A[row, idx(*p)] -= coef
                        else:
                            A[row, row] -= coef * g[2 * axis + (side > 0)]
    return A
