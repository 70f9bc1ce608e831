"""Ghost-cell finite differences, column integrals and quadrature.

Every stencil is second-order centred.  Boundary conditions enter only
through the ghost factor ``s`` of each face (``ghost = s * boundary cell``),
so the same code serves Dirichlet, Neumann and Robin faces.

With the default tags, ``div_h`` (mirror-negate ghosts) is exactly minus the
adjoint of ``grad_h`` (mirror ghosts) in the cell-volume inner product.
"""
from __future__ import annotations

import numpy as np

from .grid import ALL_DIRICHLET, ALL_NEUMANN, FieldBC, GridSpec


def pad_axis(a: np.ndarray, axis: int, s_lo: float, s_hi: float) -> np.ndarray:
    """Return ``a`` with one ghost layer on each side of ``axis``."""
    a = np.moveaxis(a, axis, 0)
    out = np.empty((a.shape[0] + 2,) + a.shape[1:], dtype=np.float64)
    out[1:-1] = a
    out[0] = s_lo * a[0]
    out[-1] = s_hi * a[-1]
    return np.moveaxis(out, 0, axis)


def _factors(bc: FieldBC, grid: GridSpec, axis: int) -> tuple[float, float]:
    g = bc.ghost_factors(grid)
    return float(g[2 * axis]), float(g[2 * axis + 1])


def diff1(a: np.ndarray, axis: int, spacing: float, s_lo: float, s_hi: float) -> np.ndarray:
    """Centred first difference ``(a[i+1] - a[i-1]) / (2 spacing)``."""
    p = np.moveaxis(pad_axis(a, axis, s_lo, s_hi), axis, 0)
    return np.moveaxis((p[2:] - p[:-2]) / (2.0 * spacing), 0, axis)


def diff2(a: np.ndarray, axis: int, spacing: float, s_lo: float, s_hi: float) -> np.ndarray:
    """Three-point second difference."""
    p = np.moveaxis(pad_axis(a, axis, s_lo, s_hi), axis, 0)
    return np.moveaxis((p[:-2] - 2.0 * p[1:-1] + p[2:]) / spacing**2, 0, axis)


def d_x(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    return diff1(phi, 0, grid.dx, *_factors(bc, grid, 0))


def d_y(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    return diff1(phi, 1, grid.dy, *_factors(bc, grid, 1))


def d_z(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    return diff1(phi, 2, grid.dz, *_factors(bc, grid, 2))


def d_zz(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    return diff2(phi, 2, grid.dz, *_factors(bc, grid, 2))


def grad_h(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    """Horizontal gradient of a 3D ``(nx, ny, nz)`` or 2D ``(nx, ny)`` field.

    Returns an array with a leading component axis of length 2.
    """
    return np.stack([d_x(phi, grid, bc), d_y(phi, grid, bc)])


def div_h(u: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_DIRICHLET) -> np.ndarray:
    """Horizontal divergence of a ``(2, ...)`` vector field."""
    return d_x(u[0], grid, bc) + d_y(u[1], grid, bc)


def laplacian_h(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    return (diff2(phi, 0, grid.dx, *_factors(bc, grid, 0))
            + diff2(phi, 1, grid.dy, *_factors(bc, grid, 1)))


def laplacian(phi: np.ndarray, grid: GridSpec, bc: FieldBC = ALL_NEUMANN) -> np.ndarray:
    return laplacian_h(phi, grid, bc) + d_zz(phi, grid, bc)


def vertical_average(phi: np.ndarray) -> np.ndarray:
    """Midpoint-rule column mean ``(1/h) * integral over (-h, 0)``.

    Works on scalars ``(nx, ny, nz)`` and vectors ``(2, nx, ny, nz)``; the
    vertical axis is always last.
    """
    nz = phi.shape[-1]
    acc = phi[..., 0].copy()
    for k in range(1, nz):  # fixed order
        acc += phi[..., k]
    return acc / nz


def broadcast_z(a2d: np.ndarray, nz: int) -> np.ndarray:
    """Repeat a 2D (or stacked 2D) field over ``nz`` levels."""
    return np.repeat(a2d[..., None], nz, axis=-1)


def integrate_from_top_faces(f: np.ndarray, dz: float) -> np.ndarray:
    """Values of ``int_z^0 f`` at the ``nz + 1`` horizontal faces.

    Face ``m`` sits at ``z = -h + m dz``; the top face (index ``nz``) is zero
    and the bottom face carries the full column integral.
    """
    nz = f.shape[-1]
    out = np.zeros(f.shape[:-1] + (nz + 1,))
    for m in range(nz - 1, -1, -1):
        out[..., m] = out[..., m + 1] + dz * f[..., m]
    return out


def faces_to_centers(faces: np.ndarray) -> np.ndarray:
    return 0.5 * (faces[..., :-1] + faces[..., 1:])


def integrate_from_top(f: np.ndarray, dz: float) -> np.ndarray:
    """Midpoint cumulative integral ``int_z^0 f`` evaluated at cell centres."""
    return faces_to_centers(integrate_from_top_faces(f, dz))


def cell_sum(a: np.ndarray) -> float:
    """Deterministic sum of all entries."""
    return float(np.sum(a, dtype=np.float64))


def integrate(phi: np.ndarray, grid: GridSpec) -> float:
    """Midpoint quadrature over the 3D box."""
    return grid.dV * cell_sum(phi)


def integrate2d(phi: np.ndarray, grid: GridSpec) -> float:
    return grid.dA * cell_sum(phi)
