"""Elliptic operators, bilinear forms and explicit tendencies.

``L1 = -nu1 Delta_h - mu1 d_zz`` acts on each velocity component with the
velocity ghost rules, ``L2`` likewise on temperature.  The bilinear forms are
assembled face by face so that ``<L v, u> = a(v, u)`` holds exactly for any
pair of grid functions; the ghost rule of a face shows up as a half-cell
gradient term plus, on Robin faces, the surface term ``alpha * mu * int v u``.

Nonlinear terms use a centred advective form with face-averaged transport
velocities.  When the transport field has zero column-mean divergence the
form is exactly skew-symmetric and annihilates constants.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import kernels
from .calculus import (broadcast_z, div_h, faces_to_centers, grad_h,
                       integrate_from_top, integrate_from_top_faces)
from .errors import ConfigError
from .grid import ALL_NEUMANN, FACES, BCSet, FieldBC, GridSpec
from .helmholtz import project
from .norms import l2_2d
from .poisson import PoissonConfig


@dataclass(frozen=True)
class PhysParams:
    """Physical coefficients.  ``Q`` is a time-independent heat source on the
    grid, or ``None`` for no forcing."""

    nu1: float = 1e-2
    mu1: float = 1e-2
    nu2: float = 1e-2
    mu2: float = 1e-2
    f0: float = 1.0
    beta: float = 0.5
    alpha1: float = 0.1
    alpha2: float = 0.1
    Q: np.ndarray | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        for name in ("nu1", "mu1", "nu2", "mu2"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ConfigError(f"physics.{name} must be > 0")
        for name in ("alpha1", "alpha2"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val >= 0):
                raise ConfigError(f"physics.{name} must be ≥ 0")
        for name in ("f0", "beta"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"physics.{name} must be finite")
        if self.Q is not None:
            q = np.asarray(self.Q, dtype=np.float64)
            if not np.all(np.isfinite(q)):
                raise ConfigError("physics.Q must be finite")
            object.__setattr__(self, "Q", q)

    @property
    def bcs(self) -> BCSet:
        return BCSet(self.alpha1, self.alpha2)

    @property
    def velocity_bc(self) -> FieldBC:
        return self.bcs.velocity

    @property
    def temperature_bc(self) -> FieldBC:
        return self.bcs.temperature

    def source(self, grid: GridSpec) -> np.ndarray:
        if self.Q is None:
            return np.zeros(grid.shape)
        if self.Q.shape != grid.shape:
            raise ConfigError(f"Q has shape {self.Q.shape}, grid is {grid.shape}")
        return self.Q

    def coriolis(self, grid: GridSpec) -> np.ndarray:
        """``f = f0 (beta + y)`` at cell centres, shape ``(1, ny, 1)``."""
        return (self.f0 * (self.beta + grid.y))[None, :, None]


# --- linear operators ---------------------------------------------------------

def diffusion_coefficients(grid: GridSpec, nu: float, mu: float) -> tuple[float, float, float]:
    return nu / grid.dx**2, nu / grid.dy**2, mu / grid.dz**2


def _apply_diffusion(phi: np.ndarray, grid: GridSpec, nu: float, mu: float, bc: FieldBC,
                     shift: float = 0.0) -> np.ndarray:
    cx, cy, cz = diffusion_coefficients(grid, nu, mu)
    return kernels.helmholtz_apply(phi, shift, cx, cy, cz, bc.ghost_factors(grid))


def apply_L1(v: np.ndarray, grid: GridSpec, p: PhysParams) -> np.ndarray:
    bc = p.velocity_bc
    return np.stack([_apply_diffusion(v[c], grid, p.nu1, p.mu1, bc) for c in range(2)])


def apply_L2(theta: np.ndarray, grid: GridSpec, p: PhysParams) -> np.ndarray:
    return _apply_diffusion(theta, grid, p.nu2, p.mu2, p.temperature_bc)


def _face_form(a: np.ndarray, b: np.ndarray, grid: GridSpec, nu: float, mu: float, bc: FieldBC) -> float:
    faces = bc.faces()
    total = 0.0
    for axis, (coef, h) in enumerate(((nu, grid.dx), (nu, grid.dy), (mu, grid.dz))):
        w = coef * grid.dV / h**2
        da = np.diff(a, axis=axis)
        db = np.diff(b, axis=axis)
        total += w * float(np.sum(da * db))
        for side in (0, 1):
            face = faces[2 * axis + side]
            s = face.ghost_factor(h)
            edge = -1 if side else 0
            ab = float(np.sum(np.take(a, edge, axis=axis) * np.take(b, edge, axis=axis)))
            total += w * 0.5 * (1.0 - s) ** 2 * ab
            if face.kind == "robin" and face.alpha > 0:
                area = grid.dV / h
                total += face.alpha * coef * 0.25 * (1.0 + s) ** 2 * area * ab
    return total


def bilinear_a1(v: np.ndarray, u: np.ndarray, grid: GridSpec, p: PhysParams) -> float:
    """``int nu1 grad v : grad u + mu1 v_z . u_z + alpha1 mu1 int_top v . u``."""
    return sum(_face_form(v[c], u[c], grid, p.nu1, p.mu1, p.velocity_bc) for c in range(2))


def bilinear_a2(theta: np.ndarray, eta: np.ndarray, grid: GridSpec, p: PhysParams) -> float:
    return _face_form(theta, eta, grid, p.nu2, p.mu2, p.temperature_bc)


def robin_surface_term(v: np.ndarray, u: np.ndarray, grid: GridSpec, p: PhysParams) -> float:
    """Surface part of ``a1`` alone (zero when ``alpha1 = 0``)."""
    top = p.velocity_bc.z_hi
    if top.kind != "robin" or top.alpha == 0:
        return 0.0
    s = top.ghost_factor(grid.dz)
    return top.alpha * p.mu1 * 0.25 * (1 + s) ** 2 * grid.dA * float(np.sum(v[..., -1] * u[..., -1]))


def apply_A1(v: np.ndarray, grid: GridSpec, p: PhysParams, cfg: PoissonConfig | None = None) -> np.ndarray:
    """Hydrostatic Stokes operator ``P L1 v``."""
    return project(apply_L1(v, grid, p), grid, cfg)


def apply_A2(theta: np.ndarray, grid: GridSpec, p: PhysParams) -> np.ndarray:
    return apply_L2(theta, grid, p)


# --- vertical velocity and transport -----------------------------------------

class WDiagnosis(NamedTuple):
    center: np.ndarray
    faces: np.ndarray
    bottom: np.ndarray
    bottom_defect: float


def diagnose_w(v: np.ndarray, grid: GridSpec, bc: FieldBC | None = None) -> WDiagnosis:
    """``w(z) = int_z^0 div v`` at faces and cell centres.

    The top face is zero by construction.  The bottom-face value equals
    ``h * D0 vbar``; its ``L2(D)`` norm is the divergence-consistency defect.
    """
    bc = bc or BCSet().velocity
    div = div_h(v, grid, bc)
    faces = integrate_from_top_faces(div, grid.dz)
    bottom = faces[..., 0]
    return WDiagnosis(faces_to_centers(faces), faces, bottom, l2_2d(bottom, grid))


@dataclass(frozen=True)
class Transport:
    """Face velocities used by the advective operator."""

    ux: np.ndarray  # (nx+1, ny, nz)
    uy: np.ndarray  # (nx, ny+1, nz)
    wz: np.ndarray  # (nx, ny, nz+1)

    @classmethod
    def from_velocity(cls, v: np.ndarray, grid: GridSpec, bc: FieldBC | None = None) -> "Transport":
        nx, ny, nz = grid.shape
        ux = np.zeros((nx + 1, ny, nz))
        ux[1:-1] = 0.5 * (v[0][1:] + v[0][:-1])
        uy = np.zeros((nx, ny + 1, nz))
        uy[:, 1:-1] = 0.5 * (v[1][:, 1:] + v[1][:, :-1])
        w = diagnose_w(v, grid, bc)
        return cls(ux, uy, w.faces)


def _face_jumps(phi: np.ndarray, axis: int, s_lo: float, s_hi: float) -> np.ndarray:
    p = np.moveaxis(phi, axis, 0)
    jumps = np.empty((p.shape[0] + 1,) + p.shape[1:])
    jumps[1:-1] = p[1:] - p[:-1]
    jumps[0] = (1.0 - s_lo) * p[0]
    jumps[-1] = (s_hi - 1.0) * p[-1]
    return np.moveaxis(jumps, 0, axis)


def advect(phi: np.ndarray, tr: Transport, grid: GridSpec, bc: FieldBC) -> np.ndarray:
    """``v . grad phi + w phi_z`` in face-averaged centred form."""
    g = bc.ghost_factors(grid)
    out = np.zeros_like(phi)
    for axis, (U, h) in enumerate(((tr.ux, grid.dx), (tr.uy, grid.dy), (tr.wz, grid.dz))):
        flux = U * _face_jumps(phi, axis, g[2 * axis], g[2 * axis + 1])
        f = np.moveaxis(flux, axis, 0)
        out += np.moveaxis(0.5 * (f[1:] + f[:-1]) / h, 0, axis)
    return out


def buoyancy(theta: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``int_z^0 grad theta`` as a midpoint cumulative sum from the top."""
    return integrate_from_top(grad_h(theta, grid, ALL_NEUMANN), grid.dz)


def perp(v: np.ndarray) -> np.ndarray:
    return np.stack([-v[1], v[0]])


def momentum_forcing(v: np.ndarray, theta: np.ndarray, grid: GridSpec, p: PhysParams,
                     tr: Transport | None = None, nonlinear: bool = True) -> np.ndarray:
    """Unprojected ``(v.grad)v + w v_z + int_z^0 grad theta + f v_perp``."""
    out = buoyancy(theta, grid) + p.coriolis(grid) * perp(v)
    if nonlinear:
        bc = p.velocity_bc
        tr = tr or Transport.from_velocity(v, grid, bc)
        out += np.stack([advect(v[c], tr, grid, bc) for c in range(2)])
    return out


def momentum_rhs(v: np.ndarray, theta: np.ndarray, grid: GridSpec, p: PhysParams,
                 cfg: PoissonConfig | None = None, tr: Transport | None = None,
                 nonlinear: bool = True) -> np.ndarray:
    """``-P[(v.grad)v + w v_z + int_z^0 grad theta + f v_perp]``."""
    return -project(momentum_forcing(v, theta, grid, p, tr, nonlinear), grid, cfg)


def heat_rhs(v: np.ndarray, theta: np.ndarray, grid: GridSpec, p: PhysParams,
             tr: Transport | None = None, nonlinear: bool = True) -> np.ndarray:
    """``Q - v.grad theta - w theta_z``."""
    q = p.source(grid)
    if not nonlinear:
        return q.copy()
    tr = tr or Transport.from_velocity(v, grid, p.velocity_bc)
    return q - advect(theta, tr, grid, p.temperature_bc)


def gradient_field(q2d: np.ndarray, grid: GridSpec) -> np.ndarray:
    """z-independent horizontal gradient ``G q`` broadcast over depth."""
    return broadcast_z(grad_h(q2d, grid, ALL_NEUMANN), grid.nz)


__all__ = [
    "PhysParams", "apply_L1", "apply_L2", "bilinear_a1", "bilinear_a2", "apply_A1", "apply_A2",
    "diagnose_w", "Transport", "advect", "buoyancy", "momentum_forcing", "momentum_rhs",
    "heat_rhs", "robin_surface_term", "gradient_field", "FACES",
]
