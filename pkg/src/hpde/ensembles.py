"""Reproducible random and modal fields.

Random fields are truncated trigonometric sums with coefficients
``a_k ~ N(0, 1) * (1 + |k|)^(-decay)``.  Three families are available:

``free``
    cosines with random phases; no boundary condition is imposed.
``temperature``
    pure cosines, so the normal derivative vanishes on every face.
``velocity``
    sines in x and y and quarter-wave sines in z, which vanish on the side
    walls and the bottom and are flat at the surface; the result is then
    projected onto the discrete ``H1``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .calculus import diff1
from .errors import ConfigError
from .grid import GridSpec
from .helmholtz import project
from .poisson import PoissonConfig

KINDS = ("free", "temperature", "velocity")


@dataclass(frozen=True)
class EnsembleSpec:
    count: int = 100
    K: int = 4
    decay: float = 2.0
    seed: int = 0

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ConfigError("ensemble count must be >= 1")
        if int(self.K) != self.K or self.K < 0:
            raise ConfigError("ensemble K must be an integer >= 0")
        if not np.isfinite(self.decay):
            raise ConfigError("ensemble decay must be finite")

    def rng(self, member: int = 0) -> np.random.Generator:
        """Generator for one member, independent of evaluation order."""
        return np.random.default_rng([int(self.seed), int(member)])


def _basis(kind: str, k: int, t: np.ndarray, length: float, phase: float, vertical: bool) -> np.ndarray:
    if kind == "free":
        return np.cos(np.pi * k * t / length + phase)
    if kind == "temperature":
        return np.cos(np.pi * k * t / length)
    # velocity
    if vertical:
        return np.sin((2 * k + 1) * np.pi * t / (2.0 * length))
    return np.sin(np.pi * (k + 1) * t / length)


def random_scalar(grid: GridSpec, spec: EnsembleSpec, rng: np.random.Generator,
                  kind: str = "free") -> np.ndarray:
    """One band-limited scalar field."""
    if kind not in KINDS:
        raise ValueError(f"unknown field kind {kind!r}")
    x, y = grid.x, grid.y
    zeta = grid.z + grid.h  # depth coordinate in [0, h]
    out = np.zeros(grid.shape)
    K = spec.K
    amps = rng.standard_normal((K + 1, K + 1, K + 1))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(3, K + 1, K + 1, K + 1))
    for kx in range(K + 1):
        for ky in range(K + 1):
            for kz in range(K + 1):
                a = amps[kx, ky, kz] * (1.0 + np.sqrt(kx * kx + ky * ky + kz * kz)) ** (-spec.decay)
                ph = phases[:, kx, ky, kz]
                fx = _basis(kind, kx, x, grid.Lx, ph[0], False)
                fy = _basis(kind, ky, y, grid.Ly, ph[1], False)
                fz = _basis(kind, kz, zeta, grid.h, ph[2], True)
                out += a * fx[:, None, None] * fy[None, :, None] * fz[None, None, :]
    return out


def random_velocity(grid: GridSpec, spec: EnsembleSpec, rng: np.random.Generator,
                    cfg: PoissonConfig | None = None, constrained: bool = True) -> np.ndarray:
    kind = "velocity" if constrained else "free"
    v = np.stack([random_scalar(grid, spec, rng, kind), random_scalar(grid, spec, rng, kind)])
    return project(v, grid, cfg) if constrained else v


def stream_mode(grid: GridSpec) -> np.ndarray:
    """``psi = sin^2(pi x/Lx) sin^2(pi y/Ly)`` on the footprint."""
    X, Y = grid.mesh2d()
    return np.sin(np.pi * X / grid.Lx) ** 2 * np.sin(np.pi * Y / grid.Ly) ** 2


def discrete_curl(psi: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``(-D_y psi, D_x psi)`` with odd reflection across the walls.

    With these ghosts the column mean of the result has exactly zero discrete
    divergence and no wall flux, so it lies in the discrete ``H1``.
    """
    return np.stack([-diff1(psi, 1, grid.dy, -1.0, -1.0), diff1(psi, 0, grid.dx, -1.0, -1.0)])


def mode_velocity(grid: GridSpec, amplitude: float = 1.0) -> np.ndarray:
    """Divergence-free gyre with a quarter-cosine vertical profile (zero at
    the bottom, flat at the surface)."""
    curl = discrete_curl(stream_mode(grid), grid)
    profile = np.cos(np.pi * grid.z / (2.0 * grid.h))
    return amplitude * curl[..., None] * profile[None, None, None, :]


def mode_scalar(grid: GridSpec, k: tuple[int, int, int] = (1, 0, 0), amplitude: float = 1.0) -> np.ndarray:
    """``cos(kx pi x/Lx) cos(ky pi y/Ly) cos(kz pi (z+h)/h)``: satisfies zero
    Neumann data on every face."""
    X, Y, Z = grid.mesh()
    kx, ky, kz = k
    return amplitude * (np.cos(kx * np.pi * X / grid.Lx) * np.cos(ky * np.pi * Y / grid.Ly)
                        * np.cos(kz * np.pi * (Z + grid.h) / grid.h))


def decay_mode(grid: GridSpec) -> np.ndarray:
    """``(sin(pi x/Lx) sin(pi y/Ly) cos(pi z/(2h)), 0)``.

    An exact eigenvector of the discrete ``L1`` with ``alpha1 = 0``.
    """
    X, Y, Z = grid.mesh()
    v1 = np.sin(np.pi * X / grid.Lx) * np.sin(np.pi * Y / grid.Ly) * np.cos(np.pi * Z / (2.0 * grid.h))
    return np.stack([v1, np.zeros_like(v1)])


def decay_rate(grid: GridSpec, nu: float, mu: float, discrete: bool = False) -> float:
    """Eigenvalue of ``L1`` for :func:`decay_mode`."""
    if not discrete:
        return nu * ((np.pi / grid.Lx) ** 2 + (np.pi / grid.Ly) ** 2) + mu * (np.pi / (2 * grid.h)) ** 2
    sx = 4.0 / grid.dx**2 * np.sin(np.pi * grid.dx / (2 * grid.Lx)) ** 2
    sy = 4.0 / grid.dy**2 * np.sin(np.pi * grid.dy / (2 * grid.Ly)) ** 2
    sz = 4.0 / grid.dz**2 * np.sin(np.pi * grid.dz / (4 * grid.h)) ** 2
    return nu * (sx + sy) + mu * sz
