"""IMEX time stepping of the projected primitive equations.

Diffusion is implicit, every other term explicit.  After the implicit
velocity solve the result is projected back onto the discrete ``H1``
(pressure-correction splitting).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .errors import CFLError, ConfigError, SolverError
from .grid import FieldBC, GridSpec
from .helmholtz import project
from .norms import inner, l2
from .operators import (PhysParams, Transport, bilinear_a1, bilinear_a2, diagnose_w,
                        diffusion_coefficients, heat_rhs, momentum_forcing, momentum_rhs)
from .poisson import PoissonConfig

SCHEMES = ("imex_euler", "imex_cnab2")


@dataclass(frozen=True)
class State:
    """Prognostic state.  ``prev`` stores the explicit tendencies of the
    previous step for the two-step scheme."""

    v: np.ndarray
    theta: np.ndarray
    t: float = 0.0
    prev: tuple[np.ndarray, np.ndarray] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        v = np.asarray(self.v, dtype=np.float64)
        th = np.asarray(self.theta, dtype=np.float64)
        if v.ndim != 4 or v.shape[0] != 2 or v.shape[1:] != th.shape:
            raise ValueError(f"inconsistent state shapes {v.shape} and {th.shape}")
        if not (np.all(np.isfinite(v)) and np.all(np.isfinite(th))):
            raise ValueError("state contains non-finite values")
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "theta", th)

    @classmethod
    def zeros(cls, grid: GridSpec) -> "State":
        return cls(np.zeros((2, *grid.shape)), np.zeros(grid.shape), 0.0)

    def scaled(self, factor: float) -> "State":
        return State(factor * self.v, factor * self.theta, self.t)


@dataclass(frozen=True)
class StepperConfig:
    dt: float = 1e-2
    scheme: str = "imex_euler"
    diffusion_tol: float = 1e-10
    diffusion_max_iter: int = 2000
    cfl_limit: float = 0.5
    projection: PoissonConfig = field(default_factory=PoissonConfig)
    nonlinear: bool = True
    project: bool = True

    def __post_init__(self):
        if not (np.isfinite(self.dt) and self.dt > 0):
            raise ConfigError("stepper.dt must be > 0")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"stepper.scheme must be one of {', '.join(SCHEMES)}")
        if not self.diffusion_tol > 0:
            raise ConfigError("stepper.diffusion_tol must be > 0")
        if self.diffusion_max_iter < 1:
            raise ConfigError("stepper.diffusion_max_iter must be >= 1")
        if not self.cfl_limit > 0:
            raise ConfigError("stepper.cfl_limit must be > 0")


def cfl_number(v: np.ndarray, grid: GridSpec, dt: float, bc: FieldBC | None = None) -> float:
    """``dt * max(|v1|/dx, |v2|/dy, |w|/dz)`` over all cells."""
    w = diagnose_w(v, grid, bc).center
    return dt * max(float(np.abs(v[0]).max()) / grid.dx,
                    float(np.abs(v[1]).max()) / grid.dy,
                    float(np.abs(w).max()) / grid.dz)


def cfl_check(s: State, grid: GridSpec, c: StepperConfig, p: PhysParams | None = None) -> float:
    return cfl_number(s.v, grid, c.dt, p.velocity_bc if p is not None else None)


def solve_diffusion(b: np.ndarray, x0: np.ndarray, grid: GridSpec, nu: float, mu: float,
                    bc: FieldBC, factor: float, c: StepperConfig) -> np.ndarray:
    """Solve ``(I + factor * L) x = b`` for one scalar component by CG."""
    cx, cy, cz = diffusion_coefficients(grid, nu, mu)
    g = bc.ghost_factors(grid)
    args = (1.0, factor * cx, factor * cy, factor * cz, g)
    x, it, _ = kernels.helmholtz_cg(b, x0, *args, c.diffusion_tol, c.diffusion_max_iter, False)
    bn = float(np.linalg.norm(b))
    if bn > 0:
        res = float(np.linalg.norm(b - kernels.helmholtz_apply(x, *args)) / bn)
        if res > 10.0 * c.diffusion_tol:
            raise SolverError("implicit diffusion CG did not converge", res, it)
    return x


def _apply_diffusion(x: np.ndarray, grid: GridSpec, nu: float, mu: float, bc: FieldBC,
                     factor: float) -> np.ndarray:
    cx, cy, cz = diffusion_coefficients(grid, nu, mu)
    return kernels.helmholtz_apply(x, 1.0, factor * cx, factor * cy, factor * cz, bc.ghost_factors(grid))


def explicit_tendencies(s: State, grid: GridSpec, p: PhysParams, c: StepperConfig):
    """Explicit parts of the velocity and temperature tendencies."""
    tr = Transport.from_velocity(s.v, grid, p.velocity_bc) if c.nonlinear else None
    if c.project:
        fv = momentum_rhs(s.v, s.theta, grid, p, c.projection, tr, c.nonlinear)
    else:
        fv = -momentum_forcing(s.v, s.theta, grid, p, tr, c.nonlinear)
    ft = heat_rhs(s.v, s.theta, grid, p, tr, c.nonlinear)
    return fv, ft


def step(s: State, grid: GridSpec, p: PhysParams, c: StepperConfig) -> State:
    """Advance the state by one time step."""
    cfl = cfl_check(s, grid, c, p)
    if cfl > c.cfl_limit:
        raise CFLError(cfl, c.cfl_limit)
    dt = c.dt
    fv, ft = explicit_tendencies(s, grid, p, c)
    vbc, tbc = p.velocity_bc, p.temperature_bc

    if c.scheme == "imex_cnab2" and s.prev is not None:
        fv_old, ft_old = s.prev
        rhs_v = np.stack([_apply_diffusion(s.v[k], grid, p.nu1, p.mu1, vbc, -0.5 * dt) for k in range(2)])
        rhs_v += dt * (1.5 * fv - 0.5 * fv_old)
        rhs_t = _apply_diffusion(s.theta, grid, p.nu2, p.mu2, tbc, -0.5 * dt)
        rhs_t += dt * (1.5 * ft - 0.5 * ft_old)
        factor = 0.5 * dt
    else:
        rhs_v = s.v + dt * fv
        rhs_t = s.theta + dt * ft
        factor = dt

    vstar = np.stack([solve_diffusion(rhs_v[k], s.v[k], grid, p.nu1, p.mu1, vbc, factor, c) for k in range(2)])
    v_new = project(vstar, grid, c.projection) if c.project else vstar
    theta_new = solve_diffusion(rhs_t, s.theta, grid, p.nu2, p.mu2, tbc, factor, c)
    if tbc.conserves_mean:
        # (I + factor L2) preserves the mean exactly; remove the CG error
        theta_new += rhs_t.mean() - theta_new.mean()
    prev = (fv, ft) if c.scheme == "imex_cnab2" else None
    return State(v_new, theta_new, s.t + dt, prev)


def energy_budget(s0: State, s1: State, grid: GridSpec, p: PhysParams, c: StepperConfig) -> dict:
    """Discrete ``L2`` energy balance across one step.

    ``(|v1|^2 - |v0|^2) / (2 dt) + a1(v1, v1) - <F(v0, theta0), v1>`` where
    ``F`` is the explicit momentum tendency; the analogous temperature
    balance is reported alongside.
    """
    dt = s1.t - s0.t if s1.t > s0.t else c.dt
    fv, ft = explicit_tendencies(s0, grid, p, c)
    dv = (l2(s1.v, grid) ** 2 - l2(s0.v, grid) ** 2) / (2.0 * dt)
    diss_v = bilinear_a1(s1.v, s1.v, grid, p)
    work_v = inner(fv, s1.v, grid)
    dth = (l2(s1.theta, grid) ** 2 - l2(s0.theta, grid) ** 2) / (2.0 * dt)
    diss_t = bilinear_a2(s1.theta, s1.theta, grid, p)
    work_t = inner(ft, s1.theta, grid)
    res_v = dv + diss_v - work_v
    res_t = dth + diss_t - work_t
    return {
        "residual": float(res_v),
        "residual_theta": float(res_t),
        "dEdt": float(dv),
        "dissipation": float(diss_v),
        "work": float(work_v),
        "scale": float(abs(dv) + abs(diss_v) + abs(work_v)),
    }


def with_dt(c: StepperConfig, dt: float) -> StepperConfig:
    return replace(c, dt=dt)
