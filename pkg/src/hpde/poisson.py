"""Two-dimensional Poisson solves on the horizontal footprint.

Two discretisations are available:

``compact``
    The classical 5-point Laplacian with face ghost cells.  Used for
    stand-alone Dirichlet/Neumann problems.
``collocated``
    The wide operator ``D0 G`` obtained by composing the centred divergence
    with the centred gradient.  This is the operator whose inverse makes the
    discrete projector exactly orthogonal; see :mod:`hpde.helmholtz`.  The
    Dirichlet variant sets the outer ring of cells to zero.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Mapping

import numpy as np
import scipy.linalg as sla

from . import kernels
from .errors import ConfigError, SolverError
from .grid import GridSpec

DENSE_LIMIT = 4096
STENCILS = ("compact", "collocated")


@dataclass(frozen=True)
class PoissonConfig:
    method: str = "cg"
    rel_tol: float = 1e-10
    max_iter: int | None = None

    def __post_init__(self):
        if self.method not in ("cg", "dense"):
            raise ConfigError(f"projection.method must be 'cg' or 'dense', got {self.method!r}")
        if not self.rel_tol > 0:
            raise ConfigError(f"projection.rel_tol must be > 0, got {self.rel_tol!r}")
        if self.max_iter is not None and self.max_iter < 1:
            raise ConfigError(f"projection.max_iter must be >= 1, got {self.max_iter!r}")

    def iterations_for(self, grid: GridSpec) -> int:
        return self.max_iter if self.max_iter is not None else 10 * grid.nx * grid.ny

    def check_grid(self, grid: GridSpec) -> None:
        if self.method == "dense" and grid.nx * grid.ny > DENSE_LIMIT:
            raise ConfigError(f"dense Poisson solves need nx*ny <= {DENSE_LIMIT}, got {grid.nx * grid.ny}")


@dataclass(frozen=True)
class SolveInfo:
    method: str
    iterations: int
    residual: float
    compatibility_defect: float = 0.0


def _as2d(a, grid: GridSpec) -> np.ndarray:
    a = np.asarray(getattr(a, "data", a), dtype=np.float64)
    if a.shape != grid.shape2d:
        raise ValueError(f"2D field has shape {a.shape}, expected {grid.shape2d}")
    if not np.all(np.isfinite(a)):
        raise ValueError("2D field contains non-finite values")
    return a


# --- operators (positive semi-definite, i.e. minus the Laplacian) -----------

def _compact_ghosts(kind: str) -> np.ndarray:
    s = -1.0 if kind == "dirichlet" else 1.0
    return np.array([s, s, s, s, 0.0, 0.0])


def neg_laplacian(q: np.ndarray, grid: GridSpec, kind: str, stencil: str = "compact") -> np.ndarray:
    """Apply ``-Delta`` with the homogeneous condition ``kind``."""
    if stencil == "compact":
        out = kernels.helmholtz_apply(q[:, :, None], 0.0, 1.0 / grid.dx**2, 1.0 / grid.dy**2, 0.0,
                                      _compact_ghosts(kind))
        return out[:, :, 0]
    if stencil == "collocated":
        return kernels.colloc_apply(q, grid.dx, grid.dy, kind == "dirichlet")
    raise ValueError(f"unknown stencil {stencil!r}")


def _run_cg(b: np.ndarray, grid: GridSpec, kind: str, stencil: str, cfg: PoissonConfig):
    neumann = kind == "neumann"
    budget = cfg.iterations_for(grid)
    x = np.zeros_like(b)
    used = 0
    while True:
        if stencil == "compact":
            x3, it, _ = kernels.helmholtz_cg(b[:, :, None], x[:, :, None], 0.0, 1.0 / grid.dx**2,
                                            1.0 / grid.dy**2, 0.0, _compact_ghosts(kind),
                                            cfg.rel_tol, budget - used, neumann)
            x = x3[:, :, 0]
        else:
            x, it, _ = kernels.colloc_cg(b, x, grid.dx, grid.dy, kind == "dirichlet",
                                         cfg.rel_tol, budget - used, neumann)
        used += it
        res = _true_residual(x, b, grid, kind, stencil)
        if res <= cfg.rel_tol:
            return x, used, res
        if used >= budget or it == 0:
            raise SolverError(f"{kind} Poisson CG did not converge", res, used)


def _true_residual(x, b, grid, kind, stencil) -> float:
    r = b - neg_laplacian(x, grid, kind, stencil)
    if kind == "neumann":
        r = r - r.mean()
        b = b - b.mean()
    elif stencil == "collocated":
        r[0, :] = r[-1, :] = r[:, 0] = r[:, -1] = 0.0
    bn = np.linalg.norm(b)
    return 0.0 if bn == 0.0 else float(np.linalg.norm(r) / bn)


@lru_cache(maxsize=32)
def _dense_factor(nx: int, ny: int, dx: float, dy: float, kind: str, stencil: str):
    grid = GridSpec(nx * dx, ny * dy, 1.0, nx, ny, 4)
    n = nx * ny
    cols = []
    for idx in range(n):
        e = np.zeros(n)
        e[idx] = 1.0
        cols.append(neg_laplacian(e.reshape(nx, ny), grid, kind, stencil).ravel())
    A = np.array(cols).T
    keep = np.ones(n, dtype=bool)
    if kind == "dirichlet" and stencil == "collocated":
        keep = ~_ring(nx, ny).ravel()
        A = A[np.ix_(keep, keep)]
    if kind == "neumann":
        A = A + np.full((n, n), np.abs(A).max() / n)
    return sla.lu_factor(A), keep


def _ring(nx: int, ny: int) -> np.ndarray:
    m = np.zeros((nx, ny), dtype=bool)
    m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
    return m


def _run_dense(b: np.ndarray, grid: GridSpec, kind: str, stencil: str):
    lu, keep = _dense_factor(grid.nx, grid.ny, grid.dx, grid.dy, kind, stencil)
    x = np.zeros(b.size)
    x[keep] = sla.lu_solve(lu, b.ravel()[keep])
    x = x.reshape(b.shape)
    if kind == "neumann":
        x -= x.mean()
    return x, 0, _true_residual(x, b, grid, kind, stencil)


def _solve(b: np.ndarray, grid: GridSpec, kind: str, stencil: str, cfg: PoissonConfig):
    if stencil not in STENCILS:
        raise ValueError(f"unknown stencil {stencil!r}")
    cfg.check_grid(grid)
    if cfg.method == "dense":
        return _run_dense(b, grid, kind, stencil)
    return _run_cg(b, grid, kind, stencil, cfg)


def solve_poisson_dirichlet(f, grid: GridSpec, cfg: PoissonConfig | None = None,
                            stencil: str = "compact") -> tuple[np.ndarray, SolveInfo]:
    """Solve ``Delta q = f`` with ``q = 0`` on the boundary.

    With the compact stencil the condition is imposed at the faces through
    mirror-negate ghosts.  With the collocated stencil ``q`` vanishes on the
    outer ring of cells and ``f`` is only used in the interior.
    """
    cfg = cfg or PoissonConfig()
    f = _as2d(f, grid)
    q, it, res = _solve(-f, grid, "dirichlet", stencil, cfg)
    return q, SolveInfo(cfg.method, it, res)


def boundary_source(g: Mapping[str, object] | None, grid: GridSpec) -> np.ndarray:
    """Cell source ``B(g)`` produced by outward normal-derivative data ``g``.

    ``g`` maps face names (``x_lo``, ``x_hi``, ``y_lo``, ``y_hi``) to scalars
    or to arrays along the face.  The boundary cell of a face receives
    ``g / spacing``.
    """
    out = np.zeros(grid.shape2d)
    if not g:
        return out
    for face, val in g.items():
        if face in ("x_lo", "x_hi"):
            vals = np.broadcast_to(np.asarray(val, dtype=np.float64), (grid.ny,))
            out[0 if face == "x_lo" else -1, :] += vals / grid.dx
        elif face in ("y_lo", "y_hi"):
            vals = np.broadcast_to(np.asarray(val, dtype=np.float64), (grid.nx,))
            out[:, 0 if face == "y_lo" else -1] += vals / grid.dy
        else:
            raise ValueError(f"unknown lateral face {face!r}")
    return out


def solve_poisson_neumann(f, grid: GridSpec, g: Mapping[str, object] | None = None,
                          cfg: PoissonConfig | None = None,
                          stencil: str = "compact") -> tuple[np.ndarray, SolveInfo]:
    """Solve ``Delta q = f`` with ``d_n q = g`` on the lateral boundary.

    Returns the zero-mean solution.  The compatibility defect
    ``int f - oint g`` is removed from the source before solving and reported
    in :attr:`SolveInfo.compatibility_defect`.
    """
    cfg = cfg or PoissonConfig()
    rhs = _as2d(f, grid) - boundary_source(g, grid)
    defect = grid.dA * float(np.sum(rhs))
    q, it, res = _solve(-(rhs - rhs.mean()), grid, "neumann", stencil, cfg)
    return q, SolveInfo(cfg.method, it, res, defect)


def with_tolerance(cfg: PoissonConfig, rel_tol: float) -> PoissonConfig:
    return replace(cfg, rel_tol=rel_tol)
