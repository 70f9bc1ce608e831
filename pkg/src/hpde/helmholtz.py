"""Hydrostatic Helmholtz decomposition ``u = Pu + grad(q1 + q2)``.

The discrete space ``H1`` consists of horizontal vector fields whose column
mean ``ubar`` satisfies ``D0 ubar = 0``, where ``D0`` is the centred
divergence with zero normal flux through the walls.  The correction is the
centred gradient ``G`` (mirror ghosts) of a 2D potential, and because
``D0 = -G^T`` the map ``P`` is the exact orthogonal projection onto ``H1``.

The potential is split in two orthogonal pieces:

* ``q2`` vanishes on the outer ring of cells and solves ``D0 G q2 = D0 ubar``
  in the interior (the Dirichlet problem);
* ``q1`` carries the remaining ring-supported residual as Neumann data and is
  discretely harmonic in the interior.  Its gauge is zero mean.

Since ``q2`` is zero where the ``q1`` equation is forced and vice versa,
``<G q1, G q2> = -<q2, D0 G q1> = 0`` holds exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .calculus import broadcast_z, div_h, grad_h, vertical_average
from .grid import ALL_DIRICHLET, ALL_NEUMANN, GridSpec
from .norms import gradient3, inner, l2, l2_2d
from .poisson import PoissonConfig, boundary_source, solve_poisson_dirichlet, solve_poisson_neumann


@dataclass(frozen=True)
class DecompositionResult:
    pu: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    residuals: dict = field(default_factory=dict)
    neumann_data: dict = field(default_factory=dict)
    grid: GridSpec | None = None

    @property
    def correction(self) -> np.ndarray:
        """``grad(q1 + q2)`` as a 2D vector field."""
        return self.grad_q1 + self.grad_q2

    @property
    def grad_q1(self) -> np.ndarray:
        return grad_h(self.q1, self.grid)

    @property
    def grad_q2(self) -> np.ndarray:
        return grad_h(self.q2, self.grid)


def _vector(u, grid: GridSpec) -> np.ndarray:
    u = np.asarray(getattr(u, "data", u), dtype=np.float64)
    if u.shape != (2, *grid.shape):
        raise ValueError(f"vector field has shape {u.shape}, expected {(2, *grid.shape)}")
    if not np.all(np.isfinite(u)):
        raise ValueError("vector field contains non-finite values")
    return u


def mean_divergence(u: np.ndarray, grid: GridSpec) -> np.ndarray:
    """``D0 ubar``: centred divergence of the column mean, no wall flux."""
    return div_h(vertical_average(u), grid, ALL_DIRICHLET)


def wall_normal_flux(ubar: np.ndarray) -> dict[str, np.ndarray]:
    """Outward normal component of ``ubar`` at the wall faces.

    Face values come from second-order one-sided extrapolation
    ``(3 u_0 - u_1) / 2`` of the two nearest cells.
    """
    ux, uy = ubar
    return {
        "x_lo": -(1.5 * ux[0, :] - 0.5 * ux[1, :]),
        "x_hi": 1.5 * ux[-1, :] - 0.5 * ux[-2, :],
        "y_lo": -(1.5 * uy[:, 0] - 0.5 * uy[:, 1]),
        "y_hi": 1.5 * uy[:, -1] - 0.5 * uy[:, -2],
    }


def ring_to_neumann(r: np.ndarray, grid: GridSpec) -> dict[str, np.ndarray]:
    """Neumann data ``g`` whose boundary source ``g / spacing`` equals ``-r``
    on the outer ring.  Corner values are shared equally by both faces."""
    nx, ny = r.shape
    wx = np.ones(ny)
    wx[0] = wx[-1] = 0.5
    wy = np.ones(nx)
    wy[0] = wy[-1] = 0.5
    return {
        "x_lo": -r[0, :] * wx * grid.dx,
        "x_hi": -r[-1, :] * wx * grid.dx,
        "y_lo": -r[:, 0] * wy * grid.dy,
        "y_hi": -r[:, -1] * wy * grid.dy,
    }


def decompose(u, grid: GridSpec, cfg: PoissonConfig | None = None) -> DecompositionResult:
    """Split ``u`` into ``Pu`` and the gradient of ``q1 + q2``."""
    cfg = cfg or PoissonConfig()
    u = _vector(u, grid)
    div_bar = mean_divergence(u, grid)

    q2, info2 = solve_poisson_dirichlet(div_bar, grid, cfg, stencil="collocated")
    grad_q2 = grad_h(q2, grid, ALL_NEUMANN)
    r = div_bar - div_h(grad_q2, grid, ALL_DIRICHLET)
    interior = r.copy()
    interior[0, :] = interior[-1, :] = interior[:, 0] = interior[:, -1] = 0.0
    ring = r - interior
    g = ring_to_neumann(ring, grid)
    q1, info1 = solve_poisson_neumann(interior, grid, g, cfg, stencil="collocated")
    grad_q1 = grad_h(q1, grid, ALL_NEUMANN)

    pu = u - broadcast_z(grad_q1 + grad_q2, grid.nz)
    div_scale = l2_2d(div_bar, grid)
    div_after = l2_2d(mean_divergence(pu, grid), grid)
    residuals = {
        "q2": info2.residual,
        "q1": info1.residual,
        "q2_iterations": info2.iterations,
        "q1_iterations": info1.iterations,
        "compatibility_defect": info1.compatibility_defect,
        "mean_divergence": div_after,
        "mean_divergence_rel": 0.0 if div_scale == 0.0 else div_after / div_scale,
    }
    return DecompositionResult(pu, q1, q2, residuals, g, grid)


def project(u, grid: GridSpec, cfg: PoissonConfig | None = None) -> np.ndarray:
    """Hydrostatic Leray projection of ``u``."""
    return decompose(u, grid, cfg).pu


def combined_vs_split_check(u, grid: GridSpec, cfg: PoissonConfig | None = None) -> dict:
    """Compare the single-potential Neumann route with the ``q1 + q2`` split.

    The single potential solves ``Delta q = div ubar`` with
    ``d_n q = n . ubar``, where the wall flux is extrapolated to the faces and
    the divergence uses those face fluxes.
    """
    cfg = cfg or PoissonConfig()
    u = _vector(u, grid)
    ubar = vertical_average(u)
    g = wall_normal_flux(ubar)

    f = div_h(ubar, grid, ALL_DIRICHLET) + boundary_source(g, grid)
    q, info = solve_poisson_neumann(f, grid, g, cfg, stencil="collocated")
    dec = decompose(u, grid, cfg)
    grad_q = grad_h(q, grid)
    split = dec.correction
    diff = l2_2d(grad_q - split, grid)
    return {
        "discrepancy": diff,
        "relative": diff / l2(u, grid) if l2(u, grid) > 0 else 0.0,
        "single_norm": l2_2d(grad_q, grid),
        "split_norm": l2_2d(split, grid),
        "q": q,
        "q1": dec.q1,
        "q2": dec.q2,
        "single_residual": info.residual,
        "compatibility_defect": info.compatibility_defect,
    }


def _grad_magnitude_lr(a: np.ndarray, grid: GridSpec, r: float) -> float:
    sq = sum(d * d for d in gradient3(a, grid))
    return float((grid.dV * np.sum(sq ** (r / 2.0))) ** (1.0 / r))


def _lr(a: np.ndarray, grid: GridSpec, r: float) -> float:
    sq = np.sum(a * a, axis=0)
    return float((grid.dV * np.sum(sq ** (r / 2.0))) ** (1.0 / r))


def projector_w1r_ratio(u, grid: GridSpec, r: float = 2, cfg: PoissonConfig | None = None) -> float:
    """``||grad3 Pu||_r / (||u||_r + ||grad3 u||_r)``, for r in {2, 4}."""
    if r not in (2, 4):
        raise ValueError(f"r must be 2 or 4, got {r!r}")
    u = _vector(u, grid)
    pu = project(u, grid, cfg)
    den = _lr(u, grid, r) + _grad_magnitude_lr(u, grid, r)
    if den == 0.0:
        return 0.0
    return _grad_magnitude_lr(pu, grid, r) / den


def orthogonality_report(u, grid: GridSpec, cfg: PoissonConfig | None = None) -> dict:
    """Invariants of the decomposition, each scaled by ``||u||^2`` or ``||u||``."""
    u = _vector(u, grid)
    dec = decompose(u, grid, cfg)
    corr = broadcast_z(dec.correction, grid.nz)
    g1 = broadcast_z(dec.grad_q1, grid.nz)
    g2 = broadcast_z(dec.grad_q2, grid.nz)
    nu = l2(u, grid)
    scale = nu * nu if nu > 0 else 1.0
    ppu = project(dec.pu, grid, cfg)
    return {
        "orthogonality": abs(inner(dec.pu, corr, grid)) / scale,
        "g1_g2": abs(inner(g1, g2, grid)) / scale,
        "idempotence": l2(ppu - dec.pu, grid) / (nu if nu > 0 else 1.0),
        "pythagoras": abs(nu**2 - l2(dec.pu, grid) ** 2 - l2(corr, grid) ** 2) / scale,
        "dz_commute": float(np.max(np.abs(np.diff(dec.pu - u, axis=-1)))) if grid.nz > 1 else 0.0,
        "q1_mean": float(np.mean(dec.q1)),
    }
