"""Discrete norms on the box and on its horizontal footprint.

Scalar fields are ``(nx, ny, nz)`` arrays and horizontal vectors carry a
leading component axis; pointwise magnitudes of vectors are Euclidean.
"""
from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np

from .calculus import cell_sum, vertical_average
from .grid import GridSpec


def _pointwise_sq(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    if a.shape == grid.shape:
        return a * a
    if a.shape[1:] == grid.shape:
        return np.sum(a * a, axis=0)
    raise ValueError(f"array of shape {a.shape} does not live on grid {grid.shape}")


def magnitude(a: np.ndarray, grid: GridSpec) -> np.ndarray:
    return np.sqrt(_pointwise_sq(a, grid))


def inner(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    """Volume inner product ``int a . b``."""
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return grid.dV * cell_sum(a * b)


def inner2d(a: np.ndarray, b: np.ndarray, grid: GridSpec) -> float:
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return grid.dA * cell_sum(a * b)


def l2(a: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(grid.dV * cell_sum(_pointwise_sq(a, grid))))


def l2_2d(a: np.ndarray, grid: GridSpec) -> float:
    sq = a * a if a.shape == grid.shape2d else np.sum(a * a, axis=0)
    return float(np.sqrt(grid.dA * cell_sum(sq)))


def lp(a: np.ndarray, grid: GridSpec, p: float) -> float:
    if not p >= 1:
        raise ValueError(f"Lp norm needs p >= 1, got {p!r}")
    mag = magnitude(a, grid)
    if np.isinf(p):
        return float(mag.max())
    return float((grid.dV * cell_sum(mag**p)) ** (1.0 / p))


def lp_vertical_average(a: np.ndarray, grid: GridSpec, p: float) -> float:
    """``||abar||_{L^p(Omega)}`` with the column mean extended over depth."""
    bar = vertical_average(a)
    mag = np.sqrt(bar * bar) if bar.shape == grid.shape2d else np.sqrt(np.sum(bar * bar, axis=0))
    if np.isinf(p):
        return float(mag.max())
    return float((grid.h * grid.dA * cell_sum(mag**p)) ** (1.0 / p))


def lzinf_ld2(a: np.ndarray, grid: GridSpec) -> float:
    """``sup_z ||a(., z)||_{L^2(D)}``."""
    sq = _pointwise_sq(a, grid)
    return float(np.sqrt(grid.dA * np.sum(sq, axis=(0, 1)).max()))


def ld2_lzinf(a: np.ndarray, grid: GridSpec) -> float:
    """``|| sup_z |a| ||_{L^2(D)}``."""
    col = _pointwise_sq(a, grid).max(axis=2)
    return float(np.sqrt(grid.dA * cell_sum(col)))


def gradient3(a: np.ndarray, grid: GridSpec) -> list[np.ndarray]:
    """All first derivatives of every component (one-sided at the walls)."""
    comps = [a] if a.shape == grid.shape else list(a)
    spacing = (grid.dx, grid.dy, grid.dz)
    return [np.gradient(c, spacing[ax], axis=ax, edge_order=2) for c in comps for ax in range(3)]


def derivative_multi_indices(m: int) -> list[tuple[int, ...]]:
    """Multi-indices (as sorted axis tuples) of total order ``<= m``."""
    out: list[tuple[int, ...]] = []
    for order in range(m + 1):
        out.extend(combinations_with_replacement(range(3), order))
    return out


def hm(a: np.ndarray, grid: GridSpec, m: int) -> float:
    """Discrete ``H^m`` norm: root of the summed squared ``L^2`` norms of all
    partial derivatives up to order ``m``.

    Derivatives use second-order differences, one-sided at the walls
    (``numpy.gradient`` with ``edge_order=2``); mixed derivatives are built by
    repeated application.
    """
    if int(m) != m or m < 0:
        raise ValueError(f"Hm norm needs an integer m >= 0, got {m!r}")
    comps = [a] if a.shape == grid.shape else list(a)
    spacing = (grid.dx, grid.dy, grid.dz)
    total = 0.0
    for c in comps:
        cache: dict[tuple[int, ...], np.ndarray] = {(): c}
        for idx in derivative_multi_indices(int(m)):
            if idx not in cache:
                cache[idx] = np.gradient(cache[idx[:-1]], spacing[idx[-1]], axis=idx[-1], edge_order=2)
            total += grid.dV * cell_sum(cache[idx] ** 2)
    return float(np.sqrt(total))


def h1_seminorm(a: np.ndarray, grid: GridSpec) -> float:
    return float(np.sqrt(sum(l2(g, grid) ** 2 for g in gradient3(a, grid))))


def norm(a: np.ndarray, grid: GridSpec, which: str = "L2", *, p: float = 2.0, m: int = 1,
         params=None, bc=None, projection=None) -> float:
    """Dispatch on the norm name.

    ``which`` is one of ``L2``, ``Lp``, ``H1``, ``Hm``, ``V1``, ``V2``,
    ``A1norm``, ``A2norm``, ``Lzinf_LD2``, ``LD2_Lzinf``.  The ``V`` and ``A``
    norms need physical parameters (:class:`hpde.operators.PhysParams`).
    """
    key = which.upper()
    if key == "L2":
        return l2(a, grid)
    if key == "LP":
        return lp(a, grid, p)
    if key == "H1":
        return hm(a, grid, 1)
    if key == "HM":
        return hm(a, grid, m)
    if key == "LZINF_LD2":
        return lzinf_ld2(a, grid)
    if key == "LD2_LZINF":
        return ld2_lzinf(a, grid)
    if key in ("V1", "V2", "A1NORM", "A2NORM"):
        from . import operators as ops

        if params is None:
            raise ValueError(f"norm {which!r} needs physical parameters")
        if key == "V1":
            return float(np.sqrt(max(ops.bilinear_a1(a, a, grid, params), 0.0)))
        if key == "V2":
            return float(np.sqrt(max(ops.bilinear_a2(a, a, grid, params), 0.0)))
        if key == "A1NORM":
            return l2(ops.apply_A1(a, grid, params, projection), grid)
        return l2(ops.apply_A2(a, grid, params), grid)
    raise ValueError(f"unknown norm {which!r}")
