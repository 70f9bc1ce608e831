"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``."""
from __future__ import annotations

import numpy as np


def _second(x: np.ndarray, axis: int, s_lo: float, s_hi: float) -> np.ndarray:
    x = np.moveaxis(x, axis, 0)
    d = np.empty_like(x)
    d[1:-1] = x[:-2] - 2.0 * x[1:-1] + x[2:]
    d[0] = (s_lo - 2.0) * x[0] + x[1]
    d[-1] = x[-2] + (s_hi - 2.0) * x[-1]
    return np.moveaxis(d, 0, axis)


def helmholtz_apply(x, c0, cx, cy, cz, g):
    """``c0 x - cx d2x x - cy d2y x - cz d2z x`` with ghost factors ``g``."""
    x = np.asarray(x, dtype=np.float64)
    out = c0 * x
    for axis, c in enumerate((cx, cy, cz)):
        if c != 0.0:
            out = out - c * _second(x, axis, g[2 * axis], g[2 * axis + 1])
    return out


def _cg(apply, b, x, rel_tol, max_iter, remove_mean, mask=None):
    b = np.array(b, dtype=np.float64)
    x = np.array(x, dtype=np.float64)
    if mask is not None:
        b[mask] = 0.0
        x[mask] = 0.0
    if remove_mean:
        b -= b.mean()
        x -= x.mean()
    bnorm = np.sqrt(np.sum(b * b))
    if bnorm == 0.0:
        return np.zeros_like(b), 0, 0.0
    r = b - apply(x)
    p = r.copy()
    rr = np.sum(r * r)
    it = 0
    while np.sqrt(rr) > rel_tol * bnorm and it < max_iter:
        ap = apply(p)
        pap = np.sum(p * ap)
        if pap <= 0.0:
            break
        alpha = rr / pap
        x += alpha * p
        r -= alpha * ap
        if remove_mean:
            r -= r.mean()
        rr_new = np.sum(r * r)
        p = r + (rr_new / rr) * p
        rr = rr_new
        it += 1
    if remove_mean:
        x -= x.mean()
    return x, it, float(np.sqrt(rr) / bnorm)


def helmholtz_cg(b, x0, c0, cx, cy, cz, g, rel_tol, max_iter, remove_mean):
    """Plain CG; returns ``(x, iterations, recursive relative residual)``."""
    return _cg(lambda v: helmholtz_apply(v, c0, cx, cy, cz, g), b, x0, rel_tol, max_iter, remove_mean)


def ring_mask(shape) -> np.ndarray:
    m = np.zeros(shape, dtype=bool)
    m[0, :] = m[-1, :] = m[:, 0] = m[:, -1] = True
    return m


def _centred(a: np.ndarray, axis: int, spacing: float, s: float) -> np.ndarray:
    a = np.moveaxis(a, axis, 0)
    p = np.concatenate([s * a[:1], a, s * a[-1:]])
    return np.moveaxis((p[2:] - p[:-2]) / (2.0 * spacing), 0, axis)


def colloc_apply(q, dx, dy, ring=False):
    """Wide collocated Laplacian ``-D0 G q`` (mirror ghosts for ``G``,
    mirror-negate for ``D0``)."""
    q = np.array(q, dtype=np.float64)
    mask = ring_mask(q.shape) if ring else None
    if ring:
        q[mask] = 0.0
    gx = _centred(q, 0, dx, 1.0)
    gy = _centred(q, 1, dy, 1.0)
    out = -(_centred(gx, 0, dx, -1.0) + _centred(gy, 1, dy, -1.0))
    if ring:
        out[mask] = 0.0
    return out


def colloc_cg(b, x0, dx, dy, ring, rel_tol, max_iter, remove_mean):
    mask = ring_mask(np.shape(b)) if ring else None
    return _cg(lambda v: colloc_apply(v, dx, dy, ring), b, x0, rel_tol, max_iter, remove_mean, mask)
