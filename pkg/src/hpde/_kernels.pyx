# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False, language_level=3
"""Compiled stencil and conjugate-gradient kernels.

Mirrors :mod:`hpde._fallback` operation for operation; the test suite checks
the two backends against each other.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


cdef void _helm(const double[:, :, ::1] x, double[:, :, ::1] out, double c0, double cx,
                double cy, double cz, const double[::1] g) noexcept nogil:
    cdef Py_ssize_t nx = x.shape[0], ny = x.shape[1], nz = x.shape[2]
    cdef Py_ssize_t i, j, k
    cdef double xc, xm, xp, acc
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                xc = x[i, j, k]
                acc = c0 * xc
                if cx != 0.0:
                    xm = x[i - 1, j, k] if i > 0 else g[0] * xc
                    xp = x[i + 1, j, k] if i < nx - 1 else g[1] * xc
                    acc -= cx * (xm - 2.0 * xc + xp)
                if cy != 0.0:
                    xm = x[i, j - 1, k] if j > 0 else g[2] * xc
                    xp = x[i, j + 1, k] if j < ny - 1 else g[3] * xc
                    acc -= cy * (xm - 2.0 * xc + xp)
                if cz != 0.0:
                    xm = x[i, j, k - 1] if k > 0 else g[4] * xc
                    xp = x[i, j, k + 1] if k < nz - 1 else g[5] * xc
                    acc -= cz * (xm - 2.0 * xc + xp)
                out[i, j, k] = acc


cdef double _dot3(const double[:, :, ::1] a, const double[:, :, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(a.shape[2]):
                s += a[i, j, k] * b[i, j, k]
    return s


cdef void _demean3(double[:, :, ::1] a) noexcept nogil:
    cdef Py_ssize_t i, j, k
    cdef double s = 0.0
    cdef Py_ssize_t n = a.shape[0] * a.shape[1] * a.shape[2]
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(a.shape[2]):
                s += a[i, j, k]
    s /= n
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            for k in range(a.shape[2]):
                a[i, j, k] -= s


def helmholtz_apply(x, double c0, double cx, double cy, double cz, g):
    """``c0 x - cx d2x x - cy d2y x - cz d2z x`` with ghost factors ``g``."""
    cdef double[:, :, ::1] xv = np.ascontiguousarray(x, dtype=np.float64)
    out = np.empty_like(np.asarray(xv))
    cdef double[:, :, ::1] ov = out
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    _helm(xv, ov, c0, cx, cy, cz, gv)
    return out


def helmholtz_cg(b, x0, double c0, double cx, double cy, double cz, g,
                 double rel_tol, Py_ssize_t max_iter, bint remove_mean):
    """Plain CG; returns ``(x, iterations, recursive relative residual)``."""
    cdef double[:, :, ::1] bv = np.array(b, dtype=np.float64, order="C")
    cdef double[:, :, ::1] x = np.array(x0, dtype=np.float64, order="C")
    cdef double[::1] gv = np.ascontiguousarray(g, dtype=np.float64)
    shape = (bv.shape[0], bv.shape[1], bv.shape[2])
    cdef double[:, :, ::1] r = np.empty(shape)
    cdef double[:, :, ::1] p = np.empty(shape)
    cdef double[:, :, ::1] ap = np.empty(shape)
    cdef Py_ssize_t i, j, k, it = 0
    cdef Py_ssize_t nx = bv.shape[0], ny = bv.shape[1], nz = bv.shape[2]
    cdef double bnorm, rr, rr_new, alpha, beta, pap
    with nogil:
        if remove_mean:
            _demean3(bv)
            _demean3(x)
        bnorm = sqrt(_dot3(bv, bv))
        if bnorm == 0.0:
            for i in range(nx):
                for j in range(ny):
                    for k in range(nz):
                        x[i, j, k] = 0.0
        else:
            _helm(x, ap, c0, cx, cy, cz, gv)
            for i in range(nx):
                for j in range(ny):
                    for k in range(nz):
                        r[i, j, k] = bv[i, j, k] - ap[i, j, k]
                        p[i, j, k] = r[i, j, k]
            rr = _dot3(r, r)
            while sqrt(rr) > rel_tol * bnorm and it < max_iter:
                _helm(p, ap, c0, cx, cy, cz, gv)
                pap = _dot3(p, ap)
                if pap <= 0.0:
                    break
                alpha = rr / pap
                for i in range(nx):
                    for j in range(ny):
                        for k in range(nz):
                            x[i, j, k] += alpha * p[i, j, k]
                            r[i, j, k] -= alpha * ap[i, j, k]
                if remove_mean:
                    _demean3(r)
                rr_new = _dot3(r, r)
                beta = rr_new / rr
                rr = rr_new
                for i in range(nx):
                    for j in range(ny):
                        for k in range(nz):
                            p[i, j, k] = r[i, j, k] + beta * p[i, j, k]
                it += 1
            if remove_mean:
                _demean3(x)
    if bnorm == 0.0:
        return np.asarray(x), 0, 0.0
    return np.asarray(x), it, sqrt(rr) / bnorm


cdef void _zero_ring(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t i, j, nx = a.shape[0], ny = a.shape[1]
    for i in range(nx):
        a[i, 0] = 0.0
        a[i, ny - 1] = 0.0
    for j in range(ny):
        a[0, j] = 0.0
        a[nx - 1, j] = 0.0


cdef void _colloc(const double[:, ::1] q, double[:, ::1] gx, double[:, ::1] gy,
                  double[:, ::1] out, double dx, double dy, bint ring) noexcept nogil:
    # out = -D0 G q; G uses mirror ghosts, D0 mirror-negate ghosts.
    # With ring, q must vanish on the outer ring; the output ring is zeroed.
    cdef Py_ssize_t nx = q.shape[0], ny = q.shape[1], i, j
    cdef double a, b, t
    for i in range(nx):
        for j in range(ny):
            a = q[i - 1, j] if i > 0 else q[i, j]
            b = q[i + 1, j] if i < nx - 1 else q[i, j]
            gx[i, j] = (b - a) / (2.0 * dx)
            a = q[i, j - 1] if j > 0 else q[i, j]
            b = q[i, j + 1] if j < ny - 1 else q[i, j]
            gy[i, j] = (b - a) / (2.0 * dy)
    for i in range(nx):
        for j in range(ny):
            a = gx[i - 1, j] if i > 0 else -gx[i, j]
            b = gx[i + 1, j] if i < nx - 1 else -gx[i, j]
            t = (b - a) / (2.0 * dx)
            a = gy[i, j - 1] if j > 0 else -gy[i, j]
            b = gy[i, j + 1] if j < ny - 1 else -gy[i, j]
            out[i, j] = -(t + (b - a) / (2.0 * dy))
    if ring:
        _zero_ring(out)


def colloc_apply(q, double dx, double dy, bint ring=False):
    """Wide collocated Laplacian ``-D0 G q``.

    With ``ring`` the outer ring of cells is treated as zero on input and
    zeroed on output, giving the interior (Dirichlet) restriction.
    """
    cdef double[:, ::1] qv = np.array(q, dtype=np.float64, order="C")
    nx, ny = qv.shape[0], qv.shape[1]
    if ring:
        _zero_ring(qv)
    out = np.empty((nx, ny))
    cdef double[:, ::1] gx = np.empty((nx, ny))
    cdef double[:, ::1] gy = np.empty((nx, ny))
    cdef double[:, ::1] ov = out
    _colloc(qv, gx, gy, ov, dx, dy, ring)
    return out


cdef double _dot2(const double[:, ::1] a, const double[:, ::1] b) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += a[i, j] * b[i, j]
    return s


cdef void _demean2(double[:, ::1] a) noexcept nogil:
    cdef Py_ssize_t i, j
    cdef double s = 0.0
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            s += a[i, j]
    s /= a.shape[0] * a.shape[1]
    for i in range(a.shape[0]):
        for j in range(a.shape[1]):
            a[i, j] -= s


def colloc_cg(b, x0, double dx, double dy, bint ring, double rel_tol, Py_ssize_t max_iter,
              bint remove_mean):
    """CG on the collocated Laplacian; same return convention as ``helmholtz_cg``."""
    cdef double[:, ::1] bv = np.array(b, dtype=np.float64, order="C")
    cdef double[:, ::1] x = np.array(x0, dtype=np.float64, order="C")
    nx, ny = bv.shape[0], bv.shape[1]
    cdef double[:, ::1] r = np.empty((nx, ny))
    cdef double[:, ::1] p = np.empty((nx, ny))
    cdef double[:, ::1] ap = np.empty((nx, ny))
    cdef double[:, ::1] gx = np.empty((nx, ny))
    cdef double[:, ::1] gy = np.empty((nx, ny))
    cdef Py_ssize_t i, j, it = 0
    cdef Py_ssize_t mx = nx, my = ny
    cdef double bnorm, rr, rr_new, alpha, beta, pap
    with nogil:
        if ring:
            _zero_ring(bv)
            _zero_ring(x)
        if remove_mean:
            _demean2(bv)
            _demean2(x)
        bnorm = sqrt(_dot2(bv, bv))
        if bnorm == 0.0:
            for i in range(mx):
                for j in range(my):
                    x[i, j] = 0.0
        else:
            _colloc(x, gx, gy, ap, dx, dy, ring)
            for i in range(mx):
                for j in range(my):
                    r[i, j] = bv[i, j] - ap[i, j]
                    p[i, j] = r[i, j]
            rr = _dot2(r, r)
            while sqrt(rr) > rel_tol * bnorm and it < max_iter:
                _colloc(p, gx, gy, ap, dx, dy, ring)
                pap = _dot2(p, ap)
                if pap <= 0.0:
                    break
                alpha = rr / pap
                for i in range(mx):
                    for j in range(my):
                        x[i, j] += alpha * p[i, j]
                        r[i, j] -= alpha * ap[i, j]
                if remove_mean:
                    _demean2(r)
                rr_new = _dot2(r, r)
                beta = rr_new / rr
                rr = rr_new
                for i in range(mx):
                    for j in range(my):
                        p[i, j] = r[i, j] + beta * p[i, j]
                it += 1
            if remove_mean:
                _demean2(x)
    if bnorm == 0.0:
        return np.asarray(x), 0, 0.0
    return np.asarray(x), it, sqrt(rr) / bnorm
