import os
import subprocess
import sys

import numpy as np
import pytest

from hpde import _fallback, kernels, oracles
from hpde.grid import FaceBC, FieldBC, GridSpec, velocity_bc
from hpde.operators import diffusion_coefficients

G = GridSpec(1.0, 1.3, 0.7, 6, 7, 5)
BC = FieldBC(x_lo=FaceBC("dirichlet0"), y_hi=FaceBC("dirichlet0"), z_hi=FaceBC("robin", 0.7))


def _compiled():
    if kernels.BACKEND != "cython":
        pytest.skip("compiled extension not available")
    from hpde import _kernels
    return _kernels


def test_helmholtz_apply_matches_oracle(rng):
    nu, mu = 0.3, 0.05
    A = oracles.diffusion_matrix(G, BC, nu, mu)
    x = rng.standard_normal(G.shape)
    cx, cy, cz = diffusion_coefficients(G, nu, mu)
    g = BC.ghost_factors(G)
    out = kernels.helmholtz_apply(x, 0.0, cx, cy, cz, g)
    np.testing.assert_allclose(out.ravel(), A @ x.ravel(), rtol=1e-12, atol=1e-11)


def test_backends_agree_on_stencils(rng):
    k = _compiled()
    x = rng.standard_normal(G.shape)
    g = velocity_bc(0.4).ghost_factors(G)
    a = k.helmholtz_apply(x, 1.0, 2.0, 3.0, 4.0, g)
    b = _fallback.helmholtz_apply(x, 1.0, 2.0, 3.0, 4.0, g)
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-13)
    q = rng.standard_normal(G.shape2d)
    for ring in (False, True):
        np.testing.assert_allclose(k.colloc_apply(q, G.dx, G.dy, ring), _fallback.colloc_apply(q, G.dx, G.dy, ring),
                                   rtol=1e-14, atol=1e-12)


def test_backends_agree_on_solves(rng):
    k = _compiled()
    b = rng.standard_normal(G.shape)
    g = velocity_bc(0.4).ghost_factors(G)
    args = (b, np.zeros(G.shape), 1.0, 0.5, 0.5, 2.0, g, 1e-12, 500, False)
    xa, ia, _ = k.helmholtz_cg(*args)
    xb, ib, _ = _fallback.helmholtz_cg(*args)
    np.testing.assert_allclose(xa, xb, rtol=1e-9, atol=1e-12)
    r = rng.standard_normal(G.shape2d)
    r -= r.mean()
    qa, _, _ = k.colloc_cg(r, np.zeros(G.shape2d), G.dx, G.dy, False, 1e-12, 1000, True)
    qb, _, _ = _fallback.colloc_cg(r, np.zeros(G.shape2d), G.dx, G.dy, False, 1e-12, 1000, True)
    np.testing.assert_allclose(qa, qb, rtol=1e-8, atol=1e-10)


def test_cg_solves_system(rng):
    b = rng.standard_normal(G.shape)
    g = velocity_bc(0.4).ghost_factors(G)
    x, it, res = kernels.helmholtz_cg(b, np.zeros(G.shape), 1.0, 0.5, 0.5, 2.0, g, 1e-12, 500, False)
    assert res <= 1e-12 and 0 < it <= 500
    np.testing.assert_allclose(kernels.helmholtz_apply(x, 1.0, 0.5, 0.5, 2.0, g), b, atol=1e-10)


def test_environment_forces_pure_python():
    env = {**os.environ, "HPDE_PURE_PYTHON": "1"}
    out = subprocess.run([sys.executable, "-c", "import hpde.kernels as k; print(k.BACKEND)"],
                         capture_output=True, text=True, env=env, check=True)
    assert out.stdout.strip() == "python"
