import math

import numpy as np
import pytest

from hpde import oracles
from hpde.ensembles import EnsembleSpec, mode_scalar, mode_velocity, random_scalar, random_velocity
from hpde.errors import ConfigError
from hpde.grid import GridSpec
from hpde.helmholtz import project
from hpde.norms import inner, l2
from hpde.operators import (PhysParams, Transport, advect, apply_A1, apply_A2, apply_L1, apply_L2,
                            bilinear_a1, bilinear_a2, buoyancy, diagnose_w, gradient_field, heat_rhs,
                            momentum_rhs, robin_surface_term)
from hpde.poisson import PoissonConfig

G = GridSpec(1.0, 1.2, 0.5, 8, 8, 6)
P = PhysParams(nu1=0.2, mu1=0.05, nu2=0.1, mu2=0.03, alpha1=0.7, alpha2=0.4)
SPEC = EnsembleSpec(count=20, K=3, decay=1.0, seed=8)


def _constrained_pair(i):
    r = SPEC.rng(i)
    return random_velocity(G, SPEC, r), random_velocity(G, SPEC, r)


def test_zero_inputs():
    z = np.zeros((2, *G.shape))
    assert np.all(apply_L1(z, G, P) == 0)
    assert np.all(apply_A1(z, G, P) == 0)
    assert np.all(momentum_rhs(z, z[0], G, P) == 0)


def test_parameter_validation():
    with pytest.raises(ConfigError, match="physics.alpha1 must be ≥ 0"):
        PhysParams(alpha1=-1.0)
    with pytest.raises(ConfigError):
        PhysParams(nu2=0.0)
    with pytest.raises(ConfigError):
        PhysParams(Q=np.full(G.shape, np.nan))
    with pytest.raises(ConfigError):
        PhysParams(Q=np.zeros((2, 2, 2))).source(G)


def test_L1_matches_assembled_matrix(rng):
    v = rng.standard_normal((2, *G.shape))
    A = oracles.diffusion_matrix(G, P.velocity_bc, P.nu1, P.mu1)
    out = apply_L1(v, G, P)
    for c in range(2):
        np.testing.assert_allclose(out[c].ravel(), A @ v[c].ravel(), rtol=1e-12, atol=1e-10)


def _l2_eigen_error(n):
    g = GridSpec(1.0, 1.0, 0.5, n, n, 4)
    p = PhysParams(alpha2=0.0)
    X, _, _ = g.mesh()
    theta = np.cos(np.pi * X)
    return np.max(np.abs(apply_L2(theta, g, p) - p.nu2 * np.pi**2 * theta))


def test_L2_cosine_eigenmode_second_order():
    e = np.array([_l2_eigen_error(n) for n in (16, 32, 64)])
    assert np.all(np.log2(e[:-1] / e[1:]) >= 1.9)


def test_A2_norm_of_cosine_mode():
    errs = []
    for n in (16, 32):
        g = GridSpec(1.0, 1.0, 0.5, n, n, n // 2)
        p = PhysParams(alpha2=0.0)
        theta = mode_scalar(g, (1, 1, 1))
        lam = p.nu2 * 2 * np.pi**2 + p.mu2 * (np.pi / g.h) ** 2
        errs.append(abs(l2(apply_A2(theta, g, p), g) - lam * l2(theta, g)) / (lam * l2(theta, g)))
    assert errs[1] < errs[0] / 3.5 and errs[1] < 1e-2


@pytest.mark.parametrize("i", range(5))
def test_forms_match_operators(rng, i):
    v, u = rng.standard_normal((2, 2, *G.shape))
    th, eta = rng.standard_normal((2, *G.shape))
    a1 = bilinear_a1(v, u, G, P)
    assert inner(apply_L1(v, G, P), u, G) == pytest.approx(a1, rel=1e-10)
    assert bilinear_a1(u, v, G, P) == pytest.approx(a1, rel=1e-12)
    a2 = bilinear_a2(th, eta, G, P)
    assert inner(apply_L2(th, G, P), eta, G) == pytest.approx(a2, rel=1e-10, abs=1e-10)
    assert bilinear_a2(eta, th, G, P) == pytest.approx(a2, rel=1e-12, abs=1e-12)


def test_a1_positive_definite(rng):
    v = rng.standard_normal((2, *G.shape))
    assert bilinear_a1(v, v, G, P) > 0
    assert bilinear_a1(np.zeros_like(v), np.zeros_like(v), G, P) == 0


def test_robin_term_vanishes_without_alpha(rng):
    v, u = rng.standard_normal((2, 2, *G.shape))
    p0 = PhysParams(nu1=0.2, mu1=0.05, alpha1=0.0)
    assert robin_surface_term(v, u, G, p0) == 0.0
    assert robin_surface_term(v, u, G, P) != 0.0


@pytest.mark.parametrize("i", range(10))
def test_stokes_operator_galerkin_and_symmetry(i):
    v, phi = _constrained_pair(i)
    a = bilinear_a1(v, phi, G, P)
    A1v, A1phi = apply_A1(v, G, P), apply_A1(phi, G, P)
    assert inner(A1v, phi, G) == pytest.approx(a, rel=1e-6)
    assert inner(A1v, phi, G) == pytest.approx(inner(v, A1phi, G), rel=1e-6)


def test_discrete_poincare_constant_positive():
    ratios = []
    for i in range(10):
        v, _ = _constrained_pair(i)
        ratios.append(inner(apply_A1(v, G, P), v, G) / l2(v, G) ** 2)
    assert min(ratios) > 0


def test_w_examples():
    g = GridSpec(1.0, 1.0, 0.5, 8, 8, 5)
    X, _, Z = g.mesh()
    # v = (x, 0): w = -z and the bottom value is h in every column away from the x walls
    w = diagnose_w(np.stack([X, np.zeros_like(X)]), g)
    np.testing.assert_allclose(w.center[1:-1], -Z[1:-1], atol=1e-14)
    np.testing.assert_allclose(w.bottom[1:-1], g.h, rtol=1e-13)
    np.testing.assert_array_equal(w.faces[..., -1], 0.0)
    v = mode_velocity(g)
    w = diagnose_w(v, g)
    assert np.max(np.abs(w.center)) <= 1e-14 and w.bottom_defect <= 1e-14


def test_w_bottom_defect_after_projection(rng):
    cfg = PoissonConfig(rel_tol=1e-10)
    u = rng.standard_normal((2, *G.shape))
    assert diagnose_w(project(u, G, cfg), G).bottom_defect <= 10 * cfg.rel_tol * l2(u, G)
    assert diagnose_w(u, G).bottom_defect > 1e-3


def test_buoyancy_of_column_profile():
    _, _, Z = G.mesh()
    theta = Z**2 + 3 * Z
    assert np.all(buoyancy(theta, G) == 0)
    assert np.all(momentum_rhs(np.zeros((2, *G.shape)), theta, G, P) == 0)


@pytest.mark.parametrize("i", range(5))
def test_momentum_rhs_orthogonal_to_gradients(rng, i):
    v, _ = _constrained_pair(i)
    theta = random_scalar(G, SPEC, SPEC.rng(100 + i), "temperature")
    rhs = momentum_rhs(0.1 * v, 0.1 * theta, G, P)
    q = rng.standard_normal(G.shape2d)
    gq = gradient_field(q, G)
    assert abs(inner(rhs, gq, G)) <= 1e-8 * l2(rhs, G) * l2(gq, G)


def test_heat_rhs_trivial_cases(rng):
    Q = rng.standard_normal(G.shape)
    p = PhysParams(Q=Q)
    v, _ = _constrained_pair(0)
    np.testing.assert_array_equal(heat_rhs(np.zeros_like(v), rng.standard_normal(G.shape), G, p), Q)
    np.testing.assert_allclose(heat_rhs(v, np.full(G.shape, 4.2), G, p), Q, atol=1e-12)


@pytest.mark.parametrize("i", range(5))
def test_advection_skew_for_projected_velocity(rng, i):
    v, _ = _constrained_pair(i)
    theta = rng.standard_normal(G.shape)
    theta[:2] = theta[-2:] = 0
    theta[:, :2] = theta[:, -2:] = 0
    theta[:, :, :1] = theta[:, :, -1:] = 0
    tr = Transport.from_velocity(v, G, P.velocity_bc)
    work = inner(advect(theta, tr, G, P.temperature_bc), theta, G)
    assert abs(work) <= 1e-8 * l2(theta, G) ** 2
    # the same holds for an arbitrary temperature with insulating walls
    th = rng.standard_normal(G.shape)
    p0 = PhysParams(alpha2=0.0)
    work = inner(advect(th, tr, G, p0.temperature_bc), th, G)
    assert abs(work) <= 1e-8 * l2(th, G) ** 2
    assert math.isfinite(work)
