import numpy as np
import pytest

from hpde.ensembles import (EnsembleSpec, decay_mode, decay_rate, mode_scalar, mode_velocity, random_scalar,
                            random_velocity)
from hpde.grid import GridSpec
from hpde.helmholtz import mean_divergence
from hpde.norms import l2_2d
from hpde.operators import PhysParams, apply_L1

G = GridSpec(1.0, 1.3, 0.6, 10, 8, 6)


def test_members_reproducible_and_independent():
    spec = EnsembleSpec(count=3, K=3, seed=42)
    a = random_scalar(G, spec, spec.rng(1))
    b = random_scalar(G, spec, spec.rng(1))
    c = random_scalar(G, spec, spec.rng(2))
    assert np.array_equal(a, b) and not np.array_equal(a, c)
    other = EnsembleSpec(count=3, K=3, seed=43)
    assert not np.array_equal(a, random_scalar(G, other, other.rng(1)))


def test_cutoff_zero_is_single_coefficient():
    spec = EnsembleSpec(K=0, seed=1)
    phi = random_scalar(G, spec, spec.rng(0), "temperature")
    assert np.ptp(phi) == 0.0


def test_unknown_kind_rejected():
    spec = EnsembleSpec()
    with pytest.raises(ValueError):
        random_scalar(G, spec, spec.rng(0), "pressure")


def test_constrained_velocity_in_h1():
    spec = EnsembleSpec(K=3, seed=1)
    v = random_velocity(G, spec, spec.rng(0))
    assert l2_2d(mean_divergence(v, G), G) <= 1e-9
    free = random_velocity(G, spec, spec.rng(0), constrained=False)
    assert l2_2d(mean_divergence(free, G), G) > 1e-3


def test_mode_velocity_exactly_constrained():
    v = mode_velocity(G, 2.0)
    assert l2_2d(mean_divergence(v, G), G) <= 1e-13
    assert np.all(np.abs(v[..., 0]) < np.abs(v[..., -1]) + 1e-15)


def test_mode_scalar_shape_and_amplitude():
    th = mode_scalar(G, (0, 0, 0), 3.0)
    assert np.all(th == 3.0)
    assert mode_scalar(G, (1, 2, 1)).shape == G.shape


def test_decay_mode_is_discrete_eigenvector():
    p = PhysParams(nu1=0.02, mu1=0.05, alpha1=0.0)
    v = decay_mode(G)
    lam = decay_rate(G, p.nu1, p.mu1, discrete=True)
    np.testing.assert_allclose(apply_L1(v, G, p), lam * v, rtol=0, atol=1e-12)
    assert lam < decay_rate(G, p.nu1, p.mu1)
    fine = G.refined(4)
    assert decay_rate(fine, p.nu1, p.mu1, True) == pytest.approx(decay_rate(fine, p.nu1, p.mu1), rel=2e-3)
