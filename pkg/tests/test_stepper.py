import math

import numpy as np
import pytest

from hpde.ensembles import EnsembleSpec, decay_mode, decay_rate, mode_scalar, mode_velocity, random_velocity
from hpde.errors import CFLError, ConfigError
from hpde.grid import ALL_NEUMANN, GridSpec
from hpde.helmholtz import project
from hpde.norms import l2
from hpde.operators import PhysParams, diagnose_w
from hpde.stepper import State, StepperConfig, cfl_check, cfl_number, energy_budget, step, with_dt

G = GridSpec(1.0, 1.0, 0.5, 16, 16, 8)
DECAY_P = PhysParams(nu1=0.01, mu1=0.01, f0=0.0, beta=0.0, alpha1=0.0)
DECAY_C = StepperConfig(dt=0.01, nonlinear=False, project=False, diffusion_tol=1e-13)


def _forced_state(amp=0.1, grid=G):
    return State(mode_velocity(grid, amp), mode_scalar(grid, (1, 1, 1), amp))


@pytest.mark.parametrize("scheme", ["imex_euler", "imex_cnab2"])
def test_zero_state_stays_zero(scheme):
    s = State.zeros(G)
    c = StepperConfig(scheme=scheme)
    for _ in range(5):
        s = step(s, G, PhysParams(), c)
    assert np.all(s.v == 0) and np.all(s.theta == 0)
    assert s.t == pytest.approx(0.05)


def test_cnab2_matches_crank_nicolson_factor():
    c = StepperConfig(dt=0.01, scheme="imex_cnab2", nonlinear=False, project=False, diffusion_tol=1e-13)
    s = State(decay_mode(G), np.zeros(G.shape))
    s1 = step(s, G, DECAY_P, c)
    lam = decay_rate(G, DECAY_P.nu1, DECAY_P.mu1, discrete=True)
    # first step is the Euler bootstrap
    assert l2(s1.v, G) / l2(s.v, G) == pytest.approx(1 / (1 + c.dt * lam), rel=1e-10)
    s2 = step(s1, G, DECAY_P, c)
    cn = (1 - 0.5 * c.dt * lam) / (1 + 0.5 * c.dt * lam)
    assert l2(s2.v, G) / l2(s1.v, G) == pytest.approx(cn, rel=1e-10)


def test_decay_error_shrinks_with_dt():
    lam = decay_rate(G, DECAY_P.nu1, DECAY_P.mu1, discrete=True)
    errs = []
    for dt in (0.02, 0.01):
        c = with_dt(DECAY_C, dt)
        s = State(decay_mode(G), np.zeros(G.shape))
        for _ in range(int(round(0.4 / dt))):
            s = step(s, G, DECAY_P, c)
        rate = -math.log(l2(s.v, G) / l2(decay_mode(G), G)) / 0.4
        errs.append(abs(rate - lam))
    assert errs[1] < 0.6 * errs[0]


def test_theta_mean_conserved_short_run():
    p = PhysParams(alpha2=0.0)
    s = State(mode_velocity(G, 0.5), 2.0 + mode_scalar(G, (2, 1, 1), 0.5))
    m0 = s.theta.mean()
    for scheme in ("imex_euler", "imex_cnab2"):
        c = StepperConfig(scheme=scheme)
        t = s
        for _ in range(50):
            t = step(t, G, p, c)
            assert abs(t.theta.mean() - m0) <= 1e-12


def test_cfl_examples(rng):
    assert cfl_number(np.zeros((2, *G.shape)), G, 0.1) == 0.0
    v = np.stack([np.ones(G.shape), np.zeros(G.shape)])
    assert cfl_number(v, G, G.dx / 2, ALL_NEUMANN) == pytest.approx(0.5, rel=1e-14)
    u = rng.standard_normal((2, *G.shape))
    w = diagnose_w(u, G).center
    brute = 0.0
    for i, j, k in np.ndindex(G.shape):
        brute = max(brute, abs(u[0, i, j, k]) / G.dx, abs(u[1, i, j, k]) / G.dy, abs(w[i, j, k]) / G.dz)
    assert cfl_number(u, G, 0.003) == pytest.approx(0.003 * brute, rel=1e-14)


def test_cfl_violation_raises():
    s = _forced_state(amp=5.0)
    c = StepperConfig(dt=0.1)
    assert cfl_check(s, G, c) > c.cfl_limit
    with pytest.raises(CFLError) as exc:
        step(s, G, PhysParams(), c)
    assert exc.value.cfl > exc.value.limit


def test_config_validation():
    with pytest.raises(ConfigError):
        StepperConfig(dt=0.0)
    with pytest.raises(ConfigError):
        StepperConfig(scheme="rk4")
    with pytest.raises(ValueError):
        State(np.full((2, *G.shape), np.inf), np.zeros(G.shape))


def test_step_output_is_projected():
    s = _forced_state()
    p = PhysParams(Q=mode_scalar(G, (1, 1, 1), 1e-2))
    c = StepperConfig()
    for _ in range(3):
        s = step(s, G, p, c)
        assert l2(project(s.v, G, c.projection) - s.v, G) <= 10 * c.projection.rel_tol * l2(s.v, G)


@pytest.mark.parametrize("dt", [0.01, 0.05])
def test_unforced_energy_never_grows(dt):
    p = PhysParams(f0=0.0, beta=0.0)
    spec = EnsembleSpec(K=3, seed=2)
    v = 0.3 * random_velocity(G, spec, spec.rng(0))
    s = State(v, np.zeros(G.shape))
    c = StepperConfig(dt=dt)
    for _ in range(20):
        s1 = step(s, G, p, c)
        assert l2(s1.v, G) <= l2(s.v, G)
        s = s1


def test_trajectories_are_bitwise_reproducible():
    p = PhysParams(Q=mode_scalar(G, (1, 1, 1), 1e-2))
    out = []
    for _ in range(2):
        s = _forced_state()
        for _ in range(10):
            s = step(s, G, p, StepperConfig(scheme="imex_cnab2"))
        out.append((s.v.tobytes(), s.theta.tobytes()))
    assert out[0] == out[1]


def test_energy_budget_zero_state():
    s = State.zeros(G)
    c = StepperConfig()
    e = energy_budget(s, step(s, G, PhysParams(), c), G, PhysParams(), c)
    assert e["residual"] == 0 and e["residual_theta"] == 0


def test_energy_budget_first_order_for_decay():
    res = []
    for dt in (0.02, 0.01, 0.005):
        c = with_dt(DECAY_C, dt)
        s0 = State(decay_mode(G), np.zeros(G.shape))
        res.append(abs(energy_budget(s0, step(s0, G, DECAY_P, c), G, DECAY_P, c)["residual"]))
    r = np.array(res)
    assert np.all(np.abs(np.log2(r[:-1] / r[1:]) - 1.0) <= 0.1)


def _budget_constant(grid, dt):
    p = PhysParams(Q=mode_scalar(grid, (1, 1, 1), 1e-2))
    c = StepperConfig(dt=dt)
    s0 = _forced_state(0.1, grid)
    return abs(energy_budget(s0, step(s0, grid, p, c), grid, p, c)["residual"]) / dt


def test_energy_budget_constant_stable():
    cs = [_budget_constant(G, dt) for dt in (0.02, 0.01, 0.005)]
    assert max(cs) / min(cs) <= 1.25
    fine = _budget_constant(G.refined(), 0.01)
    assert max(fine, cs[1]) / min(fine, cs[1]) <= 2.0
