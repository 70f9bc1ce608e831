import math

import numpy as np
import pytest

from hpde import analysis
from hpde.analysis import (NormReport, absorbing_set_experiment, absorbing_verdict, boundedness_run,
                           gronwall_budget, ju1_terms, ju2_terms, plateau_ok, series_column,
                           stability_check, trend_ok, verify_ju1, verify_ju2)
from hpde.ensembles import EnsembleSpec, decay_mode, mode_scalar, mode_velocity
from hpde.errors import BlowUpError, ConfigError
from hpde.grid import GridSpec
from hpde.operators import PhysParams
from hpde.stepper import State, StepperConfig

G = GridSpec(2.0, 1.5, 0.4, 12, 10, 6)
SMALL = GridSpec(1.0, 1.0, 0.5, 8, 8, 4)


def test_report_columns():
    cols = NormReport.columns()
    assert cols[:15] == ["t", "v_l2", "theta_l2", "v_V1", "theta_V2", "A1v", "A2theta", "v_H2", "theta_H2",
                         "v_H3", "theta_H3", "v_t", "theta_t", "w_bottom_defect", "cfl"]
    assert cols[-1] == "grad_A1v"


def test_ensemble_spec_validation():
    with pytest.raises(ConfigError):
        EnsembleSpec(count=0)
    with pytest.raises(ConfigError):
        EnsembleSpec(K=-1)


def test_ju1_trivial_cases(rng):
    z = np.zeros((2, *G.shape))
    phi, psi = rng.standard_normal((2, *G.shape))
    assert ju1_terms(z, phi, psi, G) == (0.0, 0.0)
    # velocity lives in the first columns, the scalars in the last ones
    v = np.zeros((2, *G.shape))
    v[0, :3] = rng.standard_normal((3, G.ny, G.nz))
    phi[:7] = 0
    psi[:7] = 0
    lhs, rhs = ju1_terms(v, phi, psi, G)
    assert lhs == 0.0 and rhs > 0


def test_ju2_trivial_cases(rng):
    one = np.ones(G.shape)
    lhs, rhs = ju2_terms(one, one, one, G)
    assert lhs == pytest.approx(G.volume, rel=1e-14)
    assert rhs == pytest.approx(G.volume**1.5, rel=1e-14)
    assert lhs / rhs == pytest.approx(G.volume**-0.5, rel=1e-14)
    a, b = rng.standard_normal((2, *G.shape))
    assert ju2_terms(np.zeros(G.shape), a, b, G)[0] == 0.0


def test_ratio_report_counts_degenerate_members():
    rep = analysis._ratio_report([(0.0, 0.0), (1.0, 2.0), (3.0, 4.0)])
    assert rep["skipped"] == 1 and rep["count"] == 2 and rep["max_ratio"] == 0.75
    assert analysis._ratio_report([(0.0, 0.0)])["count"] == 0


def test_verifiers_deterministic_across_thread_counts(monkeypatch):
    spec = EnsembleSpec(count=12, K=2, seed=9)
    monkeypatch.setenv("HPDE_THREADS", "1")
    a = (verify_ju1(SMALL, spec), verify_ju2(SMALL, spec))
    monkeypatch.setenv("HPDE_THREADS", "4")
    b = (verify_ju1(SMALL, spec), verify_ju2(SMALL, spec))
    assert a == b
    assert a[0]["count"] == 12 and a[0]["finite"]


def test_thread_count_env(monkeypatch):
    monkeypatch.setenv("HPDE_THREADS", "1")
    assert analysis.thread_count() == 1
    monkeypatch.setenv("HPDE_THREADS", "junk")
    assert analysis.thread_count() >= 1


def test_stability_check():
    assert stability_check({"max_ratio": 1.0}, {"max_ratio": 1.9})["stable"]
    assert not stability_check({"max_ratio": 1.0}, {"max_ratio": 2.1})["stable"]
    assert not stability_check({"max_ratio": 0.0}, {"max_ratio": 1.0})["stable"]


def test_zero_run_all_zero():
    series = boundedness_run(State.zeros(SMALL), SMALL, PhysParams(), StepperConfig(), 0.2, 0.05)
    assert len(series) == 5
    assert all(max(r.values()[1:]) == 0.0 for r in series)
    g = gronwall_budget(series)
    assert g["constant"] == 0.0 and g["violations"] == 0 and g["skipped"] == 4


def test_forced_run_plateaus():
    p = PhysParams(Q=mode_scalar(SMALL, (1, 1, 1), 1e-2))
    series = boundedness_run(State.zeros(SMALL), SMALL, p, StepperConfig(dt=0.05), 30.0, 0.5)
    t = series_column(series, "t")
    for name in ("theta_l2", "A2theta", "v_H3"):
        y = series_column(series, name)
        assert np.all(np.isfinite(y))
        assert y[-1] > 0
        assert plateau_ok(t, y, 0.0)


def test_diffusion_run_decays_monotonically():
    p = PhysParams(f0=0.0, beta=0.0, alpha1=0.0)
    c = StepperConfig(dt=0.02, nonlinear=False, project=False)
    series = boundedness_run(State(decay_mode(SMALL), np.zeros(SMALL.shape)), SMALL, p, c, 1.0, 0.1)
    a = series_column(series, "A1v")
    assert np.all(np.diff(a) < 0)
    g = gronwall_budget(series)
    assert np.all(np.diff(a**2) < 0)  # the finite-difference part of the budget is negative
    assert g["violations"] == 0 and math.isfinite(g["constant"])


def test_blow_up_aborts_with_series(monkeypatch):
    monkeypatch.setattr(analysis, "BLOWUP_LIMIT", 1e-3)
    ic = State(mode_velocity(SMALL, 0.1), mode_scalar(SMALL, (1, 1, 1), 0.1))
    with pytest.raises(BlowUpError) as exc:
        boundedness_run(ic, SMALL, PhysParams(), StepperConfig(), 1.0, 0.1)
    assert len(exc.value.series) == 1


def test_trend_and_plateau_rules():
    t = np.linspace(0, 10, 41)
    assert trend_ok(t, np.ones_like(t))[0]
    assert not trend_ok(t, 1 + 0.1 * t)[0]
    assert trend_ok(t, 1 + 1e-4 * t)[0]  # below one percent of the window maximum
    noisy = 1 + 0.05 * np.sin(7 * t)
    assert trend_ok(t, noisy)[0]
    assert plateau_ok(t, 1 - np.exp(-t), 0.0)
    assert not plateau_ok(t, np.exp(t / 2), 0.0)


def _fake_series(values, times):
    zero = {c: 0.0 for c in NormReport.columns()}
    return [NormReport(**{**zero, "t": t, **{k: v[i] for k, v in values.items()}}) for i, t in enumerate(times)]


def test_verdict_band_rule():
    t = np.linspace(0, 9, 10)
    flat = {name: np.ones(10) for name in analysis.TRACKED}
    a = _fake_series(flat, t)
    assert absorbing_verdict(a, a)["verdict"] == "PASS"
    b = _fake_series({name: 3 * np.ones(10) for name in analysis.TRACKED}, t)
    res = absorbing_verdict(a, b)
    assert res["verdict"] == "FAIL" and res["norms"]["A1v"]["ratio"] == pytest.approx(3.0)
    with pytest.raises(ValueError):
        absorbing_verdict(a, b[:-1])


def test_unforced_absorbing_experiment_passes():
    # both runs decay below the floor (1e-3 of the larger peak) in the final third
    p = PhysParams(nu1=0.1, mu1=0.1, nu2=0.1, mu2=0.1, f0=0.0, beta=0.0)
    ic = State(mode_velocity(SMALL, 0.05), mode_scalar(SMALL, (1, 1, 1), 0.05))
    res = absorbing_set_experiment(ic, SMALL, p, StepperConfig(dt=0.02), 8.0, 10.0, 0.5)
    assert res["verdict"] == "PASS"


def test_identical_initial_conditions_identical_runs():
    p = PhysParams(Q=mode_scalar(SMALL, (1, 1, 1), 1e-2))
    ic = State(mode_velocity(SMALL, 0.05), mode_scalar(SMALL, (1, 1, 1), 0.05))
    res = absorbing_set_experiment(ic, SMALL, p, StepperConfig(dt=0.05), 2.0, 1.0, 0.5)
    assert res["verdict"] == "PASS"
    assert [r.values() for r in res["series"]["small"]] == [r.values() for r in res["series"]["large"]]
    assert all(r["ratio"] == 1.0 for r in res["norms"].values())


def test_gronwall_nonlinear_run_majorized():
    p = PhysParams(Q=mode_scalar(SMALL, (1, 1, 1), 1e-2))
    ic = State(mode_velocity(SMALL, 0.3), mode_scalar(SMALL, (1, 1, 1), 0.3))
    g = gronwall_budget(boundedness_run(ic, SMALL, p, StepperConfig(), 2.0, 0.1))
    assert g["violations"] == 0 and math.isfinite(g["constant"]) and g["constant"] > 0
    assert g["intervals"] == 20
