"""Numerical checks of the inequalities and long-time bounds.

The boundedness statements being tested are qualitative, so every verdict
here is property based: finite ratios that are stable under refinement,
plateaus, and agreement of long-time sups between runs that start far apart.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Callable, Iterable, Sequence

import numpy as np

from .calculus import integrate_from_top
from .ensembles import EnsembleSpec, random_scalar
from .errors import BlowUpError
from .grid import GridSpec
from .norms import gradient3, hm, l2
from .operators import PhysParams, apply_A1, apply_A2, bilinear_a1, bilinear_a2, diagnose_w
from .stepper import State, StepperConfig, cfl_number, explicit_tendencies, step

BLOWUP_LIMIT = 1e8


def thread_count() -> int:
    """Worker threads for ensemble evaluation, capped by ``HPDE_THREADS``."""
    raw = os.environ.get("HPDE_THREADS", "").strip()
    n = os.cpu_count() or 1
    if raw:
        try:
            n = min(n, max(1, int(raw)))
        except ValueError:
            pass
    return max(1, n)


def _map_ordered(fn: Callable, items: Iterable) -> list:
    items = list(items)
    workers = thread_count()
    if workers == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# --- norm reports -------------------------------------------------------------

@dataclass(frozen=True)
class NormReport:
    t: float
    v_l2: float
    theta_l2: float
    v_V1: float
    theta_V2: float
    A1v: float
    A2theta: float
    v_H2: float
    theta_H2: float
    v_H3: float
    theta_H3: float
    v_t: float
    theta_t: float
    w_bottom_defect: float
    cfl: float
    grad_A1v: float

    @classmethod
    def columns(cls) -> list[str]:
        return [f.name for f in fields(cls)]

    def values(self) -> list[float]:
        return [float(getattr(self, c)) for c in self.columns()]

    def as_dict(self) -> dict:
        return asdict(self)

    def max_norm(self) -> float:
        return max(self.values()[1:])


TRACKED = ("A1v", "A2theta", "v_t", "theta_t", "v_H3", "theta_H3")


def norm_report(s: State, grid: GridSpec, p: PhysParams, c: StepperConfig) -> NormReport:
    """Evaluate every tracked norm of a state."""
    v, th = s.v, s.theta
    a1v = apply_A1(v, grid, p, c.projection)
    a2t = apply_A2(th, grid, p)
    fv, ft = explicit_tendencies(s, grid, p, c)
    vt = fv - a1v
    tt = ft - a2t
    grad_a1v = math.sqrt(sum(l2(d, grid) ** 2 for d in gradient3(a1v, grid)))
    return NormReport(
        t=float(s.t),
        v_l2=l2(v, grid),
        theta_l2=l2(th, grid),
        v_V1=math.sqrt(max(bilinear_a1(v, v, grid, p), 0.0)),
        theta_V2=math.sqrt(max(bilinear_a2(th, th, grid, p), 0.0)),
        A1v=l2(a1v, grid),
        A2theta=l2(a2t, grid),
        v_H2=hm(v, grid, 2),
        theta_H2=hm(th, grid, 2),
        v_H3=hm(v, grid, 3),
        theta_H3=hm(th, grid, 3),
        v_t=l2(vt, grid),
        theta_t=l2(tt, grid),
        w_bottom_defect=diagnose_w(v, grid, p.velocity_bc).bottom_defect,
        cfl=cfl_number(v, grid, c.dt, p.velocity_bc),
        grad_A1v=grad_a1v,
    )


def boundedness_run(ic: State, grid: GridSpec, p: PhysParams, c: StepperConfig, T_end: float,
                    output_interval: float | None = None,
                    on_output: Callable[[State, NormReport], None] | None = None) -> list[NormReport]:
    """Integrate to ``T_end`` and return a report every ``output_interval``.

    Raises :class:`BlowUpError` (carrying the partial series) as soon as any
    norm exceeds ``1e8`` or stops being finite.
    """
    n_steps = int(round(T_end / c.dt))
    every = max(1, int(round((output_interval or T_end / 50) / c.dt)))
    series: list[NormReport] = []
    s = ic

    def emit(state: State):
        rep = norm_report(state, grid, p, c)
        series.append(rep)
        big = rep.max_norm()
        if not math.isfinite(big) or big > BLOWUP_LIMIT:
            raise BlowUpError(f"norm exceeded {BLOWUP_LIMIT:g} at t = {state.t:.6g}", series)
        if on_output is not None:
            on_output(state, rep)

    emit(s)
    for n in range(1, n_steps + 1):
        try:
            s = step(s, grid, p, c)
        except (ValueError, FloatingPointError) as exc:
            raise BlowUpError(f"state became non-finite at step {n}: {exc}", series) from exc
        if n % every == 0 or n == n_steps:
            emit(s)
    return series


def series_column(series: Sequence[NormReport], name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in series], dtype=np.float64)


# --- verdict helpers ------------------------------------------------------------

BAND_FACTOR = 2.0
FLOOR_FRACTION = 1e-3
TREND_RELATIVE = 1e-2
PLATEAU_FACTOR = 2.0


def trend_ok(t: np.ndarray, y: np.ndarray) -> tuple[bool, float]:
    """Whether a least-squares line through ``(t, y)`` does not rise.

    The rise over the window must not exceed twice its standard error or one
    percent of the window maximum, whichever is larger.
    """
    if len(t) < 3 or np.ptp(t) == 0:
        return True, 0.0
    A = np.vstack([t, np.ones_like(t)]).T
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    dof = max(len(t) - 2, 1)
    resid = y - A @ coef
    sigma = math.sqrt(float(resid @ resid) / dof / float(np.sum((t - t.mean()) ** 2)))
    window = float(np.ptp(t))
    allowed = max(2.0 * sigma * window, TREND_RELATIVE * float(np.max(np.abs(y))))
    return slope * window <= allowed, slope


def plateau_ok(t: np.ndarray, y: np.ndarray, floor: float) -> bool:
    """``sup`` over the second half stays below twice the value at mid-run."""
    half = t[-1] / 2.0
    i_mid = int(np.argmin(np.abs(t - half)))
    ref = max(float(y[i_mid]), floor)
    return float(np.max(y[t >= t[i_mid]])) < PLATEAU_FACTOR * ref if ref > 0 else float(np.max(y)) == 0.0


def absorbing_verdict(run_a: Sequence[NormReport], run_b: Sequence[NormReport],
                      names: Sequence[str] = TRACKED) -> dict:
    """Compare two runs over the final third of their common time window."""
    t = series_column(run_a, "t")
    if len(t) != len(run_b) or not np.allclose(t, series_column(run_b, "t")):
        raise ValueError("runs must share output times")
    T = t[-1]
    tail = t >= 2.0 * T / 3.0
    per_norm = {}
    passed = True
    for name in names:
        ya, yb = series_column(run_a, name), series_column(run_b, name)
        finite = bool(np.all(np.isfinite(ya)) and np.all(np.isfinite(yb)))
        floor = FLOOR_FRACTION * max(float(np.max(ya)), float(np.max(yb)), 0.0)
        sa = max(float(np.max(ya[tail])), floor)
        sb = max(float(np.max(yb[tail])), floor)
        ratio = 1.0 if max(sa, sb) == 0 else max(sa, sb) / min(sa, sb)
        ta, slope_a = trend_ok(t[tail], ya[tail])
        tb, slope_b = trend_ok(t[tail], yb[tail])
        pa = plateau_ok(t, ya, floor)
        pb = plateau_ok(t, yb, floor)
        ok = finite and ratio <= BAND_FACTOR and ta and tb and pa and pb
        passed &= ok
        per_norm[name] = {
            "sup_a": sa, "sup_b": sb, "ratio": ratio, "slope_a": slope_a, "slope_b": slope_b,
            "trend_ok": ta and tb, "plateau_ok": pa and pb, "finite": finite, "pass": ok,
        }
    return {"verdict": "PASS" if passed else "FAIL", "norms": per_norm, "window_start": float(2 * T / 3)}


def absorbing_set_experiment(ic_small: State, grid: GridSpec, p: PhysParams, c: StepperConfig,
                             T_end: float, factor: float = 10.0, output_interval: float | None = None,
                             on_output: Callable[[str, State, NormReport], None] | None = None) -> dict:
    """Run from ``ic_small`` and from ``factor * ic_small`` and compare."""
    ic_large = ic_small.scaled(factor)
    runs = {}
    for label, ic in (("small", ic_small), ("large", ic_large)):
        cb = (lambda s, r, _l=label: on_output(_l, s, r)) if on_output else None
        runs[label] = boundedness_run(ic, grid, p, c, T_end, output_interval, cb)
    verdict = absorbing_verdict(runs["small"], runs["large"])
    verdict["series"] = runs
    verdict["factor"] = factor
    return verdict


# --- Gronwall budget ------------------------------------------------------------

def gronwall_budget(series: Sequence[NormReport]) -> dict:
    """Compare ``d/dt |A1 v|^2 + |grad3 A1 v|^2`` with the series-built majorant
    ``g1 y + h`` interval by interval.

    ``y = |A1 v|^2``, ``g1 = |v|^2 |v|_V1^6 + |v|_V1 |A1 v| + |v|_V1^4 |A1 v|^2``,
    ``h = |v|_V1^2 + |A2 theta|^2``.  ``|grad3 A1 v|`` stands in for the
    three-halves power of ``A1``, which is not computed.  Time integrals use
    the trapezoid rule.
    """
    t = series_column(series, "t")
    if len(t) < 2:
        return {"constant": 0.0, "intervals": 0, "skipped": len(t), "violations": 0, "lhs": [], "rhs": []}
    v = series_column(series, "v_l2")
    V = series_column(series, "v_V1")
    A = series_column(series, "A1v")
    A2 = series_column(series, "A2theta")
    G = series_column(series, "grad_A1v")
    y = A * A
    g1 = v**2 * V**6 + V * A + V**4 * A**2
    h = V**2 + A2**2
    rhs_pt = g1 * y + h
    dt = np.diff(t)
    lhs = np.diff(y) / dt + 0.5 * (G[1:] ** 2 + G[:-1] ** 2)
    rhs = 0.5 * (rhs_pt[1:] + rhs_pt[:-1])
    positive = rhs > 0
    violations = int(np.sum((lhs > 0) & ~positive))
    ratios = lhs[positive] / rhs[positive]
    const = float(max(np.max(ratios), 0.0)) if ratios.size else 0.0
    return {
        "constant": const,
        "intervals": int(len(dt)),
        "skipped": int(np.sum(~positive)),
        "violations": violations,
        "lhs": lhs.tolist(),
        "rhs": rhs.tolist(),
        "stand_in": "grad3(A1 v) replaces A1^(3/2) v",
    }


# --- inequality verifiers ---------------------------------------------------------

def _hgrad(a: np.ndarray, grid: GridSpec) -> list[np.ndarray]:
    comps = [a] if a.shape == grid.shape else list(a)
    return [np.gradient(c, sp, axis=ax, edge_order=2) for c in comps for ax, sp in ((0, grid.dx), (1, grid.dy))]


def _stack_l2(parts: list[np.ndarray], grid: GridSpec) -> float:
    return math.sqrt(sum(l2(q, grid) ** 2 for q in parts))


def _stack_h1(parts: list[np.ndarray], grid: GridSpec) -> float:
    return math.sqrt(sum(hm(q, grid, 1) ** 2 for q in parts))


def ju1_terms(v: np.ndarray, phi: np.ndarray, psi: np.ndarray, grid: GridSpec) -> tuple[float, float]:
    """``|<(int_z^0 div v) phi, psi>|`` and
    ``|grad v|^(1/2) |grad v|_H1^(1/2) |phi|^(1/2) |phi|_H1^(1/2) |psi|``."""
    gv = _hgrad(v, grid)  # d1 v1, d2 v1, d1 v2, d2 v2
    w = integrate_from_top(gv[0] + gv[3], grid.dz)
    lhs = abs(grid.dV * float(np.sum(w * phi * psi)))
    rhs = math.sqrt(_stack_l2(gv, grid) * _stack_h1(gv, grid) * l2(phi, grid) * hm(phi, grid, 1)) * l2(psi, grid)
    return lhs, rhs


def _ju2_factor(a: np.ndarray, grid: GridSpec) -> float:
    n = l2(a, grid)
    nz = l2(np.gradient(a, grid.dz, axis=2, edge_order=2), grid)
    ng = _stack_l2(_hgrad(a, grid), grid)
    return n**0.25 * (n + nz) ** 0.25 * (n + ng) ** 0.5


def ju2_terms(phi: np.ndarray, psi: np.ndarray, chi: np.ndarray, grid: GridSpec) -> tuple[float, float]:
    """``int |phi psi chi|`` and the anisotropic product bound."""
    lhs = grid.dV * float(np.sum(np.abs(phi * psi * chi)))
    rhs = _ju2_factor(phi, grid) * _ju2_factor(psi, grid) * l2(chi, grid)
    return lhs, rhs


def _ratio_report(pairs: list[tuple[float, float]]) -> dict:
    ratios = np.array([l / r for l, r in pairs if r > 0])
    skipped = sum(1 for _, r in pairs if not r > 0)
    if ratios.size == 0:
        return {"max_ratio": 0.0, "count": 0, "skipped": skipped, "quantiles": [0.0] * 5}
    q = np.quantile(ratios, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {
        "max_ratio": float(ratios.max()),
        "count": int(ratios.size),
        "skipped": int(skipped),
        "quantiles": [float(x) for x in q],
        "finite": bool(np.all(np.isfinite(ratios))),
    }


def verify_ju1(grid: GridSpec, ensemble: EnsembleSpec) -> dict:
    def member(i: int):
        rng = ensemble.rng(i)
        v = np.stack([random_scalar(grid, ensemble, rng), random_scalar(grid, ensemble, rng)])
        phi = random_scalar(grid, ensemble, rng)
        psi = random_scalar(grid, ensemble, rng)
        return ju1_terms(v, phi, psi, grid)

    return _ratio_report(_map_ordered(member, range(ensemble.count)))


def verify_ju2(grid: GridSpec, ensemble: EnsembleSpec) -> dict:
    def member(i: int):
        rng = ensemble.rng(i)
        fields_ = [random_scalar(grid, ensemble, rng) for _ in range(3)]
        return ju2_terms(*fields_, grid)

    return _ratio_report(_map_ordered(member, range(ensemble.count)))


def stability_check(coarse: dict, fine: dict, factor: float = 2.0) -> dict:
    """Factor-of-two agreement of ensemble maxima between two resolutions."""
    a, b = coarse["max_ratio"], fine["max_ratio"]
    ok = math.isfinite(a) and math.isfinite(b) and a > 0 and b > 0 and max(a, b) / min(a, b) <= factor
    return {"coarse": a, "fine": b, "ratio": (max(a, b) / min(a, b)) if a > 0 and b > 0 else math.inf, "stable": ok}
