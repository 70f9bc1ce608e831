"""Experiment orchestration and on-disk artifacts.

Every experiment writes ``manifest.json`` (canonical configuration, code
version, kernel backend and seed) into the output directory, plus:

* ``run``: ``norms.csv`` and optional field checkpoints;
* ``absorbing``: ``norms_small.csv``, ``norms_large.csv`` and ``verdict.json``;
* ``verify-helmholtz`` / ``verify-lemmas``: ``verify_*.json``;
* ``project``: checkpoints of ``Pu``, ``q1`` and ``q2``.
"""
from __future__ import annotations

import json
import logging
import platform
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .analysis import (NormReport, absorbing_set_experiment, boundedness_run, stability_check,
                       verify_ju1, verify_ju2)
from .config import RunConfig, dump_config
from .ensembles import EnsembleSpec, mode_scalar, mode_velocity, random_scalar, random_velocity
from .errors import BlowUpError, CFLError, ConfigError, HPDEError, SolverError
from .grid import (GridSpec, grid_from_header, read_checkpoint, read_vector_checkpoint,
                   write_checkpoint, write_vector_checkpoint)
from .helmholtz import decompose, orthogonality_report
from .kernels import BACKEND
from .stepper import State

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_FAIL = 4
EXIT_BLOWUP = 5


@dataclass
class RunResult:
    exit_code: int
    message: str
    artifacts: list[Path] = field(default_factory=list)
    summary: dict = field(default_factory=dict)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, BlowUpError):
        return EXIT_BLOWUP
    if isinstance(exc, (SolverError, CFLError)):
        return EXIT_SOLVER
    return EXIT_SOLVER


# --- CSV ------------------------------------------------------------------------

def write_csv(path: Path, series: Sequence[NormReport]) -> Path:
    """Header row plus one row per report, 17 significant digits."""
    lines = [",".join(NormReport.columns())]
    lines.extend(",".join(format(x, ".17g") for x in r.values()) for r in series)
    path.write_text("\n".join(lines) + "\n")
    return path


def read_csv(path) -> tuple[list[str], np.ndarray]:
    text = Path(path).read_text().splitlines()
    if not text:
        raise ValueError(f"{path}: empty CSV")
    header = [h.strip() for h in text[0].split(",")]
    rows = [[float(x) for x in line.split(",")] for line in text[1:] if line.strip()]
    data = np.array(rows, dtype=np.float64).reshape(len(rows), len(header))
    return header, data


# --- inputs ----------------------------------------------------------------------

def _grid_matches(a: GridSpec, b: GridSpec) -> bool:
    return a.shape == b.shape and np.allclose((a.Lx, a.Ly, a.h), (b.Lx, b.Ly, b.h))


def build_source(cfg: RunConfig) -> np.ndarray | None:
    q = cfg.q_source
    grid = cfg.grid
    if q.kind == "zero":
        return None
    if q.kind == "mode":
        return mode_scalar(grid, q.k, q.amplitude)
    header, data = read_checkpoint(q.path)
    if not _grid_matches(grid_from_header(header), grid):
        raise ConfigError(f"q_source.path grid {header[:3]} does not match the configured grid")
    return q.amplitude * data


def build_initial_state(cfg: RunConfig) -> State:
    ic = cfg.ic
    grid = cfg.grid
    if ic.kind == "zero":
        return State.zeros(grid)
    if ic.kind == "mode":
        return State(mode_velocity(grid, ic.amplitude), mode_scalar(grid, ic.k, ic.amplitude))
    if ic.kind == "random":
        spec = EnsembleSpec(ic.count, ic.K, ic.decay, cfg.experiment.seed)
        rng = spec.rng(0)
        v = random_velocity(grid, spec, rng, cfg.projection)
        th = random_scalar(grid, spec, rng, "temperature")
        return State(ic.amplitude * v, ic.amplitude * th)
    vgrid, v = read_vector_checkpoint(ic.path)
    header, th = read_checkpoint(ic.path + ".theta.hpde")
    if not (_grid_matches(vgrid, grid) and _grid_matches(grid_from_header(header), grid)):
        raise ConfigError("ic.path fields do not match the configured grid")
    return State(ic.amplitude * v, ic.amplitude * th)


# --- manifest -------------------------------------------------------------------

def manifest(cfg: RunConfig, extra: dict | None = None) -> dict:
    out = {
        "code_version": __version__,
        "backend": BACKEND,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "experiment": cfg.experiment.kind,
        "seed": cfg.experiment.seed,
        "config": dump_config(cfg),
    }
    if extra:
        out.update(extra)
    return out


def _write_json(path: Path, obj) -> Path:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, NormReport):
        return o.as_dict()
    raise TypeError(f"cannot serialise {type(o).__name__}")


# --- experiments ----------------------------------------------------------------

def _checkpoint_writer(cfg: RunConfig, out: Path, prefix: str = ""):
    if not cfg.experiment.checkpoints:
        return None
    ck = out / "checkpoints"
    ck.mkdir(parents=True, exist_ok=True)
    counter = {"n": 0}

    def write(state: State, _rep: NormReport):
        stem = ck / f"{prefix}state_{counter['n']:05d}"
        write_vector_checkpoint(stem, state.v, cfg.grid, "v")
        write_checkpoint(str(stem) + ".theta.hpde", state.theta, cfg.grid, "theta")
        counter["n"] += 1

    return write


def _run(cfg: RunConfig, out: Path) -> RunResult:
    p = cfg.phys_params(build_source(cfg))
    ic = build_initial_state(cfg)
    writer = _checkpoint_writer(cfg, out)
    csv = out / "norms.csv"
    try:
        series = boundedness_run(ic, cfg.grid, p, cfg.stepper, cfg.experiment.T_end,
                                 cfg.experiment.output_interval, writer)
    except BlowUpError as exc:
        write_csv(csv, exc.series)
        return RunResult(EXIT_BLOWUP, f"blow-up: {exc}", [csv])
    write_csv(csv, series)
    last = series[-1]
    return RunResult(EXIT_OK, f"completed t = {last.t:.6g}", [csv], {"final": last.as_dict()})


def _absorbing(cfg: RunConfig, out: Path) -> RunResult:
    p = cfg.phys_params(build_source(cfg))
    ic = build_initial_state(cfg)
    writers = {lab: _checkpoint_writer(cfg, out, lab + "_") for lab in ("small", "large")}

    def on_output(label, state, rep):
        if writers[label] is not None:
            writers[label](state, rep)

    try:
        res = absorbing_set_experiment(ic, cfg.grid, p, cfg.stepper, cfg.experiment.T_end,
                                       cfg.experiment.factor, cfg.experiment.output_interval, on_output)
    except BlowUpError as exc:
        csv = write_csv(out / "norms_blowup.csv", exc.series)
        _write_json(out / "verdict.json", {"verdict": "FAIL", "reason": str(exc)})
        return RunResult(EXIT_BLOWUP, f"blow-up: {exc}", [csv])
    paths = [write_csv(out / f"norms_{lab}.csv", res["series"][lab]) for lab in ("small", "large")]
    verdict = {k: v for k, v in res.items() if k != "series"}
    paths.append(_write_json(out / "verdict.json", verdict))
    code = EXIT_OK if verdict["verdict"] == "PASS" else EXIT_FAIL
    return RunResult(code, f"absorbing-set verdict {verdict['verdict']}", paths, verdict)


HELMHOLTZ_GRIDS = ((4, 4, 4), (5, 7, 4), (6, 6, 5), (8, 8, 6))


def verify_helmholtz(cfg: RunConfig) -> dict:
    """Dense-oracle comparison and projector invariants on small grids."""
    from . import oracles

    tol = cfg.verify.tolerance
    g0 = cfg.grid
    shapes = [s for s in HELMHOLTZ_GRIDS]
    if g0.nx * g0.ny * g0.nz <= 8 * 8 * 6 and g0.shape not in shapes:
        shapes.append(g0.shape)
    rows = []
    worst = 0.0
    rng = np.random.default_rng(cfg.experiment.seed)
    for shape in shapes:
        grid = GridSpec(g0.Lx, g0.Ly, g0.h, *shape)
        P = oracles.projection_matrix(grid)
        for _ in range(cfg.verify.trials):
            u = rng.standard_normal((2, *grid.shape))
            dec = decompose(u, grid, cfg.projection)
            ref = oracles.apply_matrix_to_vector_field(P, u)
            err = float(np.linalg.norm(dec.pu - ref) / np.linalg.norm(u))
            inv = orthogonality_report(u, grid, cfg.projection)
            checks = {"oracle": err, **{k: abs(v) for k, v in inv.items() if k != "q1_mean"}}
            worst = max(worst, *checks.values())
            rows.append({"grid": list(shape), **checks})
    return {"tolerance": tol, "worst": worst, "pass": worst <= tol, "trials": rows}


def verify_lemmas(cfg: RunConfig) -> dict:
    v = cfg.verify
    spec = EnsembleSpec(v.count, v.K, v.decay, cfg.experiment.seed)
    out = {}
    for name, fn in (("ju1", verify_ju1), ("ju2", verify_ju2)):
        reports = {}
        for n in v.resolutions:
            g = GridSpec(cfg.grid.Lx, cfg.grid.Ly, cfg.grid.h, n, n, n)
            reports[n] = fn(g, spec)
        res = sorted(reports)
        checks = [stability_check(reports[a], reports[b]) for a, b in zip(res, res[1:])]
        out[name] = {"reports": {str(k): r for k, r in reports.items()}, "stability": checks,
                     "pass": all(c["stable"] for c in checks) and all(r.get("finite", True) for r in reports.values())}
    out["pass"] = out["ju1"]["pass"] and out["ju2"]["pass"]
    return out


def _verify(cfg: RunConfig, out: Path, which: Sequence[str]) -> RunResult:
    paths, ok, summary = [], True, {}
    if "verify-helmholtz" in which:
        rep = verify_helmholtz(cfg)
        paths.append(_write_json(out / "verify_helmholtz.json", rep))
        ok &= rep["pass"]
        summary["helmholtz_worst"] = rep["worst"]
    if "verify-lemmas" in which:
        rep = verify_lemmas(cfg)
        paths.append(_write_json(out / "verify_lemmas.json", rep))
        ok &= rep["pass"]
        summary["ju1_max"] = {k: r["max_ratio"] for k, r in rep["ju1"]["reports"].items()}
        summary["ju2_max"] = {k: r["max_ratio"] for k, r in rep["ju2"]["reports"].items()}
    return RunResult(EXIT_OK if ok else EXIT_FAIL, "verification " + ("PASS" if ok else "FAIL"), paths, summary)


def project_fields(v: np.ndarray, grid: GridSpec, prefix, cfg=None) -> tuple[list[Path], dict]:
    """Decompose ``v`` and write ``<prefix>.pu.v{1,2}.hpde``, ``.q1.hpde``, ``.q2.hpde``."""
    dec = decompose(v, grid, cfg)
    prefix = str(prefix)
    Path(prefix).parent.mkdir(parents=True, exist_ok=True)
    paths = list(write_vector_checkpoint(prefix + ".pu", dec.pu, grid, "pu"))
    paths.append(write_checkpoint(prefix + ".q1.hpde", dec.q1, grid, "q1"))
    paths.append(write_checkpoint(prefix + ".q2.hpde", dec.q2, grid, "q2"))
    return paths, dec.residuals


def _project(cfg: RunConfig, out: Path) -> RunResult:
    ic = build_initial_state(cfg)
    paths, res = project_fields(ic.v, cfg.grid, out / "projected", cfg.projection)
    return RunResult(EXIT_OK, residual_line(res), paths, res)


def residual_line(res: dict) -> str:
    return (f"q2 residual {res['q2']:.3e}  q1 residual {res['q1']:.3e}  "
            f"compatibility defect {res['compatibility_defect']:.3e}  "
            f"mean divergence {res['mean_divergence']:.3e}")


def run_experiment(cfg: RunConfig, kinds: Sequence[str] | None = None) -> RunResult:
    """Dispatch on ``cfg.experiment.kind`` (or the explicit ``kinds``)."""
    out = cfg.output_path
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return RunResult(EXIT_CONFIG, f"cannot create output directory {out}: {exc}")
    kind = cfg.experiment.kind
    mpath = _write_json(out / "manifest.json", manifest(cfg, {"requested": list(kinds or [kind])}))
    try:
        if kinds:
            result = _verify(cfg, out, kinds)
        elif kind == "run":
            result = _run(cfg, out)
        elif kind == "absorbing":
            result = _absorbing(cfg, out)
        elif kind == "project":
            result = _project(cfg, out)
        else:
            result = _verify(cfg, out, [kind])
    except HPDEError as exc:
        log.error("%s", exc)
        return RunResult(exit_code_for(exc), str(exc), [mpath])
    result.artifacts.insert(0, mpath)
    return result
