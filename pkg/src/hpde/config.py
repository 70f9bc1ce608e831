"""Run configuration: bracketed sections of ``key = value`` lines.

Every key has a documented default (see :data:`SCHEMA`), unknown sections
and keys are rejected, and :func:`dump_config` writes a canonical form that
parses back to an identical :class:`RunConfig`.
"""
from __future__ import annotations

import configparser
import os
import re
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Callable

from .errors import ConfigError
from .grid import GridSpec
from .poisson import PoissonConfig
from .stepper import SCHEMES, StepperConfig

EXPERIMENTS = ("run", "project", "verify-helmholtz", "verify-lemmas", "absorbing")
IC_KINDS = ("zero", "mode", "file", "random")
Q_KINDS = ("zero", "mode", "file")


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _triple(text: str) -> tuple[int, int, int]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if len(parts) != 3:
        raise ValueError(f"expected three integers, got {text!r}")
    vals = tuple(int(p) for p in parts)
    if any(v < 0 for v in vals):
        raise ValueError("wavenumbers must be >= 0")
    return vals  # type: ignore[return-value]


def _int_list(text: str) -> tuple[int, ...]:
    parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
    if not parts:
        raise ValueError("empty list")
    return tuple(int(p) for p in parts)


def _optional_int(text: str) -> int | None:
    t = text.strip().lower()
    return None if t in ("", "auto", "none") else int(t)


def _fmt(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return "auto"
    if isinstance(value, tuple):
        return ", ".join(str(v) for v in value)
    return str(value)


# section -> key -> (parser, default)
SCHEMA: dict[str, dict[str, tuple[Callable[[str], Any], Any]]] = {
    "grid": {
        "Lx": (float, 1.0), "Ly": (float, 1.0), "h": (float, 0.5),
        "nx": (int, 16), "ny": (int, 16), "nz": (int, 8),
    },
    "physics": {
        "nu1": (float, 1e-2), "mu1": (float, 1e-2), "nu2": (float, 1e-2), "mu2": (float, 1e-2),
        "f0": (float, 1.0), "beta": (float, 0.5), "alpha1": (float, 0.1), "alpha2": (float, 0.1),
    },
    "stepper": {
        "dt": (float, 1e-2), "scheme": (str, "imex_euler"), "diffusion_tol": (float, 1e-10),
        "diffusion_max_iter": (int, 2000), "cfl_limit": (float, 0.5),
        "nonlinear": (_bool, True), "project": (_bool, True),
    },
    "projection": {
        "method": (str, "cg"), "rel_tol": (float, 1e-10), "max_iter": (_optional_int, None),
    },
    "experiment": {
        "kind": (str, "run"), "T_end": (float, 1.0), "output_interval": (float, 0.1),
        "output_dir": (str, "output"), "seed": (int, 0), "factor": (float, 10.0),
        "checkpoints": (_bool, True),
    },
    "ic": {
        "kind": (str, "zero"), "k": (_triple, (1, 1, 1)), "amplitude": (float, 1.0),
        "path": (str, ""), "count": (int, 1), "K": (int, 4), "decay": (float, 2.0),
    },
    "q_source": {
        "kind": (str, "zero"), "k": (_triple, (1, 1, 1)), "amplitude": (float, 1.0), "path": (str, ""),
    },
    "verify": {
        "count": (int, 500), "K": (int, 4), "decay": (float, 2.0), "resolutions": (_int_list, (16, 32)),
        "trials": (int, 20), "tolerance": (float, 1e-8),
    },
}


@dataclass(frozen=True)
class PhysicsConfig:
    nu1: float = 1e-2
    mu1: float = 1e-2
    nu2: float = 1e-2
    mu2: float = 1e-2
    f0: float = 1.0
    beta: float = 0.5
    alpha1: float = 0.1
    alpha2: float = 0.1


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str = "run"
    T_end: float = 1.0
    output_interval: float = 0.1
    output_dir: str = "output"
    seed: int = 0
    factor: float = 10.0
    checkpoints: bool = True


@dataclass(frozen=True)
class ICConfig:
    kind: str = "zero"
    k: tuple[int, int, int] = (1, 1, 1)
    amplitude: float = 1.0
    path: str = ""
    count: int = 1
    K: int = 4
    decay: float = 2.0


@dataclass(frozen=True)
class QConfig:
    kind: str = "zero"
    k: tuple[int, int, int] = (1, 1, 1)
    amplitude: float = 1.0
    path: str = ""


@dataclass(frozen=True)
class VerifyConfig:
    count: int = 500
    K: int = 4
    decay: float = 2.0
    resolutions: tuple[int, ...] = (16, 32)
    trials: int = 20
    tolerance: float = 1e-8


@dataclass(frozen=True)
class RunConfig:
    grid: GridSpec = field(default_factory=GridSpec)
    physics: PhysicsConfig = field(default_factory=PhysicsConfig)
    stepper: StepperConfig = field(default_factory=StepperConfig)
    projection: PoissonConfig = field(default_factory=PoissonConfig)
    experiment: ExperimentConfig = field(default_factory=ExperimentConfig)
    ic: ICConfig = field(default_factory=ICConfig)
    q_source: QConfig = field(default_factory=QConfig)
    verify: VerifyConfig = field(default_factory=VerifyConfig)
    source: str = field(default="", compare=False)

    def phys_params(self, Q=None):
        from .operators import PhysParams

        return PhysParams(**{f.name: getattr(self.physics, f.name) for f in fields(PhysicsConfig)}, Q=Q)

    @property
    def output_path(self) -> Path:
        return Path(self.experiment.output_dir)


def _line_numbers(text: str) -> dict[tuple[str, str], int]:
    where: dict[tuple[str, str], int] = {}
    section = ""
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        if not s or s[0] in "#;":
            continue
        m = re.match(r"^\[(.+)\]$", s)
        if m:
            section = m.group(1).strip()
            where[(section, "")] = no
            continue
        key = re.split(r"[=:]", s, maxsplit=1)[0].strip()
        where[(section, key)] = no
    return where


def parse_config_text(text: str, base_dir: Path | str = ".", source: str = "<string>",
                      check_paths: bool = True) -> RunConfig:
    """Parse and validate configuration text."""
    parser = configparser.ConfigParser(interpolation=None, strict=True, empty_lines_in_values=False)
    parser.optionxform = str  # type: ignore[assignment]
    try:
        parser.read_string(text, source=source)
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError(f"{source}: line {exc.lineno}: key outside of a [section]") from exc
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else "?"
        raise ConfigError(f"{source}: line {lineno}: cannot parse line") from exc
    except (configparser.DuplicateOptionError, configparser.DuplicateSectionError) as exc:
        raise ConfigError(f"{source}: line {exc.lineno}: {exc.message if hasattr(exc, 'message') else exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from exc

    lines = _line_numbers(text)
    values: dict[str, dict[str, Any]] = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: line {lines.get((section, ''), '?')}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: line {lines.get((section, key), '?')}: unknown key {section}.{key}")
            conv = SCHEMA[section][key][0]
            try:
                values.setdefault(section, {})[key] = conv(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{source}: line {lines.get((section, key), '?')}: {section}.{key}: {exc}") from exc

    def get(section: str, key: str):
        return values.get(section, {}).get(key, SCHEMA[section][key][1])

    def build(section: str, cls):
        return cls(**{k: get(section, k) for k in SCHEMA[section]})

    try:
        grid = build("grid", GridSpec)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    physics = build("physics", PhysicsConfig)
    projection = build("projection", PoissonConfig)
    projection.check_grid(grid)
    st = {k: get("stepper", k) for k in SCHEMA["stepper"]}
    if st["scheme"] not in SCHEMES:
        raise ConfigError(f"stepper.scheme must be one of {', '.join(SCHEMES)}")
    stepper = StepperConfig(projection=projection, **st)
    experiment = build("experiment", ExperimentConfig)
    ic = build("ic", ICConfig)
    q = build("q_source", QConfig)
    verify = build("verify", VerifyConfig)

    base = Path(base_dir)
    experiment = replace(experiment, output_dir=str((base / experiment.output_dir).resolve()))
    if ic.path:
        ic = replace(ic, path=str((base / ic.path).resolve()))
    if q.path:
        q = replace(q, path=str((base / q.path).resolve()))

    cfg = RunConfig(grid, physics, stepper, projection, experiment, ic, q, verify, source)
    validate(cfg, check_paths=check_paths)
    return cfg


def validate(cfg: RunConfig, check_paths: bool = True) -> None:
    """Cross-field invariants; raises :class:`ConfigError` naming the field."""
    cfg.phys_params()  # positivity and Robin-sign checks
    e = cfg.experiment
    if e.kind not in EXPERIMENTS:
        raise ConfigError(f"experiment.kind must be one of {', '.join(EXPERIMENTS)}")
    if not e.T_end > 0:
        raise ConfigError("experiment.T_end must be > 0")
    if not e.output_interval > 0:
        raise ConfigError("experiment.output_interval must be > 0")
    if e.output_interval < cfg.stepper.dt:
        raise ConfigError("experiment.output_interval must be >= stepper.dt")
    if e.seed < 0:
        raise ConfigError("experiment.seed must be >= 0")
    if not e.factor > 0:
        raise ConfigError("experiment.factor must be > 0")
    if cfg.ic.kind not in IC_KINDS:
        raise ConfigError(f"ic.kind must be one of {', '.join(IC_KINDS)}")
    if cfg.q_source.kind not in Q_KINDS:
        raise ConfigError(f"q_source.kind must be one of {', '.join(Q_KINDS)}")
    if cfg.ic.count < 1 or cfg.ic.K < 0:
        raise ConfigError("ic.count must be >= 1 and ic.K >= 0")
    v = cfg.verify
    if v.count < 1 or v.K < 0 or v.trials < 1:
        raise ConfigError("verify.count and verify.trials must be >= 1, verify.K >= 0")
    if any(r < 4 for r in v.resolutions):
        raise ConfigError("verify.resolutions must all be >= 4")
    if not v.tolerance > 0:
        raise ConfigError("verify.tolerance must be > 0")
    if check_paths:
        for name, sec in (("ic", cfg.ic), ("q_source", cfg.q_source)):
            if sec.kind == "file":
                if not sec.path:
                    raise ConfigError(f"{name}.path is required when {name}.kind = file")
                _check_field_files(name, sec.path, name == "ic")
        out = Path(e.output_dir)
        probe = out
        while not probe.exists() and probe != probe.parent:
            probe = probe.parent
        if not os.access(probe, os.W_OK):
            raise ConfigError(f"experiment.output_dir {out} is not writable")


def _check_field_files(name: str, stem: str, with_velocity: bool) -> None:
    from .grid import vector_paths

    needed = [Path(stem + ".theta.hpde")] if with_velocity else [Path(stem)]
    if with_velocity:
        needed += list(vector_paths(stem))
    for p in needed:
        if not p.is_file():
            raise ConfigError(f"{name}.path: missing file {p}")


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    return parse_config_text(text, base_dir=path.parent, source=str(path))


def config_values(cfg: RunConfig) -> dict[str, dict[str, Any]]:
    """Every key of :data:`SCHEMA` with its value in ``cfg``."""
    holders = {
        "grid": cfg.grid, "physics": cfg.physics, "stepper": cfg.stepper, "projection": cfg.projection,
        "experiment": cfg.experiment, "ic": cfg.ic, "q_source": cfg.q_source, "verify": cfg.verify,
    }
    return {sec: {k: getattr(holders[sec], k) for k in keys} for sec, keys in SCHEMA.items()}


def dump_config(cfg: RunConfig) -> str:
    """Canonical text: all sections and keys in schema order."""
    out = []
    for sec, kv in config_values(cfg).items():
        out.append(f"[{sec}]")
        out.extend(f"{k} = {_fmt(v)}" for k, v in kv.items())
        out.append("")
    return "\n".join(out)
