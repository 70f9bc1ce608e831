"""Cell-centred grid on the cylinder ``[0, Lx] x [0, Ly] x (-h, 0)``.

Array conventions used throughout the package:

* scalar field: ``(nx, ny, nz)``, index ``k = 0`` is the bottom layer;
* horizontal vector field: ``(2, nx, ny, nz)``;
* 2D field on the footprint: ``(nx, ny)``.

Boundary conditions are applied through one layer of ghost cells.  Every
supported condition reduces to a ghost value ``phi_ghost = s * phi_in`` for
a per-face factor ``s``, see :meth:`FaceBC.ghost_factor`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

FACES = ("x_lo", "x_hi", "y_lo", "y_hi", "z_lo", "z_hi")
LATERAL_FACES = FACES[:4]


@dataclass(frozen=True)
class GridSpec:
    """Geometry and resolution of the domain."""

    Lx: float = 1.0
    Ly: float = 1.0
    h: float = 0.5
    nx: int = 16
    ny: int = 16
    nz: int = 8

    def __post_init__(self):
        for name in ("Lx", "Ly", "h"):
            val = getattr(self, name)
            if not (np.isfinite(val) and val > 0):
                raise ValueError(f"grid.{name} must be > 0, got {val!r}")
        for name in ("nx", "ny", "nz"):
            val = getattr(self, name)
            if int(val) != val or val < 4:
                raise ValueError(f"grid.{name} must be an integer >= 4, got {val!r}")
            object.__setattr__(self, name, int(val))
        for name in ("Lx", "Ly", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))

    @property
    def dx(self) -> float:
        return self.Lx / self.nx

    @property
    def dy(self) -> float:
        return self.Ly / self.ny

    @property
    def dz(self) -> float:
        return self.h / self.nz

    @property
    def dA(self) -> float:
        return self.dx * self.dy

    @property
    def dV(self) -> float:
        return self.dx * self.dy * self.dz

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def shape2d(self) -> tuple[int, int]:
        return (self.nx, self.ny)

    @property
    def volume(self) -> float:
        return self.Lx * self.Ly * self.h

    @property
    def area(self) -> float:
        return self.Lx * self.Ly

    def spacing(self, axis: int) -> float:
        return (self.dx, self.dy, self.dz)[axis]

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) + 0.5) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) + 0.5) * self.dy

    @property
    def z(self) -> np.ndarray:
        return -self.h + (np.arange(self.nz) + 0.5) * self.dz

    def mesh(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell-centre coordinates broadcast to the full 3D shape."""
        return np.meshgrid(self.x, self.y, self.z, indexing="ij")

    def mesh2d(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.y, indexing="ij")

    def refined(self, factor: int = 2) -> "GridSpec":
        return GridSpec(self.Lx, self.Ly, self.h, self.nx * factor, self.ny * factor, self.nz * factor)


@dataclass(frozen=True)
class FaceBC:
    """Boundary condition on one face.

    ``kind`` is one of ``"dirichlet0"``, ``"neumann0"`` or ``"robin"``; the
    Robin condition reads ``d_n phi + alpha * phi = 0`` with ``n`` the outward
    normal.
    """

    kind: str
    alpha: float = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet0", "neumann0", "robin"):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")
        if not self.alpha >= 0:
            raise ValueError(f"Robin coefficient must be >= 0, got {self.alpha!r}")

    def ghost_factor(self, spacing: float) -> float:
        """Factor ``s`` such that ``phi_ghost = s * phi_in``.

        The Robin rule is collocated at the face midpoint:
        ``(phi_g - phi_in)/spacing + alpha*(phi_g + phi_in)/2 = 0``.
        """
        if self.kind == "dirichlet0":
            return -1.0
        if self.kind == "neumann0":
            return 1.0
        b = 0.5 * self.alpha * spacing
        return (1.0 - b) / (1.0 + b)


DIRICHLET0 = FaceBC("dirichlet0")
NEUMANN0 = FaceBC("neumann0")


@dataclass(frozen=True)
class FieldBC:
    """Boundary conditions of one field on the six faces of the box."""

    x_lo: FaceBC = NEUMANN0
    x_hi: FaceBC = NEUMANN0
    y_lo: FaceBC = NEUMANN0
    y_hi: FaceBC = NEUMANN0
    z_lo: FaceBC = NEUMANN0
    z_hi: FaceBC = NEUMANN0

    @classmethod
    def uniform(cls, face: FaceBC) -> "FieldBC":
        return cls(*([face] * 6))

    def faces(self) -> tuple[FaceBC, ...]:
        return tuple(getattr(self, name) for name in FACES)

    def ghost_factors(self, grid: GridSpec) -> np.ndarray:
        """Ghost factors ordered as :data:`FACES`."""
        spacings = (grid.dx, grid.dx, grid.dy, grid.dy, grid.dz, grid.dz)
        return np.array([f.ghost_factor(d) for f, d in zip(self.faces(), spacings)])

    @property
    def conserves_mean(self) -> bool:
        """True when every face is homogeneous Neumann."""
        return all(f.kind == "neumann0" or (f.kind == "robin" and f.alpha == 0.0) for f in self.faces())


ALL_NEUMANN = FieldBC.uniform(NEUMANN0)
ALL_DIRICHLET = FieldBC.uniform(DIRICHLET0)


def velocity_bc(alpha1: float) -> FieldBC:
    """No-slip on the bottom and side walls, ``v_z + alpha1 v = 0`` on top."""
    return FieldBC(DIRICHLET0, DIRICHLET0, DIRICHLET0, DIRICHLET0, DIRICHLET0, FaceBC("robin", alpha1))


def temperature_bc(alpha2: float) -> FieldBC:
    """Insulating bottom and side walls, ``theta_z + alpha2 theta = 0`` on top."""
    return FieldBC(NEUMANN0, NEUMANN0, NEUMANN0, NEUMANN0, NEUMANN0, FaceBC("robin", alpha2))


@dataclass(frozen=True)
class BCSet:
    """The physical boundary-condition set of the primitive equations."""

    alpha1: float = 0.0
    alpha2: float = 0.0

    def __post_init__(self):
        if not self.alpha1 >= 0:
            raise ValueError("alpha1 must be >= 0")
        if not self.alpha2 >= 0:
            raise ValueError("alpha2 must be >= 0")

    @property
    def velocity(self) -> FieldBC:
        return velocity_bc(self.alpha1)

    @property
    def temperature(self) -> FieldBC:
        return temperature_bc(self.alpha2)


def _check_data(data: np.ndarray, shape: tuple[int, ...], what: str) -> np.ndarray:
    data = np.ascontiguousarray(data, dtype=np.float64)
    if data.shape != shape:
        raise ValueError(f"{what} data has shape {data.shape}, expected {shape}")
    if not np.all(np.isfinite(data)):
        raise ValueError(f"{what} data contains non-finite values")
    return data


@dataclass(frozen=True)
class ScalarField:
    grid: GridSpec
    data: np.ndarray
    bc: FieldBC = ALL_NEUMANN
    name: str = "scalar"

    def __post_init__(self):
        object.__setattr__(self, "data", _check_data(self.data, self.grid.shape, "ScalarField"))


@dataclass(frozen=True)
class HVectorField:
    """Horizontal vector field ``(v1, v2)``; components share grid and BCs."""

    grid: GridSpec
    data: np.ndarray
    bc: FieldBC = field(default_factory=lambda: velocity_bc(0.0))
    name: str = "v"

    def __post_init__(self):
        object.__setattr__(self, "data", _check_data(self.data, (2, *self.grid.shape), "HVectorField"))

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.data[i], self.bc, f"{self.name}{i + 1}")

    def perp(self) -> "HVectorField":
        return HVectorField(self.grid, np.stack([-self.data[1], self.data[0]]), self.bc, self.name + "_perp")


@dataclass(frozen=True)
class Field2D:
    grid: GridSpec
    data: np.ndarray
    name: str = "field2d"

    def __post_init__(self):
        object.__setattr__(self, "data", _check_data(self.data, self.grid.shape2d, "Field2D"))


# --- checkpoint files -------------------------------------------------------

MAGIC = "HPDE1"


class CheckpointHeader(NamedTuple):
    nx: int
    ny: int
    nz: int
    Lx: float
    Ly: float
    h: float
    name: str


def write_checkpoint(path, data: np.ndarray, grid: GridSpec, name: str) -> Path:
    """Write one field: a text header line then little-endian float64 values.

    Values are stored x-fastest (``i + nx*(j + ny*k)``).  2D fields are
    written with ``nz = 1``.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim == 2:
        data = data[:, :, None]
    if data.ndim != 3 or data.shape[:2] != grid.shape2d:
        raise ValueError(f"cannot checkpoint array of shape {data.shape} on grid {grid.shape}")
    if not name or any(c.isspace() for c in name):
        raise ValueError(f"checkpoint name must be a non-empty token, got {name!r}")
    nx, ny, nz = data.shape
    header = f"{MAGIC} {nx} {ny} {nz} {grid.Lx!r} {grid.Ly!r} {grid.h!r} {name}\n"
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(data.ravel(order="F").astype("<f8").tobytes())
    return path


def read_checkpoint(path) -> tuple[CheckpointHeader, np.ndarray]:
    with open(path, "rb") as fh:
        line = fh.readline().decode("ascii")
        parts = line.split()
        if len(parts) != 8 or parts[0] != MAGIC:
            raise ValueError(f"{path}: not an {MAGIC} checkpoint")
        header = CheckpointHeader(int(parts[1]), int(parts[2]), int(parts[3]),
                                  float(parts[4]), float(parts[5]), float(parts[6]), parts[7])
        raw = fh.read()
    count = header.nx * header.ny * header.nz
    if len(raw) != 8 * count:
        raise ValueError(f"{path}: expected {count} values, found {len(raw) // 8}")
    data = np.frombuffer(raw, dtype="<f8").reshape((header.nx, header.ny, header.nz), order="F")
    return header, np.array(data, dtype=np.float64)


def vector_paths(stem) -> tuple[Path, Path]:
    """Component files ``<stem>.v1.hpde`` and ``<stem>.v2.hpde`` of a vector field."""
    stem = str(stem)
    for suffix in (".v1.hpde", ".v2.hpde"):
        if stem.endswith(suffix):
            stem = stem[: -len(suffix)]
    return Path(stem + ".v1.hpde"), Path(stem + ".v2.hpde")


def write_vector_checkpoint(stem, data: np.ndarray, grid: GridSpec, name: str = "v") -> tuple[Path, Path]:
    p1, p2 = vector_paths(stem)
    write_checkpoint(p1, data[0], grid, name + "1")
    write_checkpoint(p2, data[1], grid, name + "2")
    return p1, p2


def read_vector_checkpoint(stem) -> tuple[GridSpec, np.ndarray]:
    p1, p2 = vector_paths(stem)
    h1, d1 = read_checkpoint(p1)
    h2, d2 = read_checkpoint(p2)
    if h1[:6] != h2[:6]:
        raise ValueError(f"component headers of {stem} disagree")
    grid = GridSpec(h1.Lx, h1.Ly, h1.h, h1.nx, h1.ny, h1.nz)
    return grid, np.stack([d1, d2])


def grid_from_header(header: CheckpointHeader) -> GridSpec:
    return GridSpec(header.Lx, header.Ly, header.h, header.nx, header.ny, header.nz)
