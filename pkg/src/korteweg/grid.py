"""Uniform periodic rectangular grid, cell-centered fields, and state.

The state carries the conservative unknowns of the extended formulation:
density ``rho``, momentum ``mu = rho*u`` and the capillary co-momentum
``mw = rho*w``. All fields live at cell centers of a periodic grid; the
primitive velocities are always recovered as ``mu/rho`` and ``mw/rho``.

Snapshot output format (one row per cell, j-major then i):
``x,y,rho,u1,u2,w1,w2`` with 17 significant digits.
"""

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .constitutive import CapillarityLaw, PressureLaw

CELL = "cell"
XFACE = "xface"  # values indexed by the interface (i+1/2, j)
YFACE = "yface"  # values indexed by the interface (i, j+1/2)

SNAPSHOT_HEADER = "x,y,rho,u1,u2,w1,w2"


@dataclass(frozen=True)
class Grid2D:
    """Uniform periodic rectangular grid with nx*ny cells."""

    nx: int
    ny: int
    Lx: float
    Ly: float

    def __post_init__(self):
        if self.nx < 4 or self.ny < 4:
            raise ValueError("grid needs nx >= 4 and ny >= 4 "
                             "(centered stencils must not self-overlap)")
        if self.Lx <= 0.0 or self.Ly <= 0.0:
            raise ValueError("domain lengths must be positive")

    @property
    def dx(self):
        return self.Lx / self.nx

    @property
    def dy(self):
        return self.Ly / self.ny

    @property
    def cell_area(self):
        return self.dx * self.dy

    @property
    def shape(self):
        return (self.nx, self.ny)

    def cell_centers(self):
        """Meshgrid (X, Y) of cell-center coordinates, shape (nx, ny)."""
        x = (np.arange(self.nx) + 0.5) * self.dx
        y = (np.arange(self.ny) + 0.5) * self.dy
        return np.meshgrid(x, y, indexing="ij")


@dataclass
class ScalarField:
    """One real value per cell (or per interface, see ``centering``)."""

    grid: Grid2D
    values: np.ndarray
    centering: str = CELL

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match "
                             f"grid {self.grid.shape}")
        if self.centering not in (CELL, XFACE, YFACE):
            raise ValueError(f"unknown centering {self.centering!r}")


@dataclass
class VecField2:
    """Two cell-centered components stacked as shape (2, nx, ny)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (2,) + self.grid.shape:
            raise ValueError(f"vector field shape {self.values.shape} does "
                             f"not match grid {self.grid.shape}")


@dataclass
class State:
    """Conservative fields (rho, rho*u, rho*w) on one shared grid."""

    grid: Grid2D
    rho: np.ndarray
    mu: np.ndarray
    mw: np.ndarray

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.mu = np.asarray(self.mu, dtype=float)
        self.mw = np.asarray(self.mw, dtype=float)
        shape = self.grid.shape
        if self.rho.shape != shape:
            raise ValueError("rho shape does not match grid")
        if self.mu.shape != (2,) + shape or self.mw.shape != (2,) + shape:
            raise ValueError("momentum field shapes do not match grid")

    def copy(self):
        return State(self.grid, self.rho.copy(), self.mu.copy(), self.mw.copy())

    @property
    def u(self):
        return self.mu / self.rho

    @property
    def w(self):
        return self.mw / self.rho

    def check_positivity(self, rho_floor):
        """Raise if any density fell below the floor."""
        if np.any(self.rho < rho_floor):
            i, j = np.unravel_index(int(np.argmin(self.rho)), self.rho.shape)
            raise ValueError(f"density {self.rho[i, j]:.6e} below floor "
                             f"{rho_floor:.6e} at cell ({i}, {j})")


def init_from_profiles(grid: Grid2D, rho0: Callable, u0: Optional[Callable],
                       law: CapillarityLaw) -> State:
    """Build a state by sampling rho and u at cell centers.

    The auxiliary field is initialized compatibly with the discrete operators:
    w0 = (d1bar, d2bar) applied to phi(rho), so that the initial data satisfy
    the same discrete duality the stability argument uses. ``u0`` maps (x, y)
    to a pair of components; ``None`` means fluid at rest.
    """
    from .operators import d1bar, d2bar

    X, Y = grid.cell_centers()
    rho = np.asarray(rho0(X, Y), dtype=float) * np.ones(grid.shape)
    if np.any(rho <= 0.0):
        i, j = np.unravel_index(int(np.argmin(rho)), rho.shape)
        raise ValueError(f"initial density must be positive; got "
                         f"{rho[i, j]:.6e} at cell ({i}, {j})")

    if u0 is None:
        mu = np.zeros((2,) + grid.shape)
    else:
        u1, u2 = u0(X, Y)
        mu = np.stack([rho * (np.asarray(u1) * np.ones(grid.shape)),
                       rho * (np.asarray(u2) * np.ones(grid.shape))])

    phi = law.phi(rho)
    mw = np.stack([rho * d1bar(phi, grid.dx), rho * d2bar(phi, grid.dy)])
    return State(grid, rho, mu, mw)


def total_mass(state: State) -> float:
    """Integral of rho over the periodic domain."""
    return float(np.sum(state.rho)) * state.grid.cell_area


class EnergyBreakdown(NamedTuple):
    kinetic_u: float
    kinetic_w: float
    potential: float
    total: float


def total_energy(state: State, claw: CapillarityLaw,
                 plaw: PressureLaw) -> EnergyBreakdown:
    """Discrete total energy of the extended formulation.

    In the extended variables the gradient (capillary) energy is carried by
    the w-field, so the total is kinetic_u + kinetic_w + potential with
    potential = sum of F0(rho); the capillarity law determines the content of
    kinetic_w through the evolution, not through this formula.
    """
    area = state.grid.cell_area
    ke_u = 0.5 * float(np.sum((state.mu[0] ** 2 + state.mu[1] ** 2) / state.rho))
    ke_w = 0.5 * float(np.sum((state.mw[0] ** 2 + state.mw[1] ** 2) / state.rho))
    pot = float(np.sum(plaw.F0(state.rho)))
    return EnergyBreakdown(kinetic_u=ke_u * area, kinetic_w=ke_w * area,
                           potential=pot * area,
                           total=(ke_u + ke_w + pot) * area)


def write_snapshot(state: State, path) -> None:
    """Write the snapshot CSV (grid-module external format)."""
    grid = state.grid
    X, Y = grid.cell_centers()
    u = state.u
    w = state.w
    with open(path, "w") as fh:
        fh.write(SNAPSHOT_HEADER + "\n")
        for j in range(grid.ny):
            for i in range(grid.nx):
                row = (X[i, j], Y[i, j], state.rho[i, j],
                       u[0, i, j], u[1, i, j], w[0, i, j], w[1, i, j])
                fh.write(",".join("%.17g" % v for v in row) + "\n")


def read_snapshot(path) -> State:
    """Read a snapshot CSV back into a state, inferring the grid."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    if data.shape[1] != 7:
        raise ValueError(f"snapshot {path} has {data.shape[1]} columns, "
                         "expected 7")
    x = np.unique(data[:, 0])
    y = np.unique(data[:, 1])
    nx, ny = len(x), len(y)
    if nx * ny != data.shape[0]:
        raise ValueError(f"snapshot {path} rows do not form a complete lattice")
    dx = x[1] - x[0]
    dy = y[1] - y[0]
    grid = Grid2D(nx=nx, ny=ny, Lx=nx * dx, Ly=ny * dy)

    # rows are written j-major then i
    def unflatten(col):
        return col.reshape(ny, nx).T.copy()

    rho = unflatten(data[:, 2])
    u1 = unflatten(data[:, 3])
    u2 = unflatten(data[:, 4])
    w1 = unflatten(data[:, 5])
    w2 = unflatten(data[:, 6])
    return State(grid, rho, np.stack([rho * u1, rho * u2]),
                 np.stack([rho * w1, rho * w2]))
