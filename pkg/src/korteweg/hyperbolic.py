"""Explicit Rusanov step for the first-order (convective) part.

Works on the five conservative slots (rho, rho*u1, rho*u2, rho*w1, rho*w2).
The numerical flux is the classical Rusanov (local Lax-Friedrichs) flux with
a single dissipation speed per interface, shared by all five slots:

    speed(U) = |u_n| + sqrt(p'(rho) + Phi'(rho)/rho)

where Phi is the optional extra x-momentum flux of the thin-film model (it
enters the x-direction speed only). The w-transport rho*w (x) u travels at
|u_n| <= speed, so the common speed bounds every family.

All functions accept either scalar 5-tuples or stacked arrays of shape
(5, nx, ny); the time step uses the array path on whole interface sets.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .constitutive import PressureLaw
from .grid import State


class PositivityError(RuntimeError):
    """Density fell below the configured floor during a step."""


@dataclass(frozen=True)
class FluxSpec:
    """Pressure law plus the optional film-specific extra x-momentum flux."""

    pressure: PressureLaw
    extra_flux: Optional[Callable] = None        # Phi(rho)
    extra_flux_deriv: Optional[Callable] = None  # Phi'(rho)
    rho_floor: float = 0.0

    def __post_init__(self):
        if (self.extra_flux is None) != (self.extra_flux_deriv is None):
            raise ValueError("extra flux and its derivative come as a pair")

    def phi_extra(self, rho):
        if self.extra_flux is None:
            return np.zeros_like(np.asarray(rho, dtype=float))
        return self.extra_flux(rho)

    def dphi_extra(self, rho):
        if self.extra_flux_deriv is None:
            return np.zeros_like(np.asarray(rho, dtype=float))
        return self.extra_flux_deriv(rho)


def _check_floor(rho, spec):
    if spec.rho_floor > 0.0 and np.any(np.asarray(rho) < spec.rho_floor):
        raise ValueError("density below floor in flux evaluation")


def physical_flux(U, direction: int, spec: FluxSpec):
    """Exact flux of the conservative system in the given direction (1 or 2)."""
    rho, mu1, mu2, mw1, mw2 = np.asarray(U, dtype=float)
    _check_floor(rho, spec)
    p = spec.pressure.p(rho)
    if direction == 1:
        un = mu1 / rho
        return np.stack([mu1, mu1 * un + p + spec.phi_extra(rho),
                         mu2 * un, mw1 * un, mw2 * un])
    if direction == 2:
        un = mu2 / rho
        return np.stack([mu2, mu1 * un, mu2 * un + p, mw1 * un, mw2 * un])
    raise ValueError(f"direction must be 1 or 2, got {direction}")


def wave_speed(U, direction: int, spec: FluxSpec):
    """Rusanov dissipation speed |u_n| + sqrt(p' + Phi'/rho) per cell."""
    rho = np.asarray(U[0], dtype=float)
    un = np.asarray(U[direction]) / rho
    cel2 = spec.pressure.dp(rho)
    if direction == 1:
        cel2 = cel2 + spec.dphi_extra(rho) / rho
    return np.abs(un) + np.sqrt(cel2)


def rusanov_flux(UL, UR, direction: int, spec: FluxSpec):
    """Central flux plus local-max-speed dissipation, all slots together."""
    UL = np.asarray(UL, dtype=float)
    UR = np.asarray(UR, dtype=float)
    lam = np.maximum(wave_speed(UL, direction, spec),
                     wave_speed(UR, direction, spec))
    return (0.5 * (physical_flux(UL, direction, spec)
                   + physical_flux(UR, direction, spec))
            - 0.5 * lam * (UR - UL))


def compute_dt(state: State, spec: FluxSpec, cfl: float = 0.45,
               dt_max: float = 1.0) -> float:
    """Hyperbolic CFL time step: cfl / max(speed1/dx + speed2/dy)."""
    U = np.stack([state.rho, state.mu[0], state.mu[1],
                  state.mw[0], state.mw[1]])
    s1 = wave_speed(U, 1, spec)
    s2 = wave_speed(U, 2, spec)
    denom = float(np.max(s1 / state.grid.dx + s2 / state.grid.dy))
    if denom <= 0.0:
        return dt_max
    return min(cfl / denom, dt_max)


def explicit_step(state: State, spec: FluxSpec, dt: float,
                  rho_floor: float = 1e-12) -> State:
    """One unsplit conservative Rusanov update of all five slots.

    The returned density is final for the time step (the mass equation has no
    capillary term); the momenta are the predictor values handed to the
    implicit substeps.
    """
    grid = state.grid
    U = np.stack([state.rho, state.mu[0], state.mu[1],
                  state.mw[0], state.mw[1]])

    # interface (i+1/2, j): left state U[.., i, :], right state U[.., i+1, :]
    fx = rusanov_flux(U, np.roll(U, -1, axis=1), 1, spec)
    fy = rusanov_flux(U, np.roll(U, -1, axis=2), 2, spec)
    Unew = U - dt * ((fx - np.roll(fx, 1, axis=1)) / grid.dx
                     + (fy - np.roll(fy, 1, axis=2)) / grid.dy)

    rho = Unew[0]
    if np.any(rho < rho_floor):
        bad = np.argwhere(rho < rho_floor)[0]
        i, j = int(bad[0]), int(bad[1])
        raise PositivityError(
            f"density {rho[i, j]:.6e} below floor {rho_floor:.6e} "
            f"at cell ({i}, {j}) after the explicit step")
    return State(grid, rho, np.stack([Unew[1], Unew[2]]),
                 np.stack([Unew[3], Unew[4]]))
