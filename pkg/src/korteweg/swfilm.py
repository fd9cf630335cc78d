"""Shallow-water thin-film specialization: falling films on an incline.

The film height h plays the role of the density. Gravity along the incline
and the Newtonian wall drag enter as an implicit (pointwise linear) source in
the momentum equation only; the parabolic-profile momentum correction enters
as an extra conservative x-flux; surface tension maps onto a constant
capillarity coefficient sigma/rho_fluid.
"""

import math
from dataclasses import dataclass

import numpy as np

from .constitutive import ConstantCapillarity, ShallowWaterPressure
from .grid import Grid2D, init_from_profiles
from .hyperbolic import FluxSpec

GRAVITY = 9.8


@dataclass(frozen=True)
class FilmParams:
    """Physical and scenario parameters of the falling film.

    nu = 0 (no drag) is accepted only on a horizontal plane, where the
    model degenerates to the plain capillary core.
    """

    theta: float              # inclination, rad
    nu: float                 # kinematic viscosity, m^2/s
    sigma: float              # surface tension, kg/s^2
    rho_fluid: float          # fluid density, kg/m^3
    g: float = GRAVITY
    h_precursor: float = 0.0  # wetting layer for drop scenarios, m (0 = off)
    h0: float = 1e-3          # mean film depth for roll waves, m
    h_drop: float = 1e-5      # drop bump height, m
    drop_width: float = 2e-3  # drop bump Gaussian width, m
    eps: float = 0.05         # relative perturbation of the roll-wave film

    def __post_init__(self):
        if self.rho_fluid <= 0.0:
            raise ValueError("fluid density must be positive")
        if self.sigma < 0.0:
            raise ValueError("surface tension must be non-negative")
        if not 0.0 <= self.theta < 0.5 * math.pi:
            raise ValueError("inclination must lie in [0, pi/2)")
        if self.nu < 0.0 or (self.nu == 0.0 and self.theta != 0.0):
            raise ValueError("nu must be positive (nu = 0 only when theta = 0)")


def film_capillarity(params: FilmParams) -> ConstantCapillarity:
    """Surface tension as a constant capillarity coefficient sigma/rho."""
    return ConstantCapillarity(K0=params.sigma / params.rho_fluid)


def film_pressure(params: FilmParams) -> ShallowWaterPressure:
    return ShallowWaterPressure(g=params.g, theta=params.theta)


def film_flux_spec(params: FilmParams, rho_floor: float = 0.0) -> FluxSpec:
    """Pressure plus the extra x-momentum flux C*h^5, C = 2*(g sin/nu)^2/225."""
    if params.theta == 0.0:
        coeff = 0.0
    else:
        coeff = 2.0 * (params.g * math.sin(params.theta) / params.nu) ** 2 / 225.0
    return FluxSpec(pressure=film_pressure(params),
                    extra_flux=lambda h: coeff * h ** 5,
                    extra_flux_deriv=lambda h: 5.0 * coeff * h ** 4,
                    rho_floor=rho_floor)


def nusselt_velocity(params: FilmParams, h):
    """Downstream equilibrium speed where gravity balances drag."""
    if params.nu == 0.0:
        return np.zeros_like(np.asarray(h, dtype=float))
    return params.g * math.sin(params.theta) * np.asarray(h) ** 2 / (3.0 * params.nu)


def source_implicit(h: np.ndarray, mu: np.ndarray, params: FilmParams,
                    dt: float, rho_floor: float = 1e-12) -> np.ndarray:
    """Backward-Euler update of the gravity/drag source, pointwise linear.

    (h u1)' = (h u1 + dt*g*h*sin(theta)) / (1 + 3 nu dt / h^2)
    (h u2)' = (h u2) / (1 + 3 nu dt / h^2)
    """
    if np.any(h < rho_floor):
        raise ValueError("film height below floor in the source update")
    denom = 1.0 + 3.0 * params.nu * dt / h ** 2
    gravity = dt * params.g * h * math.sin(params.theta)
    return np.stack([(mu[0] + gravity) / denom, mu[1] / denom])


def scenario(name: str, params: FilmParams, grid: Grid2D):
    """Initial state and flux spec of a named demo scenario.

    roll_wave_1d / roll_wave_2d: Nusselt film of mean depth h0 with a
    relative perturbation eps (x-only, or modulated across y), moving at the
    local equilibrium speed. drop: Gaussian bump of height h_drop over the
    precursor film, fluid at rest.
    """
    law = film_capillarity(params)
    two_pi = 2.0 * np.pi

    if name == "roll_wave_1d":
        def h_profile(x, y):
            return params.h0 * (1.0 + params.eps * np.sin(two_pi * x / grid.Lx))
    elif name == "roll_wave_2d":
        def h_profile(x, y):
            mod = 1.0 + 0.5 * np.cos(two_pi * y / grid.Ly)
            return params.h0 * (1.0 + params.eps
                                * np.sin(two_pi * x / grid.Lx) * mod)
    elif name == "drop":
        if params.h_precursor <= 0.0:
            raise ValueError("drop scenario needs a positive precursor film")

        def h_profile(x, y):
            r2 = (x - 0.5 * grid.Lx) ** 2 + (y - 0.5 * grid.Ly) ** 2
            return (params.h_precursor
                    + params.h_drop * np.exp(-r2 / params.drop_width ** 2))
    else:
        raise ValueError(f"unknown scenario {name!r}")

    if name == "drop":
        u_profile = None
    else:
        def u_profile(x, y):
            h = h_profile(x, y)
            return nusselt_velocity(params, h), np.zeros_like(h)

    state = init_from_profiles(grid, h_profile, u_profile, law)
    return state, film_flux_spec(params)
