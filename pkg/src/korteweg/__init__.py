"""Entropy-stable semi-implicit solver for 2D capillary fluids and films."""

from .constitutive import (CapillarityLaw, ConstantCapillarity,
                           GenericCapillarity, PowerLawPressure, PressureLaw,
                           QuantumCapillarity, ShallowWaterPressure,
                           check_law_consistency, eval_capillary,
                           eval_pressure)
from .grid import (Grid2D, ScalarField, State, VecField2, init_from_profiles,
                   read_snapshot, total_energy, total_mass, write_snapshot)
from .hyperbolic import (FluxSpec, PositivityError, compute_dt, explicit_step,
                         physical_flux, rusanov_flux, wave_speed)
from .capillary import (ImplicitSystem, SolverConvergenceError,
                        implicit_solve, kinetic_energy_weighted)
from .operators import (ThOperator, apply_Th, assemble_Th,
                        bohm_identity_residual, diff_op)
from .swfilm import FilmParams, film_capillarity, scenario, source_implicit
from .driver import ModelSetup, SolverOptions, make_setup, run, step

__version__ = "0.1.0"
