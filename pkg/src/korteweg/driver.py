"""Time-stepping orchestration, diagnostics, configuration, and verification.

One time step of the combined scheme is:

    CFL time step -> explicit Rusanov convection -> implicit gravity/drag
    source (film model only) -> implicit capillary solve at the new density.

The capillary substep runs last so its exact kinetic-energy dissipation
identity holds on the state the step returns; together with an entropy-stable
convection step this makes the discrete total energy non-increasing for the
sourceless model, which the ``entropy`` verification suite measures.
"""

import math
import os
import time
from dataclasses import dataclass
from typing import List, NamedTuple, Optional

import numpy as np

from . import swfilm
from .capillary import ImplicitSystem, deinterleave, implicit_solve, interleave
from .config import SimConfig, load_config
from .constitutive import (CapillarityLaw, ConstantCapillarity,
                           GenericCapillarity, PressureLaw, PowerLawPressure,
                           QuantumCapillarity, ShallowWaterPressure)
from .grid import (Grid2D, State, init_from_profiles, total_energy,
                   total_mass, write_snapshot)
from .hyperbolic import FluxSpec, compute_dt, explicit_step
from .operators import (ThOperator, bohm_identity_residual, d1, d1bar, d1p,
                        d2, d2bar, d2p)
from .swfilm import FilmParams

ENERGY_HEADER = "t,dt,mass,ekin_u,ekin_w,epot,etot,iters,residual"


class EnergyRecord(NamedTuple):
    t: float
    dt: float
    mass: float
    ekin_u: float
    ekin_w: float
    epot: float
    etot: float
    iters: int
    residual: float


@dataclass
class SolverOptions:
    kind: str = "krylov"
    rtol: float = 1e-10
    max_iters: int = 0


@dataclass
class ModelSetup:
    """Everything a time step needs besides the state itself."""

    grid: Grid2D
    claw: CapillarityLaw
    plaw: PressureLaw
    flux: FluxSpec
    film: Optional[FilmParams] = None
    cfl: float = 0.45
    dt_max: float = 1.0
    rho_floor: float = 1e-12
    solver: SolverOptions = None

    def __post_init__(self):
        if self.solver is None:
            self.solver = SolverOptions()


def energy_record(state: State, setup: ModelSetup, t: float, dt: float,
                  iters: int = 0, residual: float = 0.0) -> EnergyRecord:
    e = total_energy(state, setup.claw, setup.plaw)
    return EnergyRecord(t=t, dt=dt, mass=total_mass(state), ekin_u=e.kinetic_u,
                        ekin_w=e.kinetic_w, epot=e.potential, etot=e.total,
                        iters=iters, residual=residual)


def step(state: State, setup: ModelSetup, t: float = 0.0,
         dt: Optional[float] = None):
    """Advance one time step; returns (new state, energy record)."""
    if dt is None:
        dt = compute_dt(state, setup.flux, setup.cfl, setup.dt_max)

    pred = explicit_step(state, setup.flux, dt, setup.rho_floor)
    mu = pred.mu
    if setup.film is not None:
        mu = swfilm.source_implicit(pred.rho, mu, setup.film, dt,
                                    setup.rho_floor)

    th = ThOperator.from_density(setup.grid, pred.rho, setup.claw)
    sys = ImplicitSystem(grid=setup.grid, rho=pred.rho, A=th.assemble(),
                         dt=dt, r_u=mu, r_w=pred.mw,
                         rtol=setup.solver.rtol,
                         max_iters=setup.solver.max_iters,
                         method=setup.solver.kind)
    res = implicit_solve(sys)
    new_state = State(setup.grid, pred.rho, res.mu, res.mw)
    return new_state, energy_record(new_state, setup, t + dt, dt,
                                    res.iters, res.residual)


def write_energy_log(records: List[EnergyRecord], path) -> None:
    with open(path, "w") as fh:
        fh.write(ENERGY_HEADER + "\n")
        for r in records:
            fh.write("%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d,%.17g\n"
                     % (r.t, r.dt, r.mass, r.ekin_u, r.ekin_w, r.epot,
                        r.etot, r.iters, r.residual))


def random_smooth_state(grid: Grid2D, law: CapillarityLaw, rng,
                        rho0: float = 2.0, rho_amp: float = 0.25,
                        u_amp: float = 0.25, modes: int = 3,
                        u_mean=(0.1, -0.07)) -> State:
    """Randomized smooth periodic initial data (low Fourier modes only).

    The density perturbation is normalized so rho stays within
    rho0*(1 +/- rho_amp); the velocity gets a mean drift so that total
    momentum is not accidentally zero.
    """
    X, Y = grid.cell_centers()

    def smooth():
        f = np.zeros(grid.shape)
        for kx in range(-modes, modes + 1):
            for ky in range(-modes, modes + 1):
                if kx == 0 and ky == 0:
                    continue
                amp = rng.standard_normal() / (1.0 + kx * kx + ky * ky)
                phase = rng.uniform(0.0, 2.0 * np.pi)
                f += amp * np.cos(2.0 * np.pi * (kx * X / grid.Lx
                                                 + ky * Y / grid.Ly) + phase)
        return f / max(float(np.max(np.abs(f))), 1e-300)

    rho_profile = rho0 * (1.0 + rho_amp * smooth())
    u1 = u_mean[0] + u_amp * smooth()
    u2 = u_mean[1] + u_amp * smooth()
    return init_from_profiles(grid, lambda x, y: rho_profile,
                              lambda x, y: (u1, u2), law)


def _capillarity_from_config(cfg: SimConfig) -> CapillarityLaw:
    kind = cfg["capillarity.kind"]
    if kind == "constant":
        return ConstantCapillarity(K0=cfg["capillarity.K0"])
    if kind == "quantum":
        return QuantumCapillarity(c=cfg["capillarity.c"])
    K0 = cfg["capillarity.K0"]
    alpha = cfg["capillarity.alpha"]
    return GenericCapillarity(K_func=lambda r: K0 * r ** alpha)


def _pressure_from_config(cfg: SimConfig) -> PressureLaw:
    if cfg["pressure.kind"] == "power_law":
        return PowerLawPressure(kappa=cfg["pressure.kappa"],
                                gamma=cfg["pressure.gamma"])
    return ShallowWaterPressure(g=cfg["pressure.g"],
                                theta=math.radians(cfg["pressure.theta_deg"]))


def film_params_from_config(cfg: SimConfig) -> FilmParams:
    return FilmParams(theta=math.radians(cfg["film.theta_deg"]),
                      nu=cfg["film.nu"], sigma=cfg["film.sigma"],
                      rho_fluid=cfg["film.rho"], g=cfg["film.g"],
                      h_precursor=cfg["film.h_precursor"],
                      h0=cfg["film.h0"], h_drop=cfg["film.h_drop"],
                      drop_width=cfg["film.drop_width"],
                      eps=cfg["film.perturbation_eps"])


def make_setup(cfg: SimConfig):
    """Build (ModelSetup, initial State) from a validated configuration."""
    grid = Grid2D(nx=cfg["grid.nx"], ny=cfg["grid.ny"],
                  Lx=cfg["grid.Lx"], Ly=cfg["grid.Ly"])
    solver = SolverOptions(kind=cfg["solver.kind"], rtol=cfg["solver.rtol"],
                           max_iters=cfg["solver.max_iters"])

    if cfg["model"] == "shallow_film":
        film = film_params_from_config(cfg)
        state, flux = swfilm.scenario(cfg["scenario"], film, grid)
        setup = ModelSetup(grid=grid, claw=swfilm.film_capillarity(film),
                           plaw=flux.pressure, flux=flux, film=film,
                           cfl=cfg["cfl"], dt_max=cfg["dt_max"],
                           rho_floor=cfg["rho_floor"], solver=solver)
        return setup, state

    claw = _capillarity_from_config(cfg)
    plaw = _pressure_from_config(cfg)
    flux = FluxSpec(pressure=plaw)
    rng = np.random.default_rng(cfg["seed"])
    state = random_smooth_state(grid, claw, rng, rho0=cfg["ek.rho0"],
                                rho_amp=cfg["ek.rho_amp"],
                                u_amp=cfg["ek.u_amp"], modes=cfg["ek.modes"])
    setup = ModelSetup(grid=grid, claw=claw, plaw=plaw, flux=flux, film=None,
                       cfl=cfg["cfl"], dt_max=cfg["dt_max"],
                       rho_floor=cfg["rho_floor"], solver=solver)
    return setup, state


class RunReport(NamedTuple):
    steps: int
    final_t: float
    min_rho: float
    energy_drop: float
    output_paths: tuple


def run(cfg: SimConfig) -> RunReport:
    """Execute a configured simulation until t_end, writing outputs."""
    setup, state = make_setup(cfg)
    out_dir = cfg["output.dir"]
    os.makedirs(out_dir, exist_ok=True)
    every = cfg["output.every_steps"]
    t_end = cfg["t_end"]

    paths = []

    def snap(k):
        p = os.path.join(out_dir, f"snap_{k:06d}.csv")
        write_snapshot(state, p)
        paths.append(p)
        return p

    records = [energy_record(state, setup, t=0.0, dt=0.0)]
    snap(0)
    min_rho = float(np.min(state.rho))
    t = 0.0
    k = 0
    while t < t_end * (1.0 - 1e-14):
        dt_cfl = compute_dt(state, setup.flux, setup.cfl, setup.dt_max)
        dt = min(dt_cfl, t_end - t)
        try:
            state, rec = step(state, setup, t=t, dt=dt)
        except (RuntimeError, ValueError) as exc:
            raise RuntimeError(f"step {k + 1} (t={t:.6e}) failed: {exc}") from exc
        t = rec.t
        k += 1
        records.append(rec)
        min_rho = min(min_rho, float(np.min(state.rho)))
        if every > 0 and k % every == 0:
            snap(k)
    if not (every > 0 and k % every == 0) and k > 0:
        snap(k)

    energy_path = os.path.join(out_dir, "energy.csv")
    write_energy_log(records, energy_path)
    paths.append(energy_path)
    return RunReport(steps=k, final_t=t, min_rho=min_rho,
                     energy_drop=records[0].etot - records[-1].etot,
                     output_paths=tuple(paths))


def run_from_file(path, overrides=()) -> RunReport:
    return run(load_config(path, overrides))


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

class VerifyResult(NamedTuple):
    passed: bool
    lines: tuple          # human-readable report lines
    tables: dict          # name -> (header, rows) CSV artifacts


def _law_by_name(name: str) -> CapillarityLaw:
    if name == "constant":
        return ConstantCapillarity(K0=1.0)
    if name == "quantum":
        return QuantumCapillarity(c=1.0)
    raise ValueError(f"unknown law name {name!r}")


def verify_duality(n: int = 32, seed: int = 0, tol: float = 1e-13) -> VerifyResult:
    """Summation-by-parts and centered skew-adjointness on random fields."""
    grid = Grid2D(n, n, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(grid.shape)
    b = rng.standard_normal(grid.shape)

    def rel(s1, s2, aa, bb):
        return abs(s1 + s2) / max(float(np.sqrt(np.sum(aa ** 2)
                                                * np.sum(bb ** 2))), 1e-300)

    checks = {
        "sbp_x": rel(np.sum(d1(a, grid.dx) * b), np.sum(a * d1p(b, grid.dx)),
                     d1(a, grid.dx), b),
        "sbp_y": rel(np.sum(d2(a, grid.dy) * b), np.sum(a * d2p(b, grid.dy)),
                     d2(a, grid.dy), b),
        "skew_x": rel(np.sum(d1bar(a, grid.dx) * b),
                      np.sum(a * d1bar(b, grid.dx)), d1bar(a, grid.dx), b),
        "skew_y": rel(np.sum(d2bar(a, grid.dy) * b),
                      np.sum(a * d2bar(b, grid.dy)), d2bar(a, grid.dy), b),
    }
    worst = max(checks.values())
    lines = [f"duality {name}: residual {val:.3e}" for name, val in checks.items()]
    lines.append(f"duality max residual {worst:.3e} (tolerance {tol:.1e})")
    return VerifyResult(worst <= tol, tuple(lines),
                        {"duality": (("check", "residual"),
                                     [(k, "%.3e" % v) for k, v in checks.items()])})


def verify_symmetry(n: int = 32, trials: int = 20, seed: int = 0,
                    tol: float = 1e-12) -> VerifyResult:
    """Assembled-operator symmetry and matrix-free agreement on random fields."""
    grid = Grid2D(n, n, 1.0, 1.0)
    rng = np.random.default_rng(seed)
    worst_asym = 0.0
    worst_agree = 0.0
    for trial in range(trials):
        law = ConstantCapillarity(1.0) if trial % 2 == 0 else QuantumCapillarity(1.0)
        rho = rng.uniform(0.5, 2.0, grid.shape)
        th = ThOperator.from_density(grid, rho, law)
        A = th.assemble()
        scale = float(abs(A).max())
        asym = float(abs(A - A.T).max()) / scale
        worst_asym = max(worst_asym, asym)

        v = rng.standard_normal((2,) + grid.shape)
        mf1, mf2 = th.apply(v[0], v[1])
        assembled = deinterleave(A @ interleave(v), grid.shape)
        num = float(np.max(np.abs(np.stack([mf1, mf2]) - assembled)))
        den = max(float(np.max(np.abs(assembled))), 1e-300)
        worst_agree = max(worst_agree, num / den)
    lines = [f"Th asymmetry max {worst_asym:.3e} over {trials} fields "
             f"(tolerance {tol:.1e})",
             f"matrix-free vs assembled max {worst_agree:.3e}"]
    return VerifyResult(worst_asym <= tol and worst_agree <= tol,
                        tuple(lines), {})


def verify_bohm(sizes=(32, 64, 128), laws=("constant", "quantum"),
                min_order: float = 1.8) -> VerifyResult:
    """Grid-convergence of the generalized Bohm identity residual."""

    def profile(x, y):
        return 2.0 + 0.5 * np.sin(2.0 * np.pi * x) * np.cos(2.0 * np.pi * y)

    passed = True
    lines = []
    tables = {}
    for name in laws:
        law = _law_by_name(name)
        residuals = []
        for n in sizes:
            r = bohm_identity_residual(profile, law, Grid2D(n, n, 1.0, 1.0))
            residuals.append(r.residual_rel)
        rows = []
        orders = []
        for k, n in enumerate(sizes):
            if k == 0:
                rows.append((n, "%.6e" % residuals[k], ""))
            else:
                order = math.log2(residuals[k - 1] / residuals[k])
                orders.append(order)
                rows.append((n, "%.6e" % residuals[k], "%.3f" % order))
        ok = all(o >= min_order for o in orders)
        passed = passed and ok
        lines.append(f"bohm[{name}]: residuals "
                     + ", ".join("%.3e" % r for r in residuals)
                     + "; orders " + ", ".join("%.2f" % o for o in orders)
                     + f" (need >= {min_order})")
        tables[f"bohm_{name}"] = (("n", "residual_rel", "observed_order"), rows)
    return VerifyResult(passed, tuple(lines), tables)


def verify_entropy(n: int = 64, steps: int = 500, seeds=range(10),
                   cfl: float = 0.45, tol: float = 1e-12,
                   solver_kind: str = "direct") -> VerifyResult:
    """Per-step non-increase of the total energy, sourceless capillary core."""
    passed = True
    lines = []
    rows = []
    for seed in seeds:
        grid = Grid2D(n, n, 1.0, 1.0)
        claw = ConstantCapillarity(1.0)
        plaw = PowerLawPressure(kappa=1.0, gamma=2.0)
        setup = ModelSetup(grid=grid, claw=claw, plaw=plaw,
                           flux=FluxSpec(pressure=plaw), cfl=cfl,
                           solver=SolverOptions(kind=solver_kind))
        state = random_smooth_state(grid, claw, np.random.default_rng(seed))
        rec = energy_record(state, setup, 0.0, 0.0)
        max_increase = -np.inf
        t0 = time.perf_counter()
        for _ in range(steps):
            state, new_rec = step(state, setup, t=rec.t)
            max_increase = max(max_increase,
                               (new_rec.etot - rec.etot) / rec.etot)
            rec = new_rec
        elapsed = time.perf_counter() - t0
        ok = max_increase <= tol
        passed = passed and ok
        lines.append(f"entropy seed {seed}: max relative step increase "
                     f"{max_increase:.3e} (tolerance {tol:.1e}), "
                     f"{steps} steps in {elapsed:.1f}s")
        rows.append((seed, "%.6e" % max_increase, "%.1f" % elapsed))
    return VerifyResult(passed, tuple(lines),
                        {"entropy": (("seed", "max_rel_increase", "seconds"),
                                     rows)})


GLYCERIN = dict(nu=2.3e-6, sigma=67e-3, rho_fluid=1.07e3)


def verify_nusselt(steps: int = 100, tol: float = 1e-10,
                   theta_deg: float = 6.4) -> VerifyResult:
    """The unperturbed Nusselt film is a fixed point of the full step."""
    grid = Grid2D(32, 8, 0.05, 0.0125)
    params = FilmParams(theta=math.radians(theta_deg), eps=0.0, h0=1e-3,
                        **GLYCERIN)
    state0, flux = swfilm.scenario("roll_wave_1d", params, grid)
    setup = ModelSetup(grid=grid, claw=swfilm.film_capillarity(params),
                       plaw=flux.pressure, flux=flux, film=params)
    state = state0.copy()
    for _ in range(steps):
        state, _rec = step(state, setup)
    mom_scale = max(float(np.max(np.abs(state0.mu))), 1e-300)
    dev = max(
        float(np.max(np.abs(state.rho - state0.rho)))
        / float(np.max(np.abs(state0.rho))),
        float(np.max(np.abs(state.mu - state0.mu))) / mom_scale,
        float(np.max(np.abs(state.mw - state0.mw))) / mom_scale,
    )
    lines = [f"nusselt: max relative deviation {dev:.3e} after {steps} steps "
             f"(tolerance {tol:.1e})"]
    return VerifyResult(dev <= tol, tuple(lines), {})


VERIFY_SUITES = {
    "duality": verify_duality,
    "symmetry": verify_symmetry,
    "bohm": verify_bohm,
    "entropy": verify_entropy,
    "nusselt": verify_nusselt,
}
