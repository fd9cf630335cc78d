import os

import numpy as np
import pytest

from korteweg.cli import main as cli_main
from korteweg.config import ConfigError, build_config, load_config, parse_assignments
from korteweg.constitutive import ConstantCapillarity, PowerLawPressure
from korteweg.driver import (ENERGY_HEADER, ModelSetup, SolverOptions,
                             make_setup, run, run_from_file, step,
                             verify_bohm, verify_duality, verify_entropy,
                             verify_nusselt, verify_symmetry)
from korteweg.grid import Grid2D, State, read_snapshot
from korteweg.hyperbolic import FluxSpec

EK_CONFIG = """
# small capillary-core run
model = euler_korteweg
grid.nx = 8
grid.ny = 8
grid.Lx = 1.0
grid.Ly = 1.0
t_end = 2e-3
seed = 3
capillarity.kind = constant
capillarity.K0 = 1.0
pressure.kind = power_law
pressure.kappa = 1.0
pressure.gamma = 2.0
"""


def write_config(tmp_path, text, name="run.ini", extra=""):
    path = tmp_path / name
    path.write_text(text + extra)
    return str(path)


# --- configuration ----------------------------------------------------------

def test_config_defaults_and_types(tmp_path):
    cfg = load_config(write_config(tmp_path, EK_CONFIG))
    assert cfg["cfl"] == 0.45
    assert cfg["grid.nx"] == 8
    assert cfg["solver.kind"] == "krylov"
    assert cfg["scenario"] == "random_smooth"
    assert cfg["output.dir"] == "out"


def test_unknown_key_rejected():
    with pytest.raises(ConfigError, match="grid.mx"):
        parse_assignments(["grid.mx = 8"])


def test_missing_required_key_named():
    raw = parse_assignments(l for l in EK_CONFIG.splitlines()
                            if not l.startswith("t_end"))
    with pytest.raises(ConfigError, match="t_end"):
        build_config(raw)


def test_bad_value_rejected():
    with pytest.raises(ConfigError, match="grid.nx"):
        build_config(parse_assignments(["grid.nx = eight"]))


def test_overrides_apply_after_file(tmp_path):
    cfg = load_config(write_config(tmp_path, EK_CONFIG),
                      overrides=["cfl=0.3", "grid.nx = 12"])
    assert cfg["cfl"] == 0.3
    assert cfg["grid.nx"] == 12


def test_model_specific_requirements():
    base = ["model = shallow_film", "grid.nx = 8", "grid.ny = 8",
            "grid.Lx = 1.0", "grid.Ly = 1.0", "t_end = 0.0"]
    with pytest.raises(ConfigError, match="film.theta_deg"):
        build_config(parse_assignments(base))
    film = base + ["film.theta_deg = 6.4", "film.nu = 2.3e-6",
                   "film.sigma = 67e-3", "film.rho = 1.07e3"]
    cfg = build_config(parse_assignments(film))
    assert cfg["scenario"] == "roll_wave_1d"
    with pytest.raises(ConfigError, match="scenario"):
        build_config(parse_assignments(film + ["scenario = drop_kick"]))


# --- run behavior ------------------------------------------------------------

def test_run_zero_t_end_writes_initial_snapshot_only(tmp_path):
    out = tmp_path / "out0"
    cfg = load_config(write_config(tmp_path, EK_CONFIG),
                      overrides=["t_end=0.0", f"output.dir={out}"])
    report = run(cfg)
    assert report.steps == 0
    snaps = [p for p in report.output_paths if "snap_" in p]
    assert len(snaps) == 1 and snaps[0].endswith("snap_000000.csv")
    energy = (out / "energy.csv").read_text().splitlines()
    assert energy[0] == ENERGY_HEADER
    assert len(energy) == 2  # header + initial record


def test_run_is_bitwise_deterministic(tmp_path):
    texts = []
    for tag in ("a", "b"):
        out = tmp_path / f"out_{tag}"
        cfg = load_config(write_config(tmp_path, EK_CONFIG),
                          overrides=[f"output.dir={out}"])
        run(cfg)
        texts.append((out / "energy.csv").read_bytes())
    assert texts[0] == texts[1]


def test_run_report_and_energy_log_monotone(tmp_path):
    out = tmp_path / "out_mono"
    cfg = load_config(write_config(tmp_path, EK_CONFIG),
                      overrides=[f"output.dir={out}", "t_end=0.1",
                                 "output.every_steps=2"])
    report = run(cfg)
    assert report.steps >= 4
    assert report.final_t == pytest.approx(0.1, rel=1e-12)
    data = np.loadtxt(out / "energy.csv", delimiter=",", skiprows=1, ndmin=2)
    t = data[:, 0]
    assert np.all(np.diff(t) > 0.0)
    assert data.shape[0] == report.steps + 1
    # intermediate snapshots at the configured cadence, plus the final state
    assert os.path.exists(out / "snap_000002.csv")
    assert os.path.exists(out / f"snap_{report.steps:06d}.csv")


def test_uniform_state_is_fixed_point_to_solver_tolerance():
    g = Grid2D(8, 8, 1.0, 1.0)
    plaw = PowerLawPressure(1.0, 2.0)
    setup = ModelSetup(grid=g, claw=ConstantCapillarity(1.0), plaw=plaw,
                       flux=FluxSpec(pressure=plaw),
                       solver=SolverOptions(kind="krylov"))
    rho = 1.5 * np.ones(g.shape)
    state = State(g, rho, np.stack([0.3 * rho, -0.2 * rho]),
                  np.zeros((2,) + g.shape))
    s = state
    for _ in range(5):
        s, _rec = step(s, setup)
    assert np.max(np.abs(s.rho - state.rho)) <= 1e-12
    assert np.max(np.abs(s.mu - state.mu)) <= 1e-9 * np.max(np.abs(state.mu))


def test_restart_from_snapshot_matches_uninterrupted_run(tmp_path):
    cfg = build_config(parse_assignments(EK_CONFIG.splitlines()))
    setup, state0 = make_setup(cfg)

    full = state0.copy()
    for _ in range(10):
        full, _ = step(full, setup)

    half = state0.copy()
    for _ in range(6):
        half, _ = step(half, setup)
    snap = tmp_path / "restart.csv"
    from korteweg.grid import write_snapshot
    write_snapshot(half, snap)
    resumed = read_snapshot(snap)
    for _ in range(4):
        resumed, _ = step(resumed, setup)

    assert np.max(np.abs(resumed.rho - full.rho)) <= 1e-12 * np.max(full.rho)
    mscale = np.max(np.abs(full.mu))
    assert np.max(np.abs(resumed.mu - full.mu)) <= 1e-12 * mscale
    assert np.max(np.abs(resumed.mw - full.mw)) <= 1e-12 * mscale


def test_step_error_carries_step_index(tmp_path):
    # an absurd iteration cap stalls the implicit solve on the first step;
    # run() must surface the step index with the underlying error
    cfg = load_config(write_config(tmp_path, EK_CONFIG),
                      overrides=[f"output.dir={tmp_path/'outbad'}",
                                 "solver.max_iters=1"])
    with pytest.raises(RuntimeError, match=r"step 1 .*residual"):
        run(cfg)


# --- verification suites -----------------------------------------------------

def test_verify_duality_passes():
    res = verify_duality(n=16)
    assert res.passed


def test_verify_symmetry_passes():
    res = verify_symmetry(n=8, trials=4)
    assert res.passed


def test_verify_bohm_small_sizes():
    res = verify_bohm(sizes=(32, 64), laws=("constant",))
    assert res.passed
    header, rows = res.tables["bohm_constant"]
    assert header == ("n", "residual_rel", "observed_order")
    assert len(rows) == 2


def test_verify_entropy_short_run():
    res = verify_entropy(n=16, steps=25, seeds=[0, 1], solver_kind="krylov")
    assert res.passed


def test_verify_nusselt_short_run():
    res = verify_nusselt(steps=20)
    assert res.passed


# --- CLI ----------------------------------------------------------------------

def test_cli_run_ok(tmp_path, capsys):
    path = write_config(tmp_path, EK_CONFIG)
    code = cli_main(["run", path, "--override", f"output.dir={tmp_path/'o'}"])
    out = capsys.readouterr().out
    assert code == 0
    assert "energy.csv" in out


def test_cli_missing_key_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, "model = euler_korteweg\n", name="broken.ini")
    code = cli_main(["run", path])
    assert code == 2
    assert "grid.nx" in capsys.readouterr().err


def test_cli_unknown_key_exits_2(tmp_path, capsys):
    path = write_config(tmp_path, EK_CONFIG, extra="grid.mx = 8\n")
    assert cli_main(["run", path]) == 2
    assert "grid.mx" in capsys.readouterr().err


def test_cli_verify_duality(tmp_path, capsys):
    code = cli_main(["verify", "duality", "--n", "16",
                     "--out", str(tmp_path / "v")])
    assert code == 0
    assert "PASS" in capsys.readouterr().out
    assert (tmp_path / "v" / "duality.csv").exists()


def test_cli_scenario_validation_maps_to_exit_2(tmp_path, capsys):
    text = """
model = shallow_film
scenario = drop
grid.nx = 8
grid.ny = 8
grid.Lx = 0.02
grid.Ly = 0.02
t_end = 0.0
film.theta_deg = 60
film.nu = 1e-6
film.sigma = 67e-3
film.rho = 1e3
"""
    path = write_config(tmp_path, text, name="drop.ini")
    assert cli_main(["run", path]) == 2
    assert "precursor" in capsys.readouterr().err


def test_run_from_file_alternate_laws(tmp_path):
    # quantum law and shallow-water pressure through the config path
    text = EK_CONFIG.replace("capillarity.kind = constant",
                             "capillarity.kind = quantum") \
                    .replace("capillarity.K0 = 1.0", "capillarity.c = 0.5") \
                    .replace("pressure.kind = power_law",
                             "pressure.kind = shallow_water") \
                    .replace("pressure.kappa = 1.0", "pressure.g = 9.8") \
                    .replace("pressure.gamma = 2.0", "pressure.theta_deg = 0.0")
    path = write_config(tmp_path, text, name="quantum.ini")
    rep = run_from_file(path, overrides=[f"output.dir={tmp_path/'q'}"])
    assert rep.steps > 0 and rep.min_rho > 0.0


def test_generic_law_through_config(tmp_path):
    # K(rho) = K0 * rho^alpha with alpha = -1 reproduces the quantum law
    text = EK_CONFIG.replace("capillarity.kind = constant",
                             "capillarity.kind = generic") \
        + "capillarity.alpha = -1.0\n"
    path = write_config(tmp_path, text, name="generic.ini")
    cfg = load_config(path, overrides=[f"output.dir={tmp_path/'g'}",
                                       "t_end=1e-3"])
    setup, state = make_setup(cfg)
    out, rec = step(state, setup)
    assert rec.mass == pytest.approx(np.sum(state.rho) / 64.0, rel=1e-12)


def test_cli_verify_bohm_writes_tables(tmp_path, capsys):
    code = cli_main(["verify", "bohm", "--sizes", "32,64",
                     "--laws", "quantum", "--out", str(tmp_path / "v")])
    assert code == 0
    table = (tmp_path / "v" / "bohm_quantum.csv").read_text().splitlines()
    assert table[0] == "n,residual_rel,observed_order"
    assert len(table) == 3
