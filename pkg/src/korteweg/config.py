"""Flat key = value run configuration.

The file format is one `dotted.key = value` assignment per line; `#` starts
a comment. Every key must be known, and the keys required by the selected
model must be present, otherwise a ConfigError naming the offending key is
raised (the CLI maps it to exit code 2). Command-line overrides use the same
`key=value` syntax and are applied after the file.
"""

from dataclasses import dataclass, field
from typing import Dict

REQUIRED = object()

# key -> (type, default). REQUIRED defaults are checked per model below.
KEY_SPECS = {
    "model": (str, REQUIRED),
    "scenario": (str, None),
    "grid.nx": (int, REQUIRED),
    "grid.ny": (int, REQUIRED),
    "grid.Lx": (float, REQUIRED),
    "grid.Ly": (float, REQUIRED),
    "t_end": (float, REQUIRED),
    "cfl": (float, 0.45),
    "dt_max": (float, 1.0),
    "rho_floor": (float, 1e-12),
    "seed": (int, 0),
    "output.dir": (str, "out"),
    "output.every_steps": (int, 0),
    "solver.kind": (str, "krylov"),
    "solver.rtol": (float, 1e-10),
    "solver.max_iters": (int, 0),
    # plain capillary-fluid core
    "capillarity.kind": (str, None),
    "capillarity.K0": (float, None),
    "capillarity.c": (float, None),
    "capillarity.alpha": (float, 0.0),
    "pressure.kind": (str, None),
    "pressure.g": (float, 9.8),
    "pressure.theta_deg": (float, 0.0),
    "pressure.kappa": (float, None),
    "pressure.gamma": (float, None),
    "ek.rho0": (float, 2.0),
    "ek.rho_amp": (float, 0.25),
    "ek.u_amp": (float, 0.25),
    "ek.modes": (int, 3),
    # shallow-water film
    "film.theta_deg": (float, None),
    "film.nu": (float, None),
    "film.sigma": (float, None),
    "film.rho": (float, None),
    "film.g": (float, 9.8),
    "film.h0": (float, 1e-3),
    "film.h_drop": (float, 1e-5),
    "film.h_precursor": (float, 0.0),
    "film.drop_width": (float, 2e-3),
    "film.perturbation_eps": (float, 0.05),
}

MODELS = ("euler_korteweg", "shallow_film")
EK_SCENARIOS = ("random_smooth",)
FILM_SCENARIOS = ("roll_wave_1d", "roll_wave_2d", "drop")


class ConfigError(ValueError):
    """Unknown, missing, or malformed configuration key."""


@dataclass
class SimConfig:
    values: Dict[str, object] = field(default_factory=dict)

    def __getitem__(self, key):
        return self.values[key]

    def get(self, key, default=None):
        return self.values.get(key, default)


def _convert(key, raw: str):
    typ, _ = KEY_SPECS[key]
    try:
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"bad value for key '{key}': {raw!r}") from exc


def parse_assignments(lines) -> Dict[str, str]:
    """Parse `key = value` lines; returns the raw string mapping."""
    raw = {}
    for lineno, line in enumerate(lines, start=1):
        text = line.split("#", 1)[0].strip()
        if not text:
            continue
        if "=" not in text:
            raise ConfigError(f"line {lineno}: expected 'key = value', "
                              f"got {text!r}")
        key, val = text.split("=", 1)
        key = key.strip()
        val = val.strip()
        if key not in KEY_SPECS:
            raise ConfigError(f"unknown configuration key '{key}'")
        raw[key] = val
    return raw


def _require(values, key):
    if values.get(key) is None:
        raise ConfigError(f"missing required configuration key '{key}'")


def build_config(raw: Dict[str, str]) -> SimConfig:
    """Type-convert, fill defaults, and validate a raw key mapping."""
    values = {}
    for key, (typ, default) in KEY_SPECS.items():
        if key in raw:
            values[key] = _convert(key, raw[key])
        else:
            values[key] = None if default is REQUIRED else default

    for key, (typ, default) in KEY_SPECS.items():
        if default is REQUIRED:
            _require(values, key)

    model = values["model"]
    if model not in MODELS:
        raise ConfigError(f"unknown model '{model}'")

    if values["grid.nx"] < 4 or values["grid.ny"] < 4:
        raise ConfigError("grid.nx and grid.ny must be at least 4")
    if values["t_end"] < 0.0:
        raise ConfigError("t_end must be non-negative")
    if not 0.0 < values["cfl"] <= 1.0:
        raise ConfigError("cfl must lie in (0, 1]")
    if values["solver.kind"] not in ("krylov", "direct"):
        raise ConfigError(f"unknown solver.kind '{values['solver.kind']}'")

    if model == "euler_korteweg":
        if values["scenario"] is None:
            values["scenario"] = "random_smooth"
        if values["scenario"] not in EK_SCENARIOS:
            raise ConfigError(f"unknown scenario '{values['scenario']}' "
                              f"for model euler_korteweg")
        _require(values, "capillarity.kind")
        kind = values["capillarity.kind"]
        if kind == "constant":
            _require(values, "capillarity.K0")
        elif kind == "quantum":
            _require(values, "capillarity.c")
        elif kind == "generic":
            # generic laws are expressed as K(rho) = K0 * rho^alpha
            _require(values, "capillarity.K0")
        else:
            raise ConfigError(f"unknown capillarity.kind '{kind}'")
        _require(values, "pressure.kind")
        pkind = values["pressure.kind"]
        if pkind == "power_law":
            _require(values, "pressure.kappa")
            _require(values, "pressure.gamma")
        elif pkind != "shallow_water":
            raise ConfigError(f"unknown pressure.kind '{pkind}'")
    else:
        if values["scenario"] is None:
            values["scenario"] = "roll_wave_1d"
        if values["scenario"] not in FILM_SCENARIOS:
            raise ConfigError(f"unknown scenario '{values['scenario']}' "
                              f"for model shallow_film")
        for key in ("film.theta_deg", "film.nu", "film.sigma", "film.rho"):
            _require(values, key)

    return SimConfig(values)


def load_config(path, overrides=()) -> SimConfig:
    """Read a config file and apply `key=value` override strings."""
    with open(path) as fh:
        raw = parse_assignments(fh)
    for item in overrides:
        raw.update(parse_assignments([item]))
    return build_config(raw)
