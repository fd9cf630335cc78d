#!/usr/bin/env python3
"""Render energy and mass time series from an energy.csv log.

Usage: plot_energy.py <energy.csv> --out energy.png [--assert-monotone]

--assert-monotone checks, before rendering, that the total energy never
increases between records (the expectation for sourceless runs).
"""

import argparse

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

ENERGY_COLUMNS = ("t", "dt", "mass", "ekin_u", "ekin_w", "epot", "etot",
                  "iters", "residual")


class EnergyParseError(ValueError):
    pass


def load_energy(path):
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise EnergyParseError(f"{path}: empty file")
    header = [c.strip() for c in lines[0].split(",")]
    if header != list(ENERGY_COLUMNS):
        raise EnergyParseError(
            f"{path}: row 1: expected header {','.join(ENERGY_COLUMNS)!r}")
    if len(lines) < 2:
        raise EnergyParseError(f"{path}: no data rows")
    try:
        data = np.asarray([[float(p) for p in ln.split(",")]
                           for ln in lines[1:]])
    except ValueError as exc:
        raise EnergyParseError(f"{path}: {exc}") from exc
    if data.shape[1] != len(ENERGY_COLUMNS):
        raise EnergyParseError(f"{path}: wrong column count")
    return {name: data[:, k] for k, name in enumerate(ENERGY_COLUMNS)}


def plot_energy(path, out="energy.png", dpi=150, assert_monotone=False,
                monotone_rtol=1e-12):
    log = load_energy(path)
    if assert_monotone:
        etot = log["etot"]
        growth = np.diff(etot) / np.maximum(np.abs(etot[:-1]), 1e-300)
        worst = float(np.max(growth)) if len(growth) else 0.0
        if worst > monotone_rtol:
            raise AssertionError(
                f"{path}: total energy increases by {worst:.3e} relative "
                f"(tolerance {monotone_rtol:.1e})")

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.plot(log["t"], log["etot"], "-", lw=1.8, label="total")
    ax.plot(log["t"], log["ekin_u"], "--", lw=1.2, label="kinetic (u)")
    ax.plot(log["t"], log["ekin_w"], "--", lw=1.2, label="kinetic (w)")
    ax.plot(log["t"], log["epot"], ":", lw=1.2, label="potential")
    ax.set_xlabel("t [s]")
    ax.set_ylabel("energy [J]")
    ax.grid(True, alpha=0.3)

    ax2 = ax.twinx()
    ax2.plot(log["t"], log["mass"], "-", color="tab:gray", lw=1.0,
             label="mass")
    ax2.set_ylabel("mass [kg]")

    handles, labels = ax.get_legend_handles_labels()
    h2, l2 = ax2.get_legend_handles_labels()
    ax.legend(handles + h2, labels + l2, loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(out, dpi=dpi, metadata={"Software": "plotkit"})
    plt.close(fig)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("log", help="energy.csv written by the simulator")
    ap.add_argument("--out", default="energy.png")
    ap.add_argument("--dpi", type=int, default=150)
    ap.add_argument("--assert-monotone", action="store_true",
                    help="fail if the total energy ever increases")
    args = ap.parse_args(argv)
    out = plot_energy(args.log, out=args.out, dpi=args.dpi,
                      assert_monotone=args.assert_monotone)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
