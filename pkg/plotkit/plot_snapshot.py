#!/usr/bin/env python3
"""Render a film-height figure from a snapshot CSV.

Usage: plot_snapshot.py <snap.csv> --kind {surface,contour,profile_x} --out fig.png
"""

import argparse

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from snapshot_frame import load_snapshot

KINDS = ("surface", "contour", "profile_x")


def _padded_levels(values, n=21):
    """Contour levels that survive a degenerate (single-value) range."""
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi - lo <= 1e-300 or hi - lo <= 1e-12 * max(abs(hi), 1e-300):
        pad = max(abs(hi), 1.0) * 1e-6
        lo, hi = lo - pad, hi + pad
    return np.linspace(lo, hi, n)


def plot_snapshot(path, kind="contour", out="snapshot.png", dpi=150):
    if kind not in KINDS:
        raise ValueError(f"unknown plot kind {kind!r}; expected one of {KINDS}")
    frame = load_snapshot(path)
    h = frame["rho"]
    X, Y = np.meshgrid(frame.x, frame.y, indexing="ij")

    if kind == "surface":
        fig = plt.figure(figsize=(7, 5))
        ax = fig.add_subplot(projection="3d")
        ax.plot_surface(X, Y, h, cmap="viridis", linewidth=0)
        lo, hi = _padded_levels(h, 2)
        ax.set_zlim(lo, hi)
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_zlabel("h [m]")
    elif kind == "contour":
        fig, ax = plt.subplots(figsize=(7, 5))
        cs = ax.contourf(X, Y, h, levels=_padded_levels(h), cmap="viridis")
        fig.colorbar(cs, ax=ax, label="h [m]")
        ax.set_xlabel("x [m]")
        ax.set_ylabel("y [m]")
        ax.set_aspect("equal")
    else:
        fig, ax = plt.subplots(figsize=(7, 4))
        j = frame.ny // 2
        ax.plot(frame.x, h[:, j], "-", lw=1.5)
        ax.set_xlabel("x [m]")
        ax.set_ylabel(f"h(x, y={frame.y[j]:.4g}) [m]")
        ax.grid(True, alpha=0.3)

    fig.tight_layout()
    fig.savefig(out, dpi=dpi, metadata={"Software": "plotkit"})
    plt.close(fig)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("snapshot", help="snapshot CSV (x,y,rho,u1,u2,w1,w2)")
    ap.add_argument("--kind", default="contour", choices=KINDS)
    ap.add_argument("--out", default="snapshot.png")
    ap.add_argument("--dpi", type=int, default=150)
    args = ap.parse_args(argv)
    out = plot_snapshot(args.snapshot, kind=args.kind, out=args.out,
                        dpi=args.dpi)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
