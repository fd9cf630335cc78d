"""Command-line front end: `korteweg run` and `korteweg verify`.

Exit codes: 0 on success, 1 on a property/runtime failure, 2 on a
configuration error.
"""

import argparse
import os
import sys

from .config import ConfigError, load_config
from .driver import VERIFY_SUITES, run


def _write_tables(tables, out_dir):
    os.makedirs(out_dir, exist_ok=True)
    for name, (header, rows) in tables.items():
        path = os.path.join(out_dir, f"{name}.csv")
        with open(path, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(str(c) for c in row) + "\n")
        print(f"wrote {path}")


def _cmd_run(args):
    try:
        cfg = load_config(args.config, args.override)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        report = run(cfg)
    except RuntimeError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        # scenario/parameter validation that only the model layer can judge
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    print(f"steps={report.steps} final_t={report.final_t:.6e} "
          f"min_rho={report.min_rho:.6e} energy_drop={report.energy_drop:.6e}")
    for p in report.output_paths:
        print(f"wrote {p}")
    return 0


def _cmd_verify(args):
    suite = args.suite
    kwargs = {}
    if suite in ("duality", "symmetry", "entropy"):
        if args.n:
            kwargs["n"] = args.n
    if suite == "symmetry" and args.trials:
        kwargs["trials"] = args.trials
    if suite in ("entropy", "nusselt") and args.steps:
        kwargs["steps"] = args.steps
    if suite == "entropy":
        kwargs["seeds"] = range(args.seeds)
        kwargs["solver_kind"] = args.solver
    if suite == "bohm":
        kwargs["sizes"] = tuple(int(s) for s in args.sizes.split(","))
        kwargs["laws"] = tuple(args.laws.split(","))

    result = VERIFY_SUITES[suite](**kwargs)
    for line in result.lines:
        print(line)
    if result.tables:
        _write_tables(result.tables, args.out)
    print(f"{suite}: {'PASS' if result.passed else 'FAIL'}")
    return 0 if result.passed else 1


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="korteweg",
        description="Entropy-stable semi-implicit solver for capillary "
                    "fluids and falling films on periodic 2D grids")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured simulation")
    p_run.add_argument("config", help="flat key = value configuration file")
    p_run.add_argument("--override", action="append", default=[],
                       metavar="key=val", help="override a configuration key")
    p_run.set_defaults(func=_cmd_run)

    p_ver = sub.add_parser("verify", help="run a verification suite")
    p_ver.add_argument("suite", choices=sorted(VERIFY_SUITES))
    p_ver.add_argument("--n", type=int, default=0, help="grid size")
    p_ver.add_argument("--steps", type=int, default=0, help="time steps")
    p_ver.add_argument("--seeds", type=int, default=10,
                       help="number of random seeds (entropy)")
    p_ver.add_argument("--trials", type=int, default=0,
                       help="random fields (symmetry)")
    p_ver.add_argument("--sizes", default="32,64,128",
                       help="comma-separated grid sizes (bohm)")
    p_ver.add_argument("--laws", default="constant,quantum",
                       help="comma-separated law names (bohm)")
    p_ver.add_argument("--solver", default="direct",
                       choices=("krylov", "direct"),
                       help="implicit solver for entropy runs")
    p_ver.add_argument("--out", default="verify_out",
                       help="directory for CSV artifacts")
    p_ver.set_defaults(func=_cmd_verify)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
