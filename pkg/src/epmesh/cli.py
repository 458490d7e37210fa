"""Command-line entry point.

    epmesh run CONFIG [--out DIR] [--dump-particles] [--dump-components] [--no-figures]
    epmesh verify [--size tiny|small]
    epmesh demo-epdiff [--scale N] [--out DIR]

Exit codes: 0 success, 2 configuration error, 3 solver failure,
4 verification failure.
"""

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, parse_config
from .fem import ConvergenceError
from .integrator import StepFailed

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_VERIFY = 0, 2, 3, 4


def _summary(result, out_dir):
    r0, r1 = result.records[0], result.records[-1]
    print(f"steps: {len(result.records) - 1}  t_end: {r1.time:.6g}")
    print(f"H(0) = {r0.hamiltonian:.12g}  H(end) = {r1.hamiltonian:.12g}")
    print(f"max |H(t) - H(0)| = {result.energy_drift:.6e}  (relative {result.relative_energy_drift:.3e})")
    print(f"momentum drift per step (relative): {result.momentum_drift:.3e}")
    print(f"max fixed-point sweeps: {result.max_fp_iterations}  max CG iterations: {result.max_cg_iterations}")
    if out_dir is not None:
        print(f"outputs written to {out_dir}")


def _run_config(cfg, out_dir, args):
    from .simulate import run_simulation

    result = run_simulation(
        cfg, out_dir,
        dump_particles=args.dump_particles or None,
        dump_components=args.dump_components or None,
        figures=False if args.no_figures else None,
    )
    _summary(result, out_dir)
    return result


def cmd_run(args):
    try:
        cfg = parse_config(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {args.config}: {exc.strerror}") from exc
    out_dir = args.out or cfg.output_dir
    _run_config(cfg, out_dir, args)
    return EXIT_OK


def cmd_demo(args):
    from .simulate import demo_config

    try:
        cfg = demo_config(args.scale)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if args.t_end is not None:
        cfg = replace(cfg, t_end=args.t_end)
    out_dir = args.out or cfg.output_dir
    print(f"EP-Diff two-line collision on {cfg.nx}x{cfg.ny}, alpha={cfg.alpha}, dt={cfg.dt}, "
          f"{cfg.particles_per_cell} particles/cell")
    _run_config(cfg, out_dir, args)
    return EXIT_OK


def cmd_verify(args):
    from .verify import run_checks

    checks = run_checks(args.size, args.seed)
    for c in checks:
        print(c.line())
    failed = [c for c in checks if not c.passed]
    print(f"{len(checks) - len(failed)}/{len(checks)} checks passed")
    return EXIT_OK if not failed else EXIT_VERIFY


def build_parser():
    ap = argparse.ArgumentParser(prog="epmesh", description="Hamiltonian particle-mesh EP solver")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def output_flags(p):
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--dump-particles", action="store_true", help="also write particle CSVs")
        p.add_argument("--dump-components", action="store_true", help="also write ux/uy snapshots")
        p.add_argument("--no-figures", action="store_true", help="skip the matplotlib PNGs")

    p = sub.add_parser("run", help="run a simulation from a config file")
    p.add_argument("config")
    output_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the numerical oracle suite")
    p.add_argument("--size", choices=("tiny", "small"), default="tiny")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("demo-epdiff", help="two-line EP-Diff collision at 128/SCALE resolution")
    p.add_argument("--scale", type=int, default=1)
    p.add_argument("--t-end", type=float, default=None)
    output_flags(p)
    p.set_defaults(func=cmd_demo)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StepFailed, ConvergenceError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
