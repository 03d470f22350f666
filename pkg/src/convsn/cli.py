"""Command-line entry point.

Subcommands
    duct        solve the straight duct benchmark
    assembly    solve the fuel-assembly eigenvalue problem
    filters     dump ConvFEM filter tables (``filters dump``)
    quadrature  dump ordinate directions and weights (``quadrature dump``)
    oracle      compare the solver against the dense brute-force oracle
                (``oracle compare``)

Exit status: 0 on success, 1 on solver non-convergence or oracle mismatch
(with diagnostics on stderr), 2 on usage errors.
"""

import argparse
import io
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .eigen import SolverOptions, power_iteration, solve_fixed_source
from .filters import ORDER_NAMES, build_convfem_filters, filters_to_csv
from .grid import GridSpec
from .output import (field_to_csv, keff_history_to_csv, metrics_to_csv,
                     profile_at_x, profile_at_y, profile_to_csv,
                     write_manifest, write_vtk_structured_points)
from .problems import build_fuel_assembly, build_straight_duct, synthetic_xs_path
from .quadrature import build_quadrature, quadrature_to_csv


def _read_config(path):
    """Flat ``key = value`` file mirroring the CLI flags."""
    values = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ValueError(f"{path}: malformed line {line!r}")
        key, _, val = line.partition("=")
        values[key.strip().replace("-", "_")] = val.strip()
    return values


def _solver_flags(sub):
    sub.add_argument("--na", type=int, default=4,
                     help="angular patches per octahedron face side")
    sub.add_argument("--order", choices=sorted(ORDER_NAMES), default="quadratic",
                     help="ConvFEM filter order for the pg scheme")
    sub.add_argument("--scheme", choices=["upwind", "pg"], default="pg")
    sub.add_argument("--mg-iters", type=int, default=100,
                     help="multigrid iterations (per outer iteration)")
    sub.add_argument("--jacobi-sweeps", type=int, default=3)
    sub.add_argument("--outer-iters", type=int, default=100)
    sub.add_argument("--levels", type=int, default=None,
                     help="hierarchy depth (default: deepest legal)")
    sub.add_argument("--tol-rel", type=float, default=0.0,
                     help="relative residual-drop target; 0 disables the check")
    sub.add_argument("--threads", type=int, default=1,
                     help="kernel parallelism hint; 1 keeps runs bit-stable")
    sub.add_argument("--out", type=Path, default=Path("out"))
    sub.add_argument("--profile-x", type=float, default=None,
                     help="emit the 1D cut at this fixed x (cm)")
    sub.add_argument("--profile-y", type=float, default=None,
                     help="emit the 1D cut at this fixed y (cm)")
    sub.add_argument("--config", type=Path, default=None,
                     help="flat key=value file providing flag defaults")


def _options_from_args(args):
    return SolverOptions(scheme=args.scheme, order=ORDER_NAMES[args.order],
                         n_a=args.na, n_levels=args.levels,
                         mg_iters=args.mg_iters,
                         jacobi_sweeps=args.jacobi_sweeps,
                         outer_iters=args.outer_iters, tol_rel=args.tol_rel)


def _manifest_params(args, problem, extra=None):
    params = {
        "version": __version__,
        "problem": problem.name,
        "nx": problem.nx, "ny": problem.ny,
        "dx": problem.dx, "dy": problem.dy,
        "groups": problem.n_groups,
        "scheme": args.scheme, "filter_order": args.order,
        "na": args.na, "levels": args.levels,
        "mg_iters": args.mg_iters, "jacobi_sweeps": args.jacobi_sweeps,
        "outer_iters": args.outer_iters, "threads": args.threads,
    }
    if extra:
        params.update(extra)
    return params


def _write_fields(outdir, phi, grid, args):
    outdir.mkdir(parents=True, exist_ok=True)
    for g in range(phi.shape[2]):
        with open(outdir / f"flux_g{g + 1}.csv", "w") as fh:
            field_to_csv(phi, grid, fh, group=g)
    write_vtk_structured_points(phi, grid, outdir / "flux.vtk")
    if args.profile_x is not None:
        x_used, ys, vals = profile_at_x(phi, grid, args.profile_x)
        with open(outdir / f"profile_x{args.profile_x:g}.csv", "w") as fh:
            profile_to_csv("y", ys, vals, fh)
    if args.profile_y is not None:
        y_used, xs, vals = profile_at_y(phi, grid, args.profile_y)
        with open(outdir / f"profile_y{args.profile_y:g}.csv", "w") as fh:
            profile_to_csv("x", xs, vals, fh)


def _cmd_duct(args):
    problem = build_straight_duct(args.dx)
    options = _options_from_args(args)
    result = solve_fixed_source(problem, options)
    grid = GridSpec(problem.nx, problem.ny, problem.dx, problem.dy)
    _write_fields(args.out, result.phi, grid, args)
    with open(args.out / "metrics.csv", "w") as fh:
        metrics_to_csv(result.residual_history, fh)
    write_manifest(args.out / "manifest.txt",
                   _manifest_params(args, problem, {"duct_dx": args.dx}))
    if not result.converged:
        first, last = result.residual_history[0], result.residual_history[-1]
        print(f"solver did not converge: residual l1 {first:.3e} -> {last:.3e} "
              f"after {args.mg_iters} multigrid iterations", file=sys.stderr)
        return 1
    return 0


def _cmd_assembly(args):
    xs_file = args.xs_file or synthetic_xs_path()
    problem = build_fuel_assembly(args.rods_inserted, xs_file,
                                  n_pins=args.pins)
    options = _options_from_args(args)
    state = power_iteration(problem, options, inner_iters=args.mg_iters)
    grid = GridSpec(problem.nx, problem.ny, problem.dx, problem.dy)
    _write_fields(args.out, state.phi, grid, args)
    with open(args.out / "keff_history.csv", "w") as fh:
        keff_history_to_csv(state.history, fh)
    with open(args.out / "metrics.csv", "w") as fh:
        metrics_to_csv(state.residual_history, fh)
    write_manifest(args.out / "manifest.txt",
                   _manifest_params(args, problem, {
                       "rods_inserted": args.rods_inserted,
                       "xs_file": xs_file,
                       "k_eff": f"{state.k_eff:.10g}",
                   }))
    print(f"k_eff = {state.k_eff:.8f} after {state.iteration} outer iterations")
    if not np.isfinite(state.k_eff) or state.k_eff <= 0:
        print("power iteration produced a non-physical k_eff", file=sys.stderr)
        return 1
    return 0


def _cmd_filters_dump(args):
    fs = build_convfem_filters(ORDER_NAMES[args.order], args.dx, args.dy)
    buf = io.StringIO()
    filters_to_csv(fs, buf)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"filters_{args.order}.csv").write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _cmd_quadrature_dump(args):
    quad = build_quadrature(args.na)
    buf = io.StringIO()
    quadrature_to_csv(quad, buf)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"quadrature_na{args.na}.csv").write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return 0


def _cmd_oracle_compare(args):
    from .verification import compare_against_dense_oracle

    report = compare_against_dense_oracle(nx=args.nx, ny=args.ny, n_a=args.na,
                                          n_groups=args.groups)
    for name, err, tol, ok in report.rows:
        flag = "ok" if ok else "FAIL"
        print(f"{name:30s} err={err:.3e} tol={tol:.0e} [{flag}]")
    if not report.passed:
        print("oracle comparison failed", file=sys.stderr)
        return 1
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="convsn",
        description="Structured-grid SN transport with convolution filters")
    sub = parser.add_subparsers(dest="command", required=True)

    duct = sub.add_parser("duct", help="solve the straight duct benchmark")
    duct.add_argument("--dx", type=float, default=0.8,
                      help="cell size in cm (0.8, 0.4, 0.2, 0.1 or 0.05)")
    _solver_flags(duct)
    duct.set_defaults(func=_cmd_duct)

    asm = sub.add_parser("assembly", help="solve the fuel-assembly eigenproblem")
    asm.add_argument("--xs-file", type=Path, default=None,
                     help="cross-section CSV (default: bundled synthetic set)")
    asm.add_argument("--pins", type=int, default=17,
                     help="lattice size per side (17 full, 4 reduced)")
    rods = asm.add_mutually_exclusive_group()
    rods.add_argument("--rods-inserted", dest="rods_inserted",
                      action="store_true", default=False)
    rods.add_argument("--rods-withdrawn", dest="rods_inserted",
                      action="store_false")
    _solver_flags(asm)
    asm.set_defaults(func=_cmd_assembly)

    filt = sub.add_parser("filters", help="filter table utilities")
    fsub = filt.add_subparsers(dest="subcommand", required=True)
    fdump = fsub.add_parser("dump", help="emit filter tables as CSV")
    fdump.add_argument("--order", choices=sorted(ORDER_NAMES), default="linear")
    fdump.add_argument("--dx", type=float, default=1.0)
    fdump.add_argument("--dy", type=float, default=1.0)
    fdump.add_argument("--out", type=Path, default=None)
    fdump.set_defaults(func=_cmd_filters_dump)

    quad = sub.add_parser("quadrature", help="ordinate set utilities")
    qsub = quad.add_subparsers(dest="subcommand", required=True)
    qdump = qsub.add_parser("dump", help="emit directions and weights as CSV")
    qdump.add_argument("--na", type=int, default=4)
    qdump.add_argument("--out", type=Path, default=None)
    qdump.set_defaults(func=_cmd_quadrature_dump)

    orc = sub.add_parser("oracle", help="brute-force verification harness")
    osub = orc.add_subparsers(dest="subcommand", required=True)
    ocmp = osub.add_parser("compare", help="solver vs dense-matrix oracle")
    ocmp.add_argument("--nx", type=int, default=6)
    ocmp.add_argument("--ny", type=int, default=6)
    ocmp.add_argument("--na", type=int, default=1)
    ocmp.add_argument("--groups", type=int, default=2)
    ocmp.set_defaults(func=_cmd_oracle_compare)

    return parser


def main(argv=None):
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)

    # allow a config file to supply defaults for the chosen subcommand
    if "--config" in argv:
        idx = argv.index("--config")
        try:
            cfg_path = argv[idx + 1]
        except IndexError:
            parser.error("--config needs a path")
        for key, val in _read_config(cfg_path).items():
            flag = "--" + key.replace("_", "-")
            if flag not in argv:
                argv.extend([flag, val])

    args = parser.parse_args(argv)
    try:
        status = args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return status


if __name__ == "__main__":
    sys.exit(main())
