"""Command-line entry point: ``polysmooth <command> [options]``."""

import argparse
import csv
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import bench
from .mesh import Box, LShape, PolytopeMesh, generate_cvt_mesh

BENCHMARKS = ("patch", "cantilever", "torsion", "lshape")


def _levels(text):
    try:
        levels = tuple(int(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if any(n < 1 for n in levels):
        raise argparse.ArgumentTypeError("element counts must be positive")
    return levels


def _common(p):
    p.add_argument("--scheme", action="append", choices=("cs", "ls3n", "ls1"),
                   help="scheme to run (repeatable); default depends on the benchmark")
    p.add_argument("--levels", type=_levels,
                   help="comma-separated target element counts, e.g. 10,20,50,100")
    p.add_argument("--seed", type=int, default=0, help="mesh generator seed")
    p.add_argument("--out", type=Path, help="directory for CSV, plot data and VTK")
    p.add_argument("--mesh", type=Path, action="append",
                   help="mesh file (JSON) to use instead of generated meshes (repeatable)")
    p.add_argument("--vtk", action="store_true", help="write the finest-level field as VTK")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="polysmooth",
        description="Polygonal/polyhedral elasticity with one-point linear smoothing.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("integrate", help="one-point integration of monomials on demo shapes")
    p.add_argument("--out", type=Path)

    p = sub.add_parser("patch", help="linear or quadratic patch test")
    p.add_argument("--dim", type=int, choices=(2, 3), default=2)
    p.add_argument("--order", type=int, choices=(1, 2), default=1)
    _common(p)

    for name, text in (
        ("cantilever", "2D beam under parabolic end shear"),
        ("torsion", "3D prismatic bar under end torsion"),
        ("lshape", "3D L-shaped block strain energy"),
    ):
        _common(sub.add_parser(name, help=text))

    p = sub.add_parser("report", help="convergence rates from stored level CSV files")
    p.add_argument("files", nargs="*", type=Path, help="*_levels.csv files")
    p.add_argument("--out", type=Path, help="directory to scan and to write rates into")

    p = sub.add_parser("mesh", help="generate a CVT mesh file")
    p.add_argument("--domain", choices=("square", "cube", "lshape"), default="square")
    p.add_argument("--elements", type=int, default=50)
    p.add_argument("--lloyd", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", type=Path, required=True, help="JSON mesh file")
    p.add_argument("--vtk", type=Path, help="also write a legacy VTK file")
    return parser


def _family(args):
    if args.mesh:
        return [PolytopeMesh.load(p) for p in args.mesh]
    return args.levels


def _schemes(args, default):
    return tuple(args.scheme) if args.scheme else default


def _run_benchmark(args):
    family = _family(args)
    if args.command == "patch":
        dim2 = args.dim == 2
        kw = dict(schemes=_schemes(args, ("cs", "ls3n", "ls1") if dim2 else ("ls3n", "ls1")),
                  rng_seed=args.seed)
        if args.order == 1:
            report = bench.run_linear_patch(args.dim, family, **kw)
        else:
            report = bench.run_quadratic_patch(args.dim, family, **kw)
    elif args.command == "cantilever":
        report = bench.run_cantilever_2d(family, _schemes(args, ("cs", "ls3n", "ls1")),
                                         args.seed)
    elif args.command == "torsion":
        report = bench.run_torsion_3d(family, _schemes(args, ("ls3n", "ls1")), args.seed)
    else:
        report = bench.run_lshape_3d(family, _schemes(args, ("ls3n", "ls1")), args.seed)
    if "ls3n" in report.schemes and "ls1" in report.schemes:
        report.extra["points_ls3n_over_ls1"] = report.point_ratio("ls3n")
        report.extra["assembly_time_ls3n_over_ls1"] = round(report.time_ratio("ls3n"), 3)
    if args.out:
        report.write(args.out, vtk=args.vtk)
    print(report.summary())
    return 0


def _report(args):
    files = list(args.files)
    if args.out and not files:
        files = sorted(Path(args.out).glob("*_levels.csv"))
    if not files:
        print("no level files given", file=sys.stderr)
        return 2
    rows_out = []
    for path in files:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        name = path.name.replace("_levels.csv", "")
        for scheme in dict.fromkeys(r["scheme"] for r in rows):
            sel = [r for r in rows if r["scheme"] == scheme]
            h = np.array([float(r["h"]) for r in sel])
            for key in ("l2", "h1", "energy"):
                e = np.array([float(r[key]) for r in sel])
                if key == "energy":
                    print(f"{name:22} {scheme:5} energy  " + " ".join(f"{v:.6g}" for v in e))
                    continue
                if len(h) < 3 or not np.all(np.isfinite(e)) or np.any(e <= 0):
                    continue
                slope = bench.convergence_rate(h, e)
                rows_out.append((name, scheme, key, slope))
                print(f"{name:22} {scheme:5} {key:6} slope {slope:7.3f}")
    if args.out:
        Path(args.out).mkdir(parents=True, exist_ok=True)
        with open(Path(args.out) / "rates.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["benchmark", "scheme", "norm", "slope"])
            w.writerows(rows_out)
    return 0


def _mesh(args):
    domain = {
        "square": Box((0.0, 0.0), (1.0, 1.0)),
        "cube": Box((0.0, 0.0, 0.0), (1.0, 1.0, 1.0)),
        "lshape": LShape(bench.LSHAPE_A, bench.LSHAPE_THICKNESS),
    }[args.domain]
    mesh = generate_cvt_mesh(domain, args.elements, args.lloyd, rng_seed=args.seed)
    mesh.save(args.output)
    if args.vtk:
        mesh.write_vtk(args.vtk)
    print(f"{mesh.n_elements} elements, {mesh.n_nodes} nodes -> {args.output}")
    return 0


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "integrate":
        rows = bench.run_integration_demo(out=args.out)
        print(bench.format_table(rows))
        return 0
    if args.command == "report":
        return _report(args)
    if args.command == "mesh":
        return _mesh(args)
    with warnings.catch_warnings():
        warnings.simplefilter("default")
        return _run_benchmark(args)


if __name__ == "__main__":
    sys.exit(main())
