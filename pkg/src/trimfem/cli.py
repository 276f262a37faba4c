"""Command-line harness for the element studies.

Subcommands mirror the four experiments plus DOF and element reports:

    trimfem project       --dim 2 --element SminusCurl --order 2 --levels 8,16,32
    trimfem poisson       --dim 2 --element S --order 2 --levels 8,16,32,64
    trimfem mixed-poisson --dim 2 --element SminusDiv --order 2 --levels 8,16,32
    trimfem maxwell-eig   --element SminusCurl --order 2 --levels 4,8
    trimfem dofs          --dim 3 --form-degree 1 --orders 1,2,3 --divisions 16
    trimfem element-dump  --dim 3 --element SminusCurl --order 2

Convergence experiments print a rate table and optionally write CSV files
with the columns h,Dofs,Error,Time,rate (--out).  Exit status is nonzero
on failure, with a message naming the failing stage.
"""

import argparse
import sys

from .experiments import (
    format_maxwell,
    format_rows,
    report_dofs,
    run_maxwell_eig,
    run_mixed_poisson,
    run_primal_poisson,
    run_projection,
    write_csv,
)
from .refelem import (
    _NAME_TABLE,
    element_by_name,
    element_dump,
    element_names,
)

_H1 = ("S", "Lagrange")
_HCURL = ("SminusCurl", "RTCE", "NCE")
_HDIV = ("SminusDiv", "RTCF", "NCF")


def _levels(text):
    return [int(tok) for tok in text.split(",") if tok]


def _orders(text):
    return [int(tok) for tok in text.split(",") if tok]


def _family_of(name, allowed):
    if name not in _NAME_TABLE:
        raise ValueError(
            f"unknown element {name!r}; valid names: {', '.join(element_names())}"
        )
    if name not in allowed:
        raise ValueError(
            f"element {name!r} not usable here; choose one of {', '.join(allowed)}"
        )
    return _NAME_TABLE[name][0]


def _add_common(p, with_dim=True, tol_default=1e-12):
    if with_dim:
        p.add_argument("--dim", type=int, default=2, choices=(2, 3))
    p.add_argument("--element", required=True, help="usage name, e.g. SminusCurl")
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--tol", type=float, default=tol_default)
    p.add_argument("--out", help="CSV output path")


def make_parser():
    parser = argparse.ArgumentParser(
        prog="trimfem",
        description="trimmed serendipity vs tensor-product element studies",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("project", help="L2 projection onto an H(curl) space")
    _add_common(p)
    p.add_argument("--levels", type=_levels, default=[4, 8, 16, 32])

    p = sub.add_parser("poisson", help="primal Poisson with Dirichlet BCs")
    _add_common(p)
    p.add_argument("--levels", type=_levels, default=[4, 8, 16, 32])
    p.add_argument("--bc-mode", choices=("eliminate", "diag1"), default="diag1")

    p = sub.add_parser("mixed-poisson", help="mixed Poisson saddle-point solve")
    _add_common(p)
    p.add_argument("--levels", type=_levels, default=[4, 8, 16, 32])

    p = sub.add_parser("maxwell-eig", help="cavity resonator eigenvalues (3D)")
    _add_common(p, with_dim=False, tol_default=1e-7)
    p.add_argument("--levels", type=_levels, default=[4, 8])
    p.add_argument("--bc-mode", choices=("eliminate", "diag1"), default="eliminate")
    p.add_argument("--target", type=float, default=3.0)
    p.add_argument("--nev", type=int, default=15)

    p = sub.add_parser("dofs", help="global DOF comparison of both families")
    p.add_argument("--dim", type=int, default=3, choices=(2, 3))
    p.add_argument("--form-degree", type=int, default=1)
    p.add_argument("--orders", type=_orders, default=[1, 2, 3, 4, 5, 6])
    p.add_argument("--divisions", type=int, default=16)
    p.add_argument("--out", help="CSV output path")

    p = sub.add_parser("element-dump", help="print a reference element report")
    p.add_argument("--dim", type=int, default=3, choices=(2, 3))
    p.add_argument("--element", required=True)
    p.add_argument("--order", type=int, default=2)
    p.add_argument("--out", help="text output path")
    return parser


def _run(args):
    if args.command == "project":
        family = _family_of(args.element, _HCURL)
        rows = run_projection(args.dim, family, args.order, args.levels, tol=args.tol)
        print(format_rows(rows))
        if args.out:
            write_csv(rows, args.out)
        return
    if args.command == "poisson":
        family = _family_of(args.element, _H1)
        rows = run_primal_poisson(args.dim, family, args.order, args.levels,
                                  bc_mode=args.bc_mode, tol=args.tol)
        print(format_rows(rows))
        if args.out:
            write_csv(rows, args.out)
        return
    if args.command == "mixed-poisson":
        family = _family_of(args.element, _HDIV)
        rows = run_mixed_poisson(args.dim, family, args.order, args.levels, tol=args.tol)
        print(format_rows(rows))
        if args.out:
            write_csv(rows, args.out)
        return
    if args.command == "maxwell-eig":
        family = _family_of(args.element, ("SminusCurl", "NCE"))
        report = run_maxwell_eig(family, args.order, args.levels,
                                 target=args.target, nev=args.nev, tol=args.tol,
                                 bc_mode=args.bc_mode)
        print(format_maxwell(report))
        if args.out:
            _write_maxwell_csvs(report, args.out)
        return
    if args.command == "dofs":
        rows = report_dofs(args.dim, args.form_degree, args.orders, args.divisions)
        print(f"{'r':>4} {'S^- DOFs':>12} {'Q^- DOFs':>12}")
        for row in rows:
            print(f"{row['r']:>4} {row['trimmed']:>12} {row['tensor']:>12}")
        if args.out:
            import csv as _csv

            with open(args.out, "w", newline="") as fh:
                w = _csv.writer(fh)
                w.writerow(["r", "trimmed", "tensor"])
                for row in rows:
                    w.writerow([row["r"], row["trimmed"], row["tensor"]])
        return
    if args.command == "element-dump":
        element = element_by_name(args.element, args.dim, args.order)
        text = element_dump(element)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text + "\n")
        else:
            print(text)
        return
    raise ValueError(f"unhandled command {args.command}")


def _write_maxwell_csvs(report, prefix):
    """One CSV per tracked eigenvalue: h, Dofs, Error=|lambda_h - lambda|."""
    from .experiments import ExperimentRow, _dominant, write_csv as _write

    for e in report.tracked():
        rows = []
        for i, lv in enumerate(report.levels):
            if e not in lv.groups:
                continue
            rows.append(ExperimentRow(
                h=1.0 / lv.N, dofs=lv.dofs,
                error=abs(_dominant(lv.groups[e]) - e),
                time=lv.assembly_time + lv.solve_time,
                rate=report.rates[e][i],
                assembly_time=lv.assembly_time, solve_time=lv.solve_time,
            ))
        _write(rows, f"{prefix}_eigenvalue{e}.csv")


def main(argv=None):
    args = make_parser().parse_args(argv)
    try:
        _run(args)
    except Exception as err:  # noqa: BLE001 - report the failing stage
        print(f"trimfem {args.command}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
