"""Experiment harness: projection, Poisson, mixed Poisson, cavity resonator.

Each study runs over a list of mesh refinements N (h = 1/N on [0,1]^n),
records global DOF counts, L2 errors and timings, and computes
convergence rates between consecutive levels.  Timings follow a
warm-up-plus-minimum-of-three protocol on the solve stage; assembly is
timed separately and the reported Time column is their sum.
"""

import csv
import math
import time
from dataclasses import dataclass

import numpy as np

from .assemble import (
    apply_dirichlet,
    assemble_bilinear,
    assemble_load,
    assemble_mixed_poisson,
    l2_error,
)
from .mesh import boundary_dofs, build_box_mesh, global_numbering
from .refelem import (
    TENSOR_PRODUCT,
    TRIMMED_SERENDIPITY,
    build_element,
    element_by_name,
)
from .solve import eig_shift_invert, solve_saddle, solve_spd

_FAMILY_ALIASES = {
    TRIMMED_SERENDIPITY: TRIMMED_SERENDIPITY,
    TENSOR_PRODUCT: TENSOR_PRODUCT,
    "S": TRIMMED_SERENDIPITY,
    "S-": TRIMMED_SERENDIPITY,
    "Q": TENSOR_PRODUCT,
    "Q-": TENSOR_PRODUCT,
}


def _family(family):
    try:
        return _FAMILY_ALIASES[family]
    except KeyError:
        raise ValueError(
            f"unknown family {family!r}; use TrimmedSerendipity/TensorProduct (S/Q)"
        )


@dataclass
class ExperimentRow:
    """One refinement level of a convergence study."""

    h: float
    dofs: int
    error: float
    time: float
    rate: float | None = None
    assembly_time: float = 0.0
    solve_time: float = 0.0


def convergence_rate(err_coarse, err_fine, h_coarse, h_fine):
    """log(e_c / e_f) / log(h_c / h_f); NaN when a level is exactly zero."""
    if h_coarse <= h_fine:
        raise ValueError("h_coarse must exceed h_fine")
    if err_coarse <= 0.0 or err_fine <= 0.0:
        return float("nan")
    return math.log(err_coarse / err_fine) / math.log(h_coarse / h_fine)


def _attach_rates(rows):
    for prev, cur in zip(rows, rows[1:]):
        cur.rate = convergence_rate(prev.error, cur.error, prev.h, cur.h)
    return rows


def _timed_solve(solver, runs=3):
    """Warm-up once, then return (result, min wall time over `runs`)."""
    result = solver()
    best = math.inf
    for _ in range(runs):
        t0 = time.perf_counter()
        result = solver()
        best = min(best, time.perf_counter() - t0)
    return result, best


def _sin_product(x, n):
    out = np.sin(np.pi * x[..., 0])
    for a in range(1, n):
        out = out * np.sin(np.pi * x[..., a])
    return out


def _grad_sin_product(x, n):
    comps = []
    for a in range(n):
        g = np.pi * np.cos(np.pi * x[..., a])
        for b in range(n):
            if b != a:
                g = g * np.sin(np.pi * x[..., b])
        comps.append(g)
    return np.stack(comps, axis=-1)


def run_projection(n, family, r, N_list, tol=1e-12):
    """L2-project g = grad(sin...sin) onto the H(curl) space of order r."""
    family = _family(family)
    name = "SminusCurl" if family == TRIMMED_SERENDIPITY else ("RTCE" if n == 2 else "NCE")
    element = element_by_name(name, n, r)
    rows = []
    for N in N_list:
        mesh = build_box_mesh(n, N)
        dofmap = global_numbering(mesh, element)
        t0 = time.perf_counter()
        system = assemble_bilinear(mesh, dofmap, dofmap, "Mass")
        system.rhs = assemble_load(mesh, dofmap, lambda x: _grad_sin_product(x, n))
        t_asm = time.perf_counter() - t0
        coeff, t_solve = _timed_solve(lambda: solve_spd(system, tol=tol))
        err = l2_error(mesh, dofmap, coeff, lambda x: _grad_sin_product(x, n))
        rows.append(ExperimentRow(1.0 / N, dofmap.total, err, t_asm + t_solve,
                                  assembly_time=t_asm, solve_time=t_solve))
    return _attach_rates(rows)


def run_primal_poisson(n, family, r, N_list, bc_mode="diag1", tol=1e-12):
    """Homogeneous Dirichlet Poisson problem with the manufactured solution
    u = sin(pi x) sin(pi y) [sin(pi z)]."""
    family = _family(family)
    name = "S" if family == TRIMMED_SERENDIPITY else "Lagrange"
    element = element_by_name(name, n, r)
    rows = []
    for N in N_list:
        mesh = build_box_mesh(n, N)
        dofmap = global_numbering(mesh, element)
        t0 = time.perf_counter()
        system = assemble_bilinear(mesh, dofmap, dofmap, "GradGrad")
        system.rhs = assemble_load(
            mesh, dofmap, lambda x: n * np.pi**2 * _sin_product(x, n)
        )
        bdofs = boundary_dofs(dofmap, "full-trace")
        system = apply_dirichlet(system, bdofs, bc_mode)
        t_asm = time.perf_counter() - t0
        coeff, t_solve = _timed_solve(lambda: solve_spd(system, tol=tol))
        err = l2_error(mesh, dofmap, coeff, lambda x: _sin_product(x, n))
        rows.append(ExperimentRow(1.0 / N, dofmap.total, err, t_asm + t_solve,
                                  assembly_time=t_asm, solve_time=t_solve))
    return _attach_rates(rows)


def run_mixed_poisson(n, family, r, N_list, tol=1e-12):
    """Mixed Poisson with the stable (n-1)-form / n-form pairing of order r.

    The reported error is the L2 error of the scalar solution u.
    """
    family = _family(family)
    hname = "SminusDiv" if family == TRIMMED_SERENDIPITY else ("RTCF" if n == 2 else "NCF")
    lname = "DPC" if family == TRIMMED_SERENDIPITY else "DQ"
    hdiv_elem = element_by_name(hname, n, r)
    l2_elem = element_by_name(lname, n, r - 1)
    rows = []
    for N in N_list:
        mesh = build_box_mesh(n, N)
        hdiv_map = global_numbering(mesh, hdiv_elem)
        l2_map = global_numbering(mesh, l2_elem)
        t0 = time.perf_counter()
        system = assemble_mixed_poisson(
            mesh, hdiv_map, l2_map, lambda x: n * np.pi**2 * _sin_product(x, n)
        )
        t_asm = time.perf_counter() - t0
        x, t_solve = _timed_solve(lambda: solve_saddle(system, tol=tol))
        u = x[hdiv_map.total:]
        err = l2_error(mesh, l2_map, u, lambda x: _sin_product(x, n))
        total = hdiv_map.total + l2_map.total
        rows.append(ExperimentRow(1.0 / N, total, err, t_asm + t_solve,
                                  assembly_time=t_asm, solve_time=t_solve))
    return _attach_rates(rows)


# ---------------------------------------------------------------------------
# cavity resonator
# ---------------------------------------------------------------------------

def _subclusters(values, tol=5e-7):
    """Split sorted values into clusters of absolute width tol."""
    clusters = []
    start = 0
    for i in range(1, len(values) + 1):
        if i == len(values) or values[i] - values[i - 1] > tol:
            part = values[start:i]
            clusters.append((float(part.mean()), int(len(part))))
            start = i
    return clusters


def _dominant(clusters):
    """The cluster carrying the most eigenvalues (ties: the smallest)."""
    return max(clusters, key=lambda vc: (vc[1], -vc[0]))[0]


def exact_cavity_eigenvalues(limit=20):
    """Exact normalized eigenvalues m1^2+m2^2+m3^2 (at most one m_i zero)."""
    vals = set()
    m_max = int(math.isqrt(limit)) + 1
    for m1 in range(m_max + 1):
        for m2 in range(m_max + 1):
            for m3 in range(m_max + 1):
                if (m1 == 0) + (m2 == 0) + (m3 == 0) > 1:
                    continue
                s = m1 * m1 + m2 * m2 + m3 * m3
                if 0 < s <= limit:
                    vals.add(s)
    return sorted(vals)


@dataclass
class MaxwellLevel:
    """Eigenvalue groups found on one mesh level."""

    N: int
    dofs: int
    groups: dict          # exact eigenvalue -> [(value, count), ...] clusters
    assembly_time: float
    solve_time: float
    time_per_iteration: float
    residual: float


@dataclass
class MaxwellReport:
    family: str
    r: int
    levels: list          # list of MaxwellLevel
    rates: dict           # exact eigenvalue -> list of rate-or-None per level

    def tracked(self):
        return sorted({e for lv in self.levels for e in lv.groups})


def run_maxwell_eig(family, r, N_list, target=3.0, nev=15, tol=1e-7,
                    bc_mode="eliminate", dense_cutoff=4000):
    """Maxwell cavity eigenvalues on [0,1]^3 with H(curl) elements.

    Eigenvalues are reported normalized by pi^2 and matched to the exact
    spectrum {2, 3, 5, 6, 8, ...}.  Elimination boundary conditions are
    the default, so the diag-one spurious unit eigenvalues never appear;
    gradient-kernel zeros and (in diag1 mode) unit eigenvalues are dropped
    from the report.
    """
    family = _family(family)
    pi2 = np.pi**2
    element = build_element(family, 3, 1, r, mapping="covariant")
    levels = []
    for N in N_list:
        mesh = build_box_mesh(3, N)
        dofmap = global_numbering(mesh, element)
        t0 = time.perf_counter()
        A = assemble_bilinear(mesh, dofmap, dofmap, "CurlCurl")
        M = assemble_bilinear(mesh, dofmap, dofmap, "Mass")
        bdofs = boundary_dofs(dofmap, "tangential-trace")
        A = apply_dirichlet(A, bdofs, bc_mode)
        M = apply_dirichlet(M, bdofs, bc_mode)
        t_asm = time.perf_counter() - t0

        # the curl-curl kernel is the gradient image of the interior scalar
        # space; over-request by its dimension on the dense path so the
        # zeros cannot crowd out physical pairs (the Cayley transform of
        # the sparse path already ranks them last)
        if A.matrix.shape[0] <= dense_cutoff:
            scalar = build_element(family, 3, 0, r)
            smap = global_numbering(mesh, scalar)
            kernel_dim = smap.total - len(boundary_dofs(smap, "full-trace"))
            margin = min(nev + kernel_dim, A.matrix.shape[0])
        else:
            margin = nev

        def solve_once():
            return eig_shift_invert(A.matrix, M.matrix, target=target * pi2,
                                    nev=margin, tol=tol, dense_cutoff=dense_cutoff)

        result, t_solve = _timed_solve(solve_once)
        lam = result.eigenvalues / pi2
        keep = lam > 0.5
        if bc_mode == "diag1":
            keep &= np.abs(lam * pi2 - 1.0) > 1e-6
        lam = lam[keep]
        order = np.argsort(np.abs(lam - target), kind="stable")[:nev]
        lam = np.sort(lam[order])

        groups = {}
        for e in exact_cavity_eigenvalues():
            members = np.sort(lam[np.abs(lam - e) < 0.5])
            if len(members):
                groups[e] = _subclusters(members)
        iters = result.op_count if result.op_count else 1
        levels.append(MaxwellLevel(
            N=N, dofs=dofmap.total, groups=groups,
            assembly_time=t_asm, solve_time=t_solve,
            time_per_iteration=t_solve / iters,
            residual=float(result.residuals.max()),
        ))

    rates = {}
    for e in sorted({e for lv in levels for e in lv.groups}):
        rr = [None]
        for prev, cur in zip(levels, levels[1:]):
            if e in prev.groups and e in cur.groups:
                d_prev = abs(_dominant(prev.groups[e]) - e)
                d_cur = abs(_dominant(cur.groups[e]) - e)
                rr.append(convergence_rate(d_prev, d_cur, 1.0 / prev.N, 1.0 / cur.N))
            else:
                rr.append(None)
        rates[e] = rr
    return MaxwellReport(family=family, r=r, levels=levels, rates=rates)


def report_dofs(n, k, r_list, N):
    """Global DOF totals of both families on an N^n mesh, per order."""
    mesh = build_box_mesh(n, N)
    rows = []
    for r in r_list:
        s_total = global_numbering(mesh, build_element(TRIMMED_SERENDIPITY, n, k, r)).total
        q_total = global_numbering(mesh, build_element(TENSOR_PRODUCT, n, k, r)).total
        rows.append({"r": r, "trimmed": s_total, "tensor": q_total})
    return rows


# ---------------------------------------------------------------------------
# CSV and text output
# ---------------------------------------------------------------------------

CSV_HEADER = ["h", "Dofs", "Error", "Time", "rate"]


def write_csv(rows, path):
    """Emit rows as h,Dofs,Error,Time,rate (rate empty on the first row)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for row in rows:
            writer.writerow([
                repr(row.h), row.dofs, repr(row.error), repr(row.time),
                "" if row.rate is None else repr(row.rate),
            ])


def read_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        for rec in reader:
            rows.append(ExperimentRow(
                h=float(rec[0]), dofs=int(rec[1]), error=float(rec[2]),
                time=float(rec[3]), rate=None if rec[4] == "" else float(rec[4]),
            ))
    return rows


def format_rows(rows):
    lines = [f"{'h':>12} {'Dofs':>10} {'Error':>14} {'Time':>10} {'rate':>6} "
             f"{'assemble':>10} {'solve':>10}"]
    for row in rows:
        rate = "" if row.rate is None else f"{row.rate:6.2f}"
        lines.append(
            f"{row.h:12.6f} {row.dofs:10d} {row.error:14.6e} {row.time:10.4f} "
            f"{rate:>6} {row.assembly_time:10.4f} {row.solve_time:10.4f}"
        )
    return "\n".join(lines)


def format_maxwell(report: MaxwellReport):
    fam = "S^-" if report.family == TRIMMED_SERENDIPITY else "Q^-"
    lines = [f"{fam}_{report.r} H(curl) cavity eigenvalues (normalized by pi^2)"]
    lines.append(f"{'Actual (Count)':>16}" + "".join(
        f"{'N = ' + str(lv.N):>22}" for lv in report.levels
    ))
    for e in report.tracked():
        nrows = max(len(lv.groups.get(e, ())) for lv in report.levels)
        for j in range(nrows):
            cells = []
            for i, lv in enumerate(report.levels):
                clusters = lv.groups.get(e, ())
                if j < len(clusters):
                    val, _count = clusters[j]
                    txt = f"{val:.6f}"
                    if j == 0 and report.rates[e][i] is not None:
                        txt += f" ({report.rates[e][i]:.2f})"
                    cells.append(f"{txt:>22}")
                else:
                    cells.append(f"{'-':>22}")
            counts = [lv.groups[e][j][1] for lv in report.levels
                      if j < len(lv.groups.get(e, ()))]
            label = f"{e} ({max(counts)})" if j == 0 else f"{e} ({counts[0]})"
            lines.append(f"{label:>16}" + "".join(cells))
    lines.append(f"{'DOF':>16}" + "".join(f"{lv.dofs:>22d}" for lv in report.levels))
    lines.append(f"{'time/iter':>16}" + "".join(
        f"{lv.time_per_iteration:>22.6f}" for lv in report.levels
    ))
    lines.append(f"{'solve time':>16}" + "".join(
        f"{lv.solve_time:>22.4f}" for lv in report.levels
    ))
    return "\n".join(lines)
