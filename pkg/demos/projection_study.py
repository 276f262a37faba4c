"""L2 projection convergence of the H(curl) families in 2D.

Projects the gradient field of sin(pi x) sin(pi y) onto the trimmed
serendipity and tensor-product H(curl) spaces on a sequence of meshes.
Both families converge at rate r; the trimmed family needs fewer DOFs
at every level.  CSV files with h,Dofs,Error,Time,rate land next to
this script when --write is passed.
"""

import sys

from trimfem.experiments import format_rows, run_projection, write_csv

LEVELS = [8, 16, 32, 64]

for r in (2, 3):
    for family, label in (("S", "trimmed"), ("Q", "tensor")):
        rows = run_projection(2, family, r, LEVELS)
        print(f"\nprojection, 2D, {label} family, order {r}")
        print(format_rows(rows))
        if "--write" in sys.argv:
            write_csv(rows, f"projection_2d_{label}_r{r}.csv")
