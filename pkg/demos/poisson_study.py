"""Primal Poisson convergence with H1 elements, 2D and 3D.

Solves -Laplace(u) = f with homogeneous Dirichlet conditions and the
manufactured solution u = sin(pi x) sin(pi y) [sin(pi z)].  Scalar
serendipity ("S") and tensor-product Lagrange elements both converge at
rate r + 1 in L2; the interesting part is the DOF column.
"""

from trimfem.experiments import format_rows, run_primal_poisson

for r in (2, 3):
    for family, label in (("S", "serendipity"), ("Q", "Lagrange")):
        rows = run_primal_poisson(2, family, r, [8, 16, 32, 64])
        print(f"\nprimal Poisson, 2D, {label}, order {r} (expect rate {r + 1})")
        print(format_rows(rows))

for family, label in (("S", "serendipity"), ("Q", "Lagrange")):
    rows = run_primal_poisson(3, family, 2, [2, 4, 8])
    print(f"\nprimal Poisson, 3D, {label}, order 2")
    print(format_rows(rows))
