"""Global DOF growth of the two families on a 16^3 mesh.

The families coincide at order 1.  From order 2 on, the trimmed
serendipity spaces are strictly smaller for every conformity class, with
a gap that widens with the order.
"""

from trimfem.experiments import report_dofs

CONFORMITY = {0: "H1", 1: "H(curl)", 2: "H(div)"}

for k in (0, 1, 2):
    print(f"\n{CONFORMITY[k]} spaces on the 16^3 mesh")
    print(f"{'r':>3} {'trimmed':>12} {'tensor':>12} {'ratio':>8}")
    for row in report_dofs(3, k, [1, 2, 3, 4, 5, 6], 16):
        ratio = row["trimmed"] / row["tensor"]
        print(f"{row['r']:>3} {row['trimmed']:>12} {row['tensor']:>12} {ratio:>8.3f}")
