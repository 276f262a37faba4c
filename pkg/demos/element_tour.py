"""A tour of the reference elements.

Builds trimmed serendipity elements on the 3-cube for a few orders,
prints the per-entity DOF layout that makes them cheaper than their
tensor-product counterparts, and dumps the exact basis of the smallest
H(curl) element.
"""

from trimfem import build_element, element_dump, entity_dof_counts
from trimfem.refelem import TENSOR_PRODUCT, TRIMMED_SERENDIPITY

CONFORMITY = {0: "H1", 1: "H(curl)", 2: "H(div)", 3: "L2"}

print("Trimmed serendipity elements on the reference cube")
print(f"{'space':>18} {'dim':>5}   per-entity (vertex/edge/face/interior)")
for r in (1, 2, 3):
    for k in range(4):
        e = build_element(TRIMMED_SERENDIPITY, 3, k, r)
        c = entity_dof_counts(e)
        label = f"S^-_{r} L^{k} ({CONFORMITY[k]})"
        print(f"{label:>18} {e.dim:>5}   {c[0]}/{c[1]}/{c[2]}/{c[3]}")

print()
print("Tensor-product counterparts at r = 2 for comparison:")
for k in range(4):
    e = build_element(TENSOR_PRODUCT, 3, k, 2)
    s = build_element(TRIMMED_SERENDIPITY, 3, k, 2)
    print(f"  k={k}: Q^-_2 dim {e.dim:>3}  vs  S^-_2 dim {s.dim:>3}")

print()
print("Exact basis of the lowest-order H(curl) trimmed element in 2D:")
print(element_dump(build_element(TRIMMED_SERENDIPITY, 2, 1, 1)))
