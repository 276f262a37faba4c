"""Sparse assembly of the variational operators on uniform box meshes.

Every cell maps to the reference cube by translation and the diagonal
Jacobian J = diag(h_a / 2), so the per-cell dense blocks are identical and
are computed once from cached reference tabulations; assembly is a single
scatter.  Form-degree-specific push-forward scalings keep the assembled
spaces H1 / H(curl) / H(div) / L2 conforming, with 1-forms mapped
covariantly and (n-1)-forms by the contravariant (Piola) map.
"""

import numpy as np
import scipy.sparse as sp

from .mesh import BoxMesh, GlobalDofMap
from .poly import gauss_rule
from .refelem import Element, tabulate

_FORMS = ("Mass", "GradGrad", "CurlCurl", "DivCoupling")
_FORM_ALIASES = {"DivDiv-coupling": "DivCoupling"}


class PushForward:
    """Reference-to-physical scalings for one element on cells of size h.

    The Jacobian is diag(h_a / 2).  Values are returned in vector-proxy
    components: identity for 0-forms, J^{-1} for 1-forms (covariant),
    J/det(J) with the (dy^dz, dz^dx, dx^dy) orientation for (n-1)-forms
    (contravariant), and 1/det(J) for n-forms.
    """

    def __init__(self, element: Element, h):
        self.element = element
        self.h = np.asarray(h, dtype=float)
        if self.h.shape != (element.n,):
            raise ValueError("h must have one entry per axis")
        self.jac = self.h / 2.0
        self.det = float(np.prod(self.jac))

    def values(self, vals):
        """Physical proxy components from reference values (..., ncomp)."""
        e = self.element
        if e.mapping == "h1":
            return vals[..., 0]
        if e.mapping == "l2":
            return vals[..., 0] / self.det
        if e.mapping == "covariant":
            return vals / self.jac
        # contravariant
        if e.n == 2:
            # (p dx + q dy) -> flux proxy (q, -p), then Piola scaling
            proxy = np.stack([vals[..., 1], -vals[..., 0]], axis=-1)
        else:
            # (dy^dz, dx^dz, dx^dy) -> (dy^dz, dz^dx, dx^dy)
            proxy = np.stack([vals[..., 0], -vals[..., 1], vals[..., 2]], axis=-1)
        return proxy * self.jac / self.det

    def gradient(self, tab):
        """Physical gradient of a 0-form element, shape (P, nb, n)."""
        e = self.element
        if e.mapping != "h1":
            raise ValueError("gradients apply to 0-form elements")
        n = e.n
        parts = [
            tab[tuple(1 if a == ax else 0 for a in range(n))][..., 0] / self.jac[ax]
            for ax in range(n)
        ]
        return np.stack(parts, axis=-1)

    def curl(self, tab):
        """Physical curl of a covariant 1-form element in 3D, (P, nb, 3)."""
        e = self.element
        if e.mapping != "covariant" or e.n != 3:
            raise ValueError("curl applies to H(curl) elements in 3D")
        d = {ax: tab[tuple(1 if a == ax else 0 for a in range(3))] for ax in range(3)}
        cx = d[1][..., 2] - d[2][..., 1]
        cy = d[2][..., 0] - d[0][..., 2]
        cz = d[0][..., 1] - d[1][..., 0]
        ref = np.stack([cx, cy, cz], axis=-1)
        return ref * self.jac / self.det

    def divergence(self, tab):
        """Physical divergence of a contravariant element, shape (P, nb)."""
        e = self.element
        if e.mapping != "contravariant":
            raise ValueError("divergence applies to H(div) elements")
        n = e.n
        d = {ax: tab[tuple(1 if a == ax else 0 for a in range(n))] for ax in range(n)}
        if n == 2:
            ref = d[0][..., 1] - d[1][..., 0]
        else:
            ref = d[0][..., 0] - d[1][..., 1] + d[2][..., 2]
        return ref / self.det


class SparseSystem:
    """An assembled sparse operator with optional right-hand side and BCs.

    After `eliminate`-mode boundary conditions the stored matrix is the
    reduced operator on free DOFs; `expand` scatters a reduced solution
    back to the full DOF vector.
    """

    def __init__(self, matrix, rhs=None, full_size=None, free=None,
                 bc_mode=None, constrained=None):
        self.matrix = matrix
        self.rhs = rhs
        self.full_size = matrix.shape[0] if full_size is None else full_size
        self.free = free
        self.bc_mode = bc_mode
        self.constrained = np.empty(0, dtype=np.int64) if constrained is None else constrained

    def expand(self, x):
        if self.free is None:
            return x
        out = np.zeros(self.full_size)
        out[self.free] = x
        return out


def _quad_degree(*elements):
    return max(e.r for e in elements) + 2


def _local_matrix(form, elem_test, elem_trial, h):
    form = _FORM_ALIASES.get(form, form)
    n = elem_test.n
    rule = gauss_rule(n, _quad_degree(elem_test, elem_trial))
    w = rule.weights
    pf_t = PushForward(elem_test, h)
    pf_u = PushForward(elem_trial, h)
    scale = w * pf_t.det

    if form == "Mass":
        if elem_test.k != elem_trial.k or elem_test.mapping != elem_trial.mapping:
            raise ValueError("mass form needs matching form degrees")
        vt = pf_t.values(tabulate(elem_test, rule.points)[(0,) * n])
        vu = pf_u.values(tabulate(elem_trial, rule.points)[(0,) * n])
        if vt.ndim == 2:  # scalar-valued
            return np.einsum("q,qi,qj->ij", scale, vt, vu)
        return np.einsum("q,qic,qjc->ij", scale, vt, vu)
    if form == "GradGrad":
        if elem_test.k != 0 or elem_trial.k != 0:
            raise ValueError("GradGrad applies to 0-form elements")
        gt = pf_t.gradient(tabulate(elem_test, rule.points, 1))
        gu = pf_u.gradient(tabulate(elem_trial, rule.points, 1))
        return np.einsum("q,qic,qjc->ij", scale, gt, gu)
    if form == "CurlCurl":
        if elem_test.n != 3 or elem_test.k != 1 or elem_trial.k != 1:
            raise ValueError("CurlCurl applies to 1-form elements in 3D")
        ct = pf_t.curl(tabulate(elem_test, rule.points, 1))
        cu = pf_u.curl(tabulate(elem_trial, rule.points, 1))
        return np.einsum("q,qic,qjc->ij", scale, ct, cu)
    if form == "DivCoupling":
        if elem_test.k != elem_test.n or elem_trial.k != elem_test.n - 1:
            raise ValueError(
                "DivCoupling pairs an n-form test space with an (n-1)-form trial space"
            )
        vt = pf_t.values(tabulate(elem_test, rule.points)[(0,) * n])
        du = pf_u.divergence(tabulate(elem_trial, rule.points, 1))
        return np.einsum("q,qi,qj->ij", scale, vt, du)
    raise ValueError(f"unknown form {form!r}; use one of {_FORMS}")


def _scatter(map_test: GlobalDofMap, map_trial: GlobalDofMap, local):
    nc = map_test.mesh.num_cells
    a, b = local.shape
    rows = np.broadcast_to(map_test.cell_dofs[:, :, None], (nc, a, b))
    cols = np.broadcast_to(map_trial.cell_dofs[:, None, :], (nc, a, b))
    signs = (map_test.signs[:, :, None] * map_trial.signs[:, None, :]).astype(float)
    vals = local[None, :, :] * signs
    mat = sp.coo_matrix(
        (vals.ravel(), (rows.ravel(), cols.ravel())),
        shape=(map_test.total, map_trial.total),
    ).tocsr()
    mat.sum_duplicates()
    mat.sort_indices()
    return mat


def assemble_bilinear(mesh: BoxMesh, map_test: GlobalDofMap,
                      map_trial: GlobalDofMap, form: str) -> SparseSystem:
    """Assemble a global sparse operator from identical per-cell blocks."""
    if map_test.mesh is not mesh or map_trial.mesh is not mesh:
        raise ValueError("DOF maps must belong to the given mesh")
    local = _local_matrix(form, map_test.element, map_trial.element, mesh.h)
    return SparseSystem(_scatter(map_test, map_trial, local))


def physical_points(mesh: BoxMesh, rule):
    """Quadrature points mapped to every cell, shape (ncells, P, n)."""
    origins = mesh.cell_lattice * np.asarray(mesh.h)
    ref01 = (rule.points + 1.0) / 2.0 * np.asarray(mesh.h)
    return origins[:, None, :] + ref01[None, :, :]


def assemble_load(mesh: BoxMesh, dofmap: GlobalDofMap, f) -> np.ndarray:
    """Right-hand side vector for the functional v -> int f . v.

    `f` is evaluated pointwise at the physical quadrature nodes; it must
    accept an (..., n) array and return scalar values (scalar elements)
    or proxy-vector components (..., n).
    """
    element = dofmap.element
    n = element.n
    rule = gauss_rule(n, element.r + 2)
    pf = PushForward(element, mesh.h)
    vals = pf.values(tabulate(element, rule.points)[(0,) * n])
    pts = physical_points(mesh, rule)
    fvals = np.asarray(f(pts))
    scale = rule.weights * pf.det
    if vals.ndim == 2:
        contrib = np.einsum("q,cq,qi->ci", scale, fvals, vals)
    else:
        contrib = np.einsum("q,cqd,qid->ci", scale, fvals, vals)
    contrib = contrib * dofmap.signs
    b = np.zeros(dofmap.total)
    np.add.at(b, dofmap.cell_dofs.ravel(), contrib.ravel())
    return b


def assemble_mixed_poisson(mesh: BoxMesh, hdiv_map: GlobalDofMap,
                           l2_map: GlobalDofMap, f) -> SparseSystem:
    """Saddle-point system [[M, B^T], [B, 0]] with rhs (0, -int f v).

    The H(div) space must be the (n-1)-form element of order r and the L2
    space the n-form element of the same family order r (usage order r-1),
    the stable pairing: SminusDiv_r with DPC_{r-1}, RTCF/NCF_r with DQ_{r-1}.
    """
    eh, el = hdiv_map.element, l2_map.element
    if eh.k != mesh.n - 1 or eh.mapping != "contravariant":
        raise ValueError("mixed Poisson needs an H(div) element for the flux")
    if el.k != mesh.n or el.mapping != "l2":
        raise ValueError("mixed Poisson needs an L2 element for the potential")
    if eh.family != el.family or eh.r != el.r:
        raise ValueError(
            "order-mismatched pairing: SminusDiv of order r pairs with DPC of "
            "order r-1 (and RTCF/NCF with DQ of order r-1); "
            f"got orders {eh.r} and {el.r} (usage order {el.r - 1})"
        )
    M = assemble_bilinear(mesh, hdiv_map, hdiv_map, "Mass").matrix
    B = assemble_bilinear(mesh, l2_map, hdiv_map, "DivCoupling").matrix
    mat = sp.bmat([[M, B.T], [B, None]], format="csr")
    rhs = np.concatenate([np.zeros(hdiv_map.total), -assemble_load(mesh, l2_map, f)])
    return SparseSystem(mat, rhs)


def apply_dirichlet(system: SparseSystem, dofs, mode="eliminate") -> SparseSystem:
    """Homogeneous essential boundary conditions.

    `eliminate` removes constrained rows/columns and solves the reduced
    system; `diag1` zeroes them and puts a unit value on the diagonal,
    which reproduces the spurious unit eigenvalues reported by solvers
    that use that convention.
    """
    dofs = np.asarray(sorted(set(np.asarray(dofs).tolist())), dtype=np.int64)
    A = system.matrix.tocsr()
    nfull = A.shape[0]
    if mode == "eliminate":
        free = np.setdiff1d(np.arange(nfull), dofs)
        red = A[free][:, free].tocsr()
        rhs = None if system.rhs is None else system.rhs[free]
        return SparseSystem(red, rhs, full_size=nfull, free=free,
                            bc_mode="eliminate", constrained=dofs)
    if mode == "diag1":
        mask = np.ones(nfull)
        mask[dofs] = 0.0
        D = sp.diags(mask)
        ones = np.zeros(nfull)
        ones[dofs] = 1.0
        out = (D @ A @ D + sp.diags(ones)).tocsr()
        out.sum_duplicates()
        out.sort_indices()
        rhs = None
        if system.rhs is not None:
            rhs = system.rhs.copy()
            rhs[dofs] = 0.0
        return SparseSystem(out, rhs, full_size=nfull, bc_mode="diag1",
                            constrained=dofs)
    raise ValueError(f"unknown boundary mode {mode!r}; use 'eliminate' or 'diag1'")


def l2_error(mesh: BoxMesh, dofmap: GlobalDofMap, coefficients, exact) -> float:
    """L2 distance between a coefficient vector and an exact field.

    `exact` receives physical points (..., n) and returns scalars or
    proxy-vector components matching the element's mapping.
    """
    element = dofmap.element
    if len(coefficients) != dofmap.total:
        raise ValueError("coefficient vector length does not match the DOF map")
    n = element.n
    rule = gauss_rule(n, element.r + 3)
    pf = PushForward(element, mesh.h)
    vals = pf.values(tabulate(element, rule.points)[(0,) * n])
    pts = physical_points(mesh, rule)
    coefmat = np.asarray(coefficients)[dofmap.cell_dofs] * dofmap.signs
    target = np.asarray(exact(pts))
    scale = rule.weights * pf.det
    if vals.ndim == 2:
        uh = np.einsum("ci,qi->cq", coefmat, vals)
        diff = uh - target
        err2 = float(np.einsum("q,cq,cq->", scale, diff, diff))
    else:
        uh = np.einsum("ci,qid->cqd", coefmat, vals)
        diff = uh - target
        err2 = float(np.einsum("q,cqd,cqd->", scale, diff, diff))
    return float(np.sqrt(max(err2, 0.0)))


def nonzero_count(system: SparseSystem, drop_tol=1e-14):
    """Stored nonzeros after dropping explicit near-zero entries.

    Returns (count, fill fraction), the fraction being count / (rows*cols).
    """
    A = system.matrix.tocsr().copy()
    A.data[np.abs(A.data) < drop_tol] = 0.0
    A.eliminate_zeros()
    count = int(A.nnz)
    frac = count / (A.shape[0] * A.shape[1])
    return count, frac
