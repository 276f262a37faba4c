"""Assembly: local blocks, push-forward scalings, BCs, norms, couplings."""

import numpy as np
import pytest

from trimfem.assemble import (
    PushForward,
    apply_dirichlet,
    assemble_bilinear,
    assemble_load,
    assemble_mixed_poisson,
    l2_error,
    nonzero_count,
    physical_points,
)
from trimfem.mesh import boundary_dofs, build_box_mesh, global_numbering
from trimfem.poly import gauss_rule
from trimfem.refelem import (
    TENSOR_PRODUCT,
    TRIMMED_SERENDIPITY,
    build_element,
    coboundary_fit,
    element_by_name,
    tabulate,
)


def test_lowest_order_mass_diagonal_on_unit_cube():
    mesh = build_box_mesh(3, 1)
    elem = build_element(TRIMMED_SERENDIPITY, 3, 0, 1)
    dofmap = global_numbering(mesh, elem)
    M = assemble_bilinear(mesh, dofmap, dofmap, "Mass").matrix.toarray()
    assert np.allclose(np.diag(M), 1 / 27, atol=1e-14)
    assert np.allclose(M, M.T, atol=1e-15)


def test_gradgrad_kernel_contains_constants():
    # the constant 1 is the sum of the vertex hats (bubble coefficients 0)
    mesh = build_box_mesh(2, 3)
    for family in (TRIMMED_SERENDIPITY, TENSOR_PRODUCT):
        elem = build_element(family, 2, 0, 3)
        dofmap = global_numbering(mesh, elem)
        K = assemble_bilinear(mesh, dofmap, dofmap, "GradGrad").matrix
        const = np.zeros(dofmap.total)
        const[: mesh.num_vertices] = 1.0  # vertex dofs come first
        assert np.max(np.abs(K @ const)) <= 1e-12


def test_curlcurl_rejects_scalar_elements():
    mesh = build_box_mesh(3, 1)
    dofmap = global_numbering(mesh, build_element(TRIMMED_SERENDIPITY, 3, 0, 1))
    with pytest.raises(ValueError, match="1-form"):
        assemble_bilinear(mesh, dofmap, dofmap, "CurlCurl")


def test_unknown_form_rejected():
    mesh = build_box_mesh(2, 1)
    dofmap = global_numbering(mesh, build_element(TRIMMED_SERENDIPITY, 2, 0, 1))
    with pytest.raises(ValueError, match="unknown form"):
        assemble_bilinear(mesh, dofmap, dofmap, "BiLaplace")


@pytest.mark.parametrize("family", [TRIMMED_SERENDIPITY, TENSOR_PRODUCT])
@pytest.mark.parametrize("n,k", [(2, 0), (2, 1), (2, 2), (3, 0), (3, 1), (3, 2), (3, 3)])
@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_mass_matrices_are_spd(family, n, k, r):
    mesh = build_box_mesh(n, 2)
    mapping = None
    elem = build_element(family, n, k, r)
    dofmap = global_numbering(mesh, elem)
    M = assemble_bilinear(mesh, dofmap, dofmap, "Mass").matrix.toarray()
    asym = np.abs(M - M.T).max() / max(np.abs(M).max(), 1e-30)
    assert asym <= 1e-12
    assert np.linalg.eigvalsh(M).min() > 0


def test_symmetric_forms_assemble_symmetric():
    mesh = build_box_mesh(3, 2)
    elem = build_element(TRIMMED_SERENDIPITY, 3, 1, 2)
    dofmap = global_numbering(mesh, elem)
    A = assemble_bilinear(mesh, dofmap, dofmap, "CurlCurl").matrix
    diff = (A - A.T).tocoo()
    scale = np.abs(A.data).max()
    assert (np.abs(diff.data).max() if diff.nnz else 0.0) <= 1e-12 * scale


def test_scale_invariance_against_physical_quadrature():
    # assembling via reference tabulation + push-forward equals integrating
    # the mapped basis directly in physical coordinates
    mesh = build_box_mesh(2, (2, 3))
    elem = build_element(TRIMMED_SERENDIPITY, 2, 1, 2)
    dofmap = global_numbering(mesh, elem)
    M = assemble_bilinear(mesh, dofmap, dofmap, "Mass").matrix.toarray()

    rule = gauss_rule(2, elem.r + 2)
    pf = PushForward(elem, mesh.h)
    vals = pf.values(tabulate(elem, rule.points)[(0, 0)])
    wdet = rule.weights * pf.det
    local = np.einsum("q,qic,qjc->ij", wdet, vals, vals)
    M2 = np.zeros_like(M)
    for c in range(mesh.num_cells):
        idx = dofmap.cell_dofs[c]
        M2[np.ix_(idx, idx)] += local
    assert np.abs(M - M2).max() <= 1e-12 * np.abs(M).max()


@pytest.mark.parametrize("family", [TRIMMED_SERENDIPITY, TENSOR_PRODUCT])
@pytest.mark.parametrize("r", [1, 2, 3])
def test_commuting_gradient_identity(family, r):
    # global GradGrad equals G^T M_1 G with G the discrete gradient
    mesh = build_box_mesh(2, 2)
    e0 = build_element(family, 2, 0, r)
    e1 = build_element(family, 2, 1, r)
    m0 = global_numbering(mesh, e0)
    m1 = global_numbering(mesh, e1)
    D, res = coboundary_fit(e0, e1)
    assert res <= 1e-10
    # scatter D into a global gradient operator
    G = np.zeros((m1.total, m0.total))
    for c in range(mesh.num_cells):
        i0, i1 = m0.cell_dofs[c], m1.cell_dofs[c]
        G[np.ix_(i1, i0)] = D.T
    K = assemble_bilinear(mesh, m0, m0, "GradGrad").matrix.toarray()
    M1 = assemble_bilinear(mesh, m1, m1, "Mass").matrix.toarray()
    K2 = G.T @ M1 @ G
    assert np.abs(K - K2).max() <= 1e-9 * max(np.abs(K).max(), 1.0)


def test_load_vector_matches_quadrature_of_f():
    mesh = build_box_mesh(2, 2)
    elem = element_by_name("DPC", 2, 1)
    dofmap = global_numbering(mesh, elem)

    def f(x):
        return 2 * np.pi**2 * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    b = assemble_load(mesh, dofmap, f)
    rule = gauss_rule(2, elem.r + 2)
    pf = PushForward(elem, mesh.h)
    vals = pf.values(tabulate(elem, rule.points)[(0, 0)])
    pts = physical_points(mesh, rule)
    expected = np.zeros(dofmap.total)
    for c in range(mesh.num_cells):
        for i in range(elem.dim):
            contrib = np.sum(rule.weights * pf.det * f(pts[c]) * vals[:, i])
            expected[dofmap.cell_dofs[c, i]] += contrib
    assert np.allclose(b, expected, atol=1e-14)


def test_boundary_modes():
    mesh = build_box_mesh(2, 2)
    elem = element_by_name("S", 2, 2)
    dofmap = global_numbering(mesh, elem)
    K = assemble_bilinear(mesh, dofmap, dofmap, "GradGrad")
    K.rhs = np.ones(dofmap.total)
    bdofs = boundary_dofs(dofmap, "full-trace")

    red = apply_dirichlet(K, bdofs, "eliminate")
    assert red.matrix.shape[0] == dofmap.total - len(bdofs)
    full = red.expand(np.ones(red.matrix.shape[0]))
    assert np.all(full[bdofs] == 0)

    diag = apply_dirichlet(K, bdofs, "diag1")
    A = diag.matrix
    assert A.shape[0] == dofmap.total
    for d in bdofs[:3]:
        row = A.getrow(d).toarray().ravel()
        assert row[d] == 1.0 and np.abs(np.delete(row, d)).max() == 0.0
    assert np.all(diag.rhs[bdofs] == 0)

    with pytest.raises(ValueError, match="unknown boundary mode"):
        apply_dirichlet(K, bdofs, "penalty")


def test_nonzero_count_single_cell():
    mesh = build_box_mesh(3, 1)
    elem = build_element(TRIMMED_SERENDIPITY, 3, 0, 1)
    dofmap = global_numbering(mesh, elem)
    M = assemble_bilinear(mesh, dofmap, dofmap, "Mass")
    count, frac = nonzero_count(M)
    assert count == 64  # dense 8x8 block
    assert frac == pytest.approx(1.0)


def test_l2_error_of_zero_coefficients_is_field_norm():
    mesh = build_box_mesh(2, 8)
    elem = element_by_name("S", 2, 2)
    dofmap = global_numbering(mesh, elem)

    def exact(x):
        return np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    err = l2_error(mesh, dofmap, np.zeros(dofmap.total), exact)
    assert err == pytest.approx(0.5, abs=1e-12)  # ||sin sin||_{L2} = 1/2


@pytest.mark.parametrize("family", [TRIMMED_SERENDIPITY, TENSOR_PRODUCT])
@pytest.mark.parametrize("n,k,r", [(2, 1, 2), (3, 1, 2), (3, 2, 2), (2, 0, 3)])
def test_projection_reproduces_low_order_polynomials(family, n, k, r):
    # L2-projecting a field with P_{r-1} components returns it exactly
    import scipy.sparse.linalg as spla

    mesh = build_box_mesh(n, 2)
    elem = build_element(family, n, k, r)
    dofmap = global_numbering(mesh, elem)
    rng = np.random.default_rng(13)
    coeff = rng.uniform(-1, 1, size=(elem.ncomp if k not in (0, n) else 1, n + 1))

    def field(x):
        vals = [c[0] + sum(c[1 + a] * x[..., a] for a in range(n)) for c in coeff]
        if len(vals) == 1:
            return vals[0]
        return np.stack(vals, axis=-1)

    M = assemble_bilinear(mesh, dofmap, dofmap, "Mass").matrix
    b = assemble_load(mesh, dofmap, field)
    c = spla.spsolve(M.tocsc(), b)
    assert l2_error(mesh, dofmap, c, field) <= 1e-10


def test_mixed_system_structure_and_pairing():
    mesh = build_box_mesh(2, 4)
    hdiv = global_numbering(mesh, element_by_name("SminusDiv", 2, 2))
    l2 = global_numbering(mesh, element_by_name("DPC", 2, 1))

    def f(x):
        return 2 * np.pi**2 * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    sys = assemble_mixed_poisson(mesh, hdiv, l2, f)
    A = sys.matrix
    nh, nl = hdiv.total, l2.total
    assert A.shape == (nh + nl, nh + nl)
    diff = (A - A.T).tocoo()
    assert (np.abs(diff.data).max() if diff.nnz else 0) <= 1e-12
    assert abs(A[nh:, nh:]).max() == 0.0  # zero (2,2) block
    assert np.all(sys.rhs[:nh] == 0.0)

    bad_l2 = global_numbering(mesh, element_by_name("DPC", 2, 2))
    with pytest.raises(ValueError, match="order-mismatched|pairs with DPC"):
        assemble_mixed_poisson(mesh, hdiv, bad_l2, f)


def test_mixed_divergence_of_constant_flux_vanishes():
    import scipy.sparse.linalg as spla

    mesh = build_box_mesh(2, 1)
    hdiv = global_numbering(mesh, element_by_name("SminusDiv", 2, 2))
    l2 = global_numbering(mesh, element_by_name("DPC", 2, 1))
    # interpolate the constant field (1, 2) into the H(div) space
    M = assemble_bilinear(mesh, hdiv, hdiv, "Mass").matrix

    def const(x):
        out = np.zeros(x.shape[:-1] + (2,))
        out[..., 0] = 1.0
        out[..., 1] = 2.0
        return out

    sigma = spla.spsolve(M.tocsc(), assemble_load(mesh, hdiv, const))
    B = assemble_bilinear(mesh, l2, hdiv, "DivCoupling").matrix
    assert np.abs(B @ sigma).max() <= 1e-11


def test_rhs_entries_match_manufactured_source():
    # the L2-block rhs entries are the quadrature values of -f v
    mesh = build_box_mesh(2, 2)
    hdiv = global_numbering(mesh, element_by_name("SminusDiv", 2, 2))
    l2 = global_numbering(mesh, element_by_name("DPC", 2, 1))

    def f(x):
        return 2 * np.pi**2 * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    sys = assemble_mixed_poisson(mesh, hdiv, l2, f)
    direct = -assemble_load(mesh, l2, f)
    assert np.allclose(sys.rhs[hdiv.total:], direct, atol=1e-14)


def test_div_coupling_accepts_hyphenated_name():
    mesh = build_box_mesh(2, 1)
    hdiv = global_numbering(mesh, element_by_name("SminusDiv", 2, 2))
    l2 = global_numbering(mesh, element_by_name("DPC", 2, 1))
    a = assemble_bilinear(mesh, l2, hdiv, "DivCoupling").matrix
    b = assemble_bilinear(mesh, l2, hdiv, "DivDiv-coupling").matrix
    assert (a - b).nnz == 0
