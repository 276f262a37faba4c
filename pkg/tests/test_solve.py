"""Linear and eigenvalue solvers."""

import numpy as np
import pytest
import scipy.sparse as sp

from trimfem.assemble import (
    SparseSystem,
    apply_dirichlet,
    assemble_bilinear,
    assemble_load,
    assemble_mixed_poisson,
)
from trimfem.mesh import boundary_dofs, build_box_mesh, global_numbering
from trimfem.refelem import TRIMMED_SERENDIPITY, build_element, element_by_name
from trimfem.solve import eig_shift_invert, solve_saddle, solve_spd

PI2 = np.pi**2


def test_identity_system():
    A = sp.identity(5, format="csr")
    b = np.zeros(5)
    b[0] = 1.0
    x = solve_spd(SparseSystem(A, b))
    assert np.allclose(x, b)


def test_poisson_three_point_stencil_vs_hand_elimination():
    # -u'' = 1 on (0,1), u(0)=u(1)=0, h=1/5, 4 interior nodes
    h = 1 / 5
    main = 2 / h * np.ones(4)
    off = -1 / h * np.ones(3)
    A = sp.diags([off, main, off], [-1, 0, 1], format="csr")
    b = h * np.ones(4)
    x = solve_spd(SparseSystem(A, b))
    # hand elimination of the tridiagonal system: u_i = h^2/2 * i*(5-i)
    exact = np.array([i * (5 - i) for i in range(1, 5)]) * h**2 / 2
    assert np.abs(x - exact).max() <= 1e-14


def test_solve_spd_cg_path_and_energy_identity():
    mesh = build_box_mesh(2, 4)
    elem = element_by_name("S", 2, 2)
    dofmap = global_numbering(mesh, elem)
    K = assemble_bilinear(mesh, dofmap, dofmap, "GradGrad")

    def f(x):
        return 2 * PI2 * np.sin(np.pi * x[..., 0]) * np.sin(np.pi * x[..., 1])

    K.rhs = assemble_load(mesh, dofmap, f)
    red = apply_dirichlet(K, boundary_dofs(dofmap, "full-trace"), "eliminate")
    x_direct = solve_spd(red)
    x_cg = solve_spd(red, tol=1e-12, method="cg")
    assert np.linalg.norm(x_direct - x_cg) / np.linalg.norm(x_direct) <= 1e-9
    # energy identity |x^T A x - x^T b| / |x^T b|
    xr = x_direct[red.free]
    quad = float(xr @ (red.matrix @ xr))
    lin = float(xr @ red.rhs)
    assert abs(quad - lin) / abs(lin) <= 1e-10


def test_solve_spd_requires_rhs_and_symmetry():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(ValueError, match="right-hand side"):
        solve_spd(SparseSystem(A))
    with pytest.raises(ValueError, match="symmetric"):
        solve_spd(SparseSystem(A, np.ones(2)))


def test_solve_spd_reports_singular_systems():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, 0.0]]))
    with pytest.raises(RuntimeError):
        solve_spd(SparseSystem(A, np.ones(2)))


def test_saddle_zero_source_gives_zero_solution():
    mesh = build_box_mesh(2, 1)
    hdiv = global_numbering(mesh, element_by_name("SminusDiv", 2, 2))
    l2 = global_numbering(mesh, element_by_name("DPC", 2, 1))
    sys = assemble_mixed_poisson(mesh, hdiv, l2, lambda x: np.zeros(x.shape[:-1]))
    x = solve_saddle(sys)
    assert np.abs(x).max() <= 1e-12


def test_diagonal_eigenproblem():
    A = sp.diags([1.0, 2.0, 3.0]).tocsr()
    M = sp.identity(3, format="csr")
    res = eig_shift_invert(A, M, target=2.5, nev=2)
    assert np.allclose(sorted(res.eigenvalues), [2.0, 3.0], atol=1e-12)


def _maxwell_system(family, N, r=2, mode="eliminate"):
    mesh = build_box_mesh(3, N)
    elem = build_element(family, 3, 1, r)
    dofmap = global_numbering(mesh, elem)
    bdofs = boundary_dofs(dofmap, "tangential-trace")
    A = apply_dirichlet(assemble_bilinear(mesh, dofmap, dofmap, "CurlCurl"), bdofs, mode)
    M = apply_dirichlet(assemble_bilinear(mesh, dofmap, dofmap, "Mass"), bdofs, mode)
    return A.matrix, M.matrix


def test_maxwell_operator_is_positive_semidefinite():
    A, M = _maxwell_system(TRIMMED_SERENDIPITY, 2)
    vals = np.linalg.eigvalsh(A.toarray())
    assert vals.min() >= -1e-9 * max(vals.max(), 1.0)


def test_dense_and_shift_invert_paths_agree():
    A, M = _maxwell_system(TRIMMED_SERENDIPITY, 4)
    dense = eig_shift_invert(A, M, target=3.0 * PI2, nev=12, dense_cutoff=10**9)
    sparse = eig_shift_invert(A, M, target=3.0 * PI2, nev=12, dense_cutoff=1)
    dense_phys = np.sort(dense.eigenvalues[dense.eigenvalues > PI2])
    sparse_phys = np.sort(sparse.eigenvalues[sparse.eigenvalues > PI2])
    m = min(len(dense_phys), len(sparse_phys))
    assert m >= 10
    assert np.abs(dense_phys[:m] / sparse_phys[:m] - 1).max() <= 1e-8


def test_eigen_residuals_below_tolerance():
    A, M = _maxwell_system(TRIMMED_SERENDIPITY, 4)
    tol = 1e-7
    res = eig_shift_invert(A, M, target=3.0 * PI2, nev=10, tol=tol, dense_cutoff=1)
    assert res.residuals.max() <= 10 * tol
    assert res.op_count is not None and res.op_count > 0


def test_spurious_unit_eigenvalues_in_diag1_mode():
    # diag-one boundary handling plants eigenvalues exactly at 1
    import scipy.linalg

    A, M = _maxwell_system(TRIMMED_SERENDIPITY, 2, mode="diag1")
    vals = scipy.linalg.eigh(A.toarray(), M.toarray(), eigvals_only=True)
    ones = np.sum(np.abs(vals - 1.0) < 1e-9)
    assert ones > 0
    # while elimination mode has none
    Ae, Me = _maxwell_system(TRIMMED_SERENDIPITY, 2, mode="eliminate")
    vals_e = scipy.linalg.eigh(Ae.toarray(), Me.toarray(), eigvals_only=True)
    assert np.sum(np.abs(vals_e - 1.0) < 1e-9) == 0
