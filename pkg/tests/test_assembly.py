import dataclasses

import numpy as np
import pytest
import scipy.linalg as sla
import sympy as sp
from scipy import sparse

from magrobin.assembly import AssemblyError, assemble, dump_coordinate, robin_operator
from magrobin.eigensolve import solve_smallest
from magrobin.geometry import Annulus, Disk, SphericalCap, build_mesh
from magrobin.potentials import X1, X2, aharonov_bohm, custom, gauge_transform, uniform_field, zero

DISK = Disk(1)


def cotangent_stiffness(mesh):
    """Classical P1 Laplacian from the cotangent formula (flat chart only)."""
    n = mesh.n_vertices
    rows, cols, vals = [], [], []
    for tri in mesh.triangles:
        P = mesh.vertices[tri]
        for k in range(3):
            i, j, o = tri[(k + 1) % 3], tri[(k + 2) % 3], k
            u = P[(k + 1) % 3] - P[o]
            v = P[(k + 2) % 3] - P[o]
            cot = np.dot(u, v) / abs(u[0] * v[1] - u[1] * v[0])
            w = 0.5 * cot
            rows += [i, j, i, j]
            cols += [j, i, i, j]
            vals += [-w, -w, w, w]
    return sparse.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def test_zero_potential_gives_classical_stiffness():
    mesh = build_mesh(DISK, 0.2)
    op = assemble(mesh, DISK, zero())
    assert not op.is_complex
    assert abs(op.S - cotangent_stiffness(mesh)).max() < 1e-13


def test_element_kernel_matches_exact_integration():
    # one flat triangle, linear potential: the order-4 rule must reproduce the exact integral
    mesh = build_mesh(DISK, 0.5)
    alpha = custom("-0.5*y + 0.3", "0.5*x + 0.2")
    op = assemble(mesh, DISK, alpha, quad_order=4)
    t = 3
    tri = mesh.triangles[t]
    P = [sp.Matrix([sp.Rational(str(c)) for c in mesh.vertices[v]]) for v in tri]
    s, r = sp.symbols("s r", real=True)
    x = P[0] + s * (P[1] - P[0]) + r * (P[2] - P[0])
    lam = [1 - s - r, s, r]
    J = sp.Matrix.hstack(P[1] - P[0], P[2] - P[0])
    G = (J.T).inv() * sp.Matrix([[-1, 1, 0], [-1, 0, 1]])
    a = [sp.sympify(c).subs({X1: x[0], X2: x[1]}) for c in alpha.components]
    D = [[G[0, k] + sp.I * lam[k] * a[0], G[1, k] + sp.I * lam[k] * a[1]] for k in range(3)]
    K = np.zeros((3, 3), dtype=complex)
    for i in range(3):
        for j in range(3):
            integrand = sp.expand(sp.conjugate(D[i][0]) * D[j][0] + sp.conjugate(D[i][1]) * D[j][1])
            K[i, j] = complex(sp.integrate(integrand, (r, 0, 1 - s), (s, 0, 1)) * abs(J.det()))
    # local contribution of this element alone
    single = dataclasses.replace(mesh, triangles=mesh.triangles[t:t + 1], tri_coords=mesh.tri_coords[t:t + 1],
                                 collapsed=mesh.collapsed[t:t + 1])
    S1 = assemble(single, DISK, alpha).S.toarray()[np.ix_(tri, tri)]
    assert np.allclose(S1, K, atol=1e-14)
    assert op.S.shape == (mesh.n_vertices,) * 2


@pytest.mark.parametrize(
    "geometry,alpha",
    [
        (DISK, uniform_field(DISK, 1.0)),
        (Annulus(0.5, 1), aharonov_bohm(Annulus(0.5, 1), 0.3)),
        (SphericalCap(np.pi / 4), uniform_field(SphericalCap(np.pi / 4), 0.5)),
    ],
    ids=["disk", "annulus", "cap"],
)
def test_operator_invariants(geometry, alpha):
    mesh = build_mesh(geometry, 0.15)
    op = assemble(mesh, geometry, alpha)
    assert abs(op.S - op.S.conj().T).max() == 0
    M = op.M.toarray()
    assert np.allclose(M, M.T, rtol=0, atol=0)
    sla.cholesky(M)
    B = op.B.toarray()
    ev = np.linalg.eigvalsh(B)
    assert ev.min() > -1e-15
    assert np.sum(ev > 1e-12 * ev.max()) == len(mesh.boundary_vertices())
    # boundary mass uses exact arclength
    one = np.ones(mesh.n_vertices)
    assert one @ B @ one == pytest.approx(geometry.boundary_length(), rel=1e-13)
    # positive definite for tau > 0
    sla.cholesky(robin_operator(op, 0.5).toarray())
    assert op.provenance()["n_dof"] == mesh.n_vertices


def test_constant_in_kernel_without_field():
    for g in (DISK, SphericalCap(1.0), Annulus(0.3, 1.0)):
        op = assemble(build_mesh(g, 0.1), g, zero())
        assert np.max(np.abs(op.S @ np.ones(op.n_dof))) < 1e-12


def test_robin_operator_linear_in_tau():
    op = assemble(build_mesh(DISK, 0.2), DISK, uniform_field(DISK, 1))
    d = robin_operator(op, 2.5) - robin_operator(op, 0.5) - 2.0 * op.B
    assert abs(d).max() <= 1e-15 * abs(op.S).max()
    with pytest.raises(AssemblyError):
        robin_operator(op, -1.0)


def test_eigenvalues_nondecreasing_in_tau():
    op = assemble(build_mesh(DISK, 0.1), DISK, uniform_field(DISK, 1))
    prev = None
    for tau in (0.0, 0.5, 1.0, 3.0, 10.0):
        lam = solve_smallest(robin_operator(op, tau), op.M, 10).eigenvalues
        if prev is not None:
            assert np.all(lam >= prev - 1e-10)
        prev = lam


def test_degenerate_element_rejected():
    mesh = build_mesh(DISK, 0.3)
    c = mesh.tri_coords.copy()
    c[5, 2] = c[5, 0] + 0.5 * (c[5, 1] - c[5, 0])
    bad = dataclasses.replace(mesh, tri_coords=c)
    with pytest.raises(AssemblyError, match="element 5"):
        assemble(bad, DISK, zero())
    with pytest.raises(AssemblyError):
        assemble(mesh, DISK, zero(), quad_order=1)


def test_neumann_second_eigenvalue_of_disk():
    # first nonzero Neumann eigenvalue of the unit disk is (j'_{1,1})^2
    op = assemble(build_mesh(DISK, 1 / 48), DISK, zero())
    lam = solve_smallest(robin_operator(op, 0.0), op.M, 3).eigenvalues
    assert abs(lam[0]) < 1e-9
    assert lam[1] == pytest.approx(3.3899577166718887, rel=1e-3)
    assert lam[2] == pytest.approx(lam[1], rel=1e-9)


def test_cap_ground_state_is_two():
    # cos(theta) solves the tau = 1 problem on the cap of angle pi/4: -u'' - cot u' = 2u, u'(t0) = -tan(t0) u
    cap = SphericalCap(np.pi / 4)
    lams = []
    for h in (0.1, 0.05, 0.025):
        op = assemble(build_mesh(cap, h), cap, zero())
        lams.append(solve_smallest(robin_operator(op, 1.0), op.M, 1).eigenvalues[0])
    err = np.abs(np.array(lams) - 2.0)
    assert err[-1] < 1e-3
    assert np.all((err[:-1] / err[1:] > 3) & (err[:-1] / err[1:] < 5))


def test_gauge_near_invariance_second_order():
    alpha = uniform_field(DISK, 1.0)
    beta = gauge_transform(alpha, "sin(x)*y")
    diffs = []
    for h in (0.1, 0.05, 0.025):
        mesh = build_mesh(DISK, h)
        a = assemble(mesh, DISK, alpha)
        b = assemble(mesh, DISK, beta)
        la = solve_smallest(robin_operator(a, 1.0), a.M, 3).eigenvalues
        lb = solve_smallest(robin_operator(b, 1.0), b.M, 3).eigenvalues
        diffs.append(np.abs(la - lb))
    diffs = np.array(diffs)
    ratios = diffs[:-1] / diffs[1:]
    assert np.all((ratios >= 3) & (ratios <= 5)), ratios


def test_dump_coordinate_roundtrip(tmp_path):
    op = assemble(build_mesh(DISK, 0.4), DISK, uniform_field(DISK, 1))
    path = tmp_path / "S.txt"
    dump_coordinate(op.S, path)
    lines = path.read_text().splitlines()
    n, m, nnz = map(int, lines[0].split()[1:])
    data = np.array([l.split() for l in lines[1:]], dtype=float)
    R = sparse.coo_matrix((data[:, 2] + 1j * data[:, 3], (data[:, 0].astype(int), data[:, 1].astype(int))), shape=(n, m))
    assert nnz == op.S.nnz
    assert abs(R - op.S).max() == 0
