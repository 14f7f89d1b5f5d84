"""P1 assembly of the magnetic Robin quadratic form.

For a potential alpha the discrete form of a vector u is

    u^H S u + tau u^H B u,      u^H M u  (normalization)

where S_ab = int <d^alpha phi_b, d^alpha phi_a> dv_g with
d^alpha phi = d phi + i phi alpha, M is the mass matrix and B the boundary
mass. Integrands are evaluated in chart coordinates as
conj(D_a)^T g^{-1} D_b sqrt(det g), which on the polar charts is exactly
the orthonormal-frame expression (the 1/sin factors of the cap cancel
against the linear-in-theta angular derivatives of the collapsed cells).
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse


class AssemblyError(ValueError):
    pass


MIN_ELEMENT_AREA = 1e-14


@dataclass(frozen=True, eq=False)
class DiscreteOperator:
    S: sparse.csr_matrix
    M: sparse.csr_matrix
    B: sparse.csr_matrix
    mesh: object = field(repr=False)
    alpha: object = field(repr=False)
    quad_order: int = 4

    @property
    def n_dof(self):
        return self.M.shape[0]

    @property
    def is_complex(self):
        return np.iscomplexobj(self.S.data)

    def provenance(self):
        return {
            "geometry": self.mesh.geometry.describe(),
            "potential": self.alpha.describe(),
            "h": self.mesh.h,
            "quad_order": self.quad_order,
            "n_dof": self.n_dof,
        }


def _scatter(tris, local, n):
    F, k, _ = local.shape
    rows = np.repeat(tris, k, axis=1).ravel()
    cols = np.tile(tris, (1, k)).ravel()
    return sparse.coo_matrix((local.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def element_areas(mesh):
    a = np.abs(mesh.signed_chart_areas())
    # a collapsed polar cell covers the full chart rectangle, twice its triangle
    return np.where(mesh.collapsed, 2.0 * a, a)


def assemble(mesh, geometry, alpha, quad_order=4):
    """Assemble magnetic stiffness S, mass M and boundary mass B on ``mesh``."""
    if quad_order < 2:
        raise AssemblyError(f"quadrature order must be >= 2, got {quad_order}")
    areas = element_areas(mesh)
    if np.any(areas < MIN_ELEMENT_AREA):
        bad = int(np.flatnonzero(areas < MIN_ELEMENT_AREA)[0])
        raise AssemblyError(f"degenerate element {bad} (chart area {areas[bad]:.3e})")

    q = mesh.quadrature(quad_order)
    w = q.weights * geometry.sqrt_det(q.points)  # Riemannian measure
    ginv = geometry.inverse_metric(q.points)

    D = q.dphi.astype(complex) if not alpha.is_zero else q.dphi
    if not alpha.is_zero:
        D = D + 1j * q.phi[..., None] * alpha(q.points)[:, :, None, :]

    # K_ab = sum_q w conj(D_a) . G . D_b
    GD = np.einsum("fqij,fqbj->fqbi", ginv, D)
    K = np.einsum("fq,fqai,fqbi->fab", w, np.conj(D), GD)
    K = 0.5 * (K + np.conj(np.swapaxes(K, 1, 2)))
    Me = np.einsum("fq,fqa,fqb->fab", w, q.phi, q.phi)

    n = mesh.n_vertices
    S = _scatter(mesh.triangles, K, n)
    S = (0.5 * (S + S.conj().T)).tocsr()
    M = _scatter(mesh.triangles, Me, n)
    M = (0.5 * (M + M.T)).tocsr()

    L = mesh.edge_arclength
    Be = L[:, None, None] * (np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0)[None]
    B = _scatter(mesh.boundary_edges, Be, n)

    for A in (S, M, B):
        A.sort_indices()
    return DiscreteOperator(S, M, B, mesh, alpha, quad_order)


def robin_operator(op, tau):
    """A(tau) = S + tau B; tau = 0 is the magnetic Neumann problem."""
    if not tau >= 0:
        raise AssemblyError(f"Robin parameter must be >= 0, got {tau}")
    return (op.S + tau * op.B).tocsr()


def dump_coordinate(A, path):
    """Write a sparse matrix as lines ``row col re im`` (0-based)."""
    C = sparse.coo_matrix(A)
    with open(path, "w") as fh:
        fh.write(f"% {C.shape[0]} {C.shape[1]} {C.nnz}\n")
        for i, j, v in zip(C.row, C.col, C.data):
            v = complex(v)
            fh.write(f"{i} {j} {v.real:.17e} {v.imag:.17e}\n")
