"""Mesh -> assemble -> solve, with the operator cached per mesh size."""

from dataclasses import dataclass, field

import numpy as np

from .assembly import assemble, robin_operator
from .eigensolve import DEFAULT_TOL, normalize_positive, solve_smallest
from .geometry import build_mesh, curvature_data
from .potentials import sup_norm_dalpha, zero


@dataclass
class Problem:
    """One geometry and potential, discretized on demand at several mesh sizes."""

    geometry: object
    alpha: object
    quad_order: int = 4
    tol: float = DEFAULT_TOL
    _ops: dict = field(default_factory=dict, repr=False)

    def operator(self, h):
        if h not in self._ops:
            mesh = build_mesh(self.geometry, h)
            self._ops[h] = assemble(mesh, self.geometry, self.alpha, self.quad_order)
        return self._ops[h]

    def spectrum(self, h, tau, k, method="auto"):
        op = self.operator(h)
        return solve_smallest(robin_operator(op, tau), op.M, k, tol=self.tol, method=method)

    def with_potential(self, alpha):
        return Problem(self.geometry, alpha, self.quad_order, self.tol)

    def field_sup(self):
        return sup_norm_dalpha(self.alpha, self.geometry)

    def curvature(self):
        return curvature_data(self.geometry)


def ground_state_ratio(problem, h, tau):
    """C(tau) from the field-free Robin ground state on the mesh of size h, and lambda_1(tau)."""
    base = problem if problem.alpha.is_zero else problem.with_potential(zero())
    res = base.spectrum(h, tau, 1)
    f = normalize_positive(res.eigenvectors[:, 0])
    return float((f.min() / f.max()) ** 2), float(res.eigenvalues[0])


def error_ratios(values, reference=None):
    """Successive error ratios across refinements.

    With a reference, ratios of |lam_h - ref|; otherwise self-convergence
    ratios of consecutive differences (needs at least three levels).
    """
    v = np.asarray(values, dtype=float)
    if reference is not None:
        err = np.abs(v - np.asarray(reference, dtype=float))
    else:
        err = np.abs(np.diff(v, axis=0))
    with np.errstate(divide="ignore", invalid="ignore"):
        return err, err[:-1] / err[1:]
