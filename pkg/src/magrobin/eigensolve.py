"""Smallest eigenpairs of A x = lambda M x with residual certification."""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy import sparse
from scipy.sparse import linalg as spla

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-9
DENSE_LIMIT = 400
CLUSTER_RTOL = 1e-9


class SolverError(RuntimeError):
    """Factorization breakdown or non-convergence."""


@dataclass
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    residuals: np.ndarray
    meta: dict = field(default_factory=dict)

    def clusters(self, rtol=CLUSTER_RTOL):
        """Index groups of numerically equal eigenvalues."""
        groups, cur = [], [0]
        lam = self.eigenvalues
        for i in range(1, len(lam)):
            if abs(lam[i] - lam[cur[0]]) <= rtol * (1.0 + abs(lam[cur[0]])):
                cur.append(i)
            else:
                groups.append(cur)
                cur = [i]
        groups.append(cur)
        return groups

    def to_dict(self):
        return {
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residuals": [float(x) for x in self.residuals],
            "clusters": self.clusters(),
            "solver": self.meta,
        }


def residuals(A, M, lam, X):
    """||A x - lambda M x|| / ||M x|| for each column."""
    MX = M @ X
    R = A @ X - MX * lam[None, :]
    return np.linalg.norm(R, axis=0) / np.linalg.norm(MX, axis=0)


def _rayleigh_ritz(A, M, X):
    """Re-solve the projected pencil to get M-orthonormal Ritz pairs."""
    Ar = X.conj().T @ (A @ X)
    Mr = X.conj().T @ (M @ X)
    Ar = 0.5 * (Ar + Ar.conj().T)
    Mr = 0.5 * (Mr + Mr.conj().T)
    lam, V = sla.eigh(Ar, Mr)
    return lam, X @ V


def default_shift(A, M):
    """Shift just below the bottom of the spectrum.

    Uses the Rayleigh quotient of the constant vector (an upper bound for
    the smallest eigenvalue of a nonnegative form) with a floor tied to the
    spectral radius estimate ||A||_1/||M||_1, so the shift scales with the
    problem without drifting far below the wanted eigenvalues.
    """
    one = np.ones(A.shape[0])
    rq = float(np.real(one @ (A @ one)) / np.real(one @ (M @ one)))
    floor = 1e-6 * spla.norm(A, 1) / spla.norm(M, 1)
    return -max(abs(rq), floor)


def _dense(A, M, k):
    Ad = A.toarray() if sparse.issparse(A) else np.asarray(A)
    Md = M.toarray() if sparse.issparse(M) else np.asarray(M)
    lam, X = sla.eigh(Ad, Md, subset_by_index=[0, k - 1])
    return lam, X


def _polish(A, M, lam, X, tol, sigma, max_steps=3):
    """Subspace iteration with (A - sigma M)^{-1} until residuals sit below tol / 10."""
    steps = 0
    if np.max(residuals(A, M, lam, X)) <= 0.1 * tol:
        return lam, X, steps
    lu, dtype = _factor(A, M, sigma)
    for steps in range(1, max_steps + 1):
        X = lu.solve(np.asarray(M @ X, dtype=dtype))
        lam, X = _rayleigh_ritz(A, M, X)
        if np.max(residuals(A, M, lam, X)) <= 0.1 * tol:
            break
    return lam, X, steps


def _factor(A, M, sigma):
    dtype = np.result_type(A.dtype, M.dtype)
    C = (A - sigma * M).tocsc().astype(dtype)
    try:
        lu = spla.splu(C)
    except RuntimeError as exc:
        raise SolverError(f"factorization of A - sigma M failed at sigma={sigma:g}: {exc}") from None
    d = np.abs(lu.U.diagonal())
    if not np.all(np.isfinite(d)) or d.min() <= 1e-14 * d.max():
        raise SolverError(f"singular factorization at sigma={sigma:g}")
    return lu, dtype


def _shift_invert(A, M, k, sigma, tol, maxiter, guard):
    """ARPACK shift-invert Lanczos, then subspace-iteration polishing."""
    n = A.shape[0]
    lu, dtype = _factor(A, M, sigma)
    OPinv = spla.LinearOperator((n, n), matvec=lu.solve, dtype=dtype)
    m = min(k + guard, n - 2)
    ncv = min(n - 1, max(2 * m + 1, 20))
    lam, X = spla.eigsh(A, k=m, M=M, sigma=sigma, OPinv=OPinv, which="LM", tol=1e-12,
                        ncv=ncv, maxiter=maxiter)
    steps = 0
    for steps in range(1, 6):
        lam, X = _rayleigh_ritz(A, M, X)
        if np.max(residuals(A, M, lam[:k], X[:, :k])) <= 0.1 * tol:
            break
        X = lu.solve(np.asarray(M @ X, dtype=dtype))
    return lam[:k], X[:, :k], steps


def solve_smallest(A, M, k, tol=DEFAULT_TOL, sigma=None, method="auto", maxiter=5000, guard=None):
    """The k algebraically smallest eigenpairs of the Hermitian pencil (A, M).

    Sparse problems use shift-invert Lanczos (ARPACK) about a shift below
    the spectrum, computing ``guard`` extra pairs that are dropped after
    polishing; problems with at most DENSE_LIMIT unknowns, or
    ``method="dense"``, go through LAPACK. Every returned pair is
    Rayleigh-Ritz refined so the vectors are M-orthonormal, and residuals
    are recomputed from scratch. Raises SolverError if any residual
    exceeds ``tol``.
    """
    n = A.shape[0]
    if not (1 <= k <= max(1, n // 4) or (method == "dense" and 1 <= k <= n)):
        raise ValueError(f"need 1 <= k <= n/4 (n={n}), got k={k}")
    A = sparse.csr_matrix(A)
    M = sparse.csr_matrix(M)
    if method == "auto":
        method = "dense" if n <= DENSE_LIMIT else "shift-invert"
    if guard is None:
        guard = max(3, k // 2)

    meta = {"method": method, "tol": tol, "n": n, "k": k}
    if method == "dense":
        lam, X = _dense(A, M, k)
        s = default_shift(A, M) if sigma is None else float(sigma)
        lam, X, meta["polish_steps"] = _polish(A, M, lam, X, tol, s)
    else:
        s = default_shift(A, M) if sigma is None else float(sigma)
        try:
            lam, X, steps = _shift_invert(A, M, k, s, tol, maxiter, guard)
        except (SolverError, spla.ArpackNoConvergence) as exc:
            log.warning("shift-invert failed at sigma=%g (%s); retrying at %g", s, exc, 2 * s)
            s = 2 * s if s != 0 else -1.0
            try:
                lam, X, steps = _shift_invert(A, M, k, s, tol, maxiter, guard)
            except spla.ArpackNoConvergence as exc2:
                raise SolverError(f"no convergence after {maxiter} iterations at sigma={s:g}") from exc2
        meta["shift"] = s
        meta["polish_steps"] = steps

    lam, X = _rayleigh_ritz(A, M, X)
    order = np.argsort(lam)
    lam, X = lam[order], X[:, order]
    res = residuals(A, M, lam, X)
    meta["max_residual"] = float(np.max(res))
    if np.any(res > tol):
        raise SolverError(f"residuals {res.max():.3e} exceed tolerance {tol:.1e}")
    return SpectrumResult(lam, X, res, meta)


def normalize_positive(f, rtol=1e-8):
    """Fix the sign of a one-signed real eigenvector so its entries are positive."""
    f = np.asarray(f)
    if np.iscomplexobj(f):
        if np.max(np.abs(f.imag)) > rtol * np.max(np.abs(f)):
            raise ValueError("expected a real eigenvector")
        f = f.real
    f = np.array(f, dtype=float)
    i = int(np.argmax(np.abs(f)))
    if f[i] < 0:
        f = -f
    if np.min(f) < -rtol * f[i]:
        raise ValueError("eigenvector changes sign; not a ground state")
    return f
