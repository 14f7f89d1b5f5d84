"""Semi-analytic eigenvalue references for rotationally symmetric problems.

* Disk Robin eigenvalues with no field, from roots of
  sqrt(lam) J_m'(sqrt(lam) R) + tau J_m(sqrt(lam) R) = 0.
* One-dimensional radial reductions for potentials of the form
  alpha = A(rho) dtheta on the disk, annulus and spherical cap, solved on a
  fine grid with Richardson extrapolation.

Bessel functions are evaluated here directly (series for small argument,
Miller's backward recurrence otherwise) so the reference does not share
code with any special-function library it might be compared against.
"""

from dataclasses import dataclass, replace
from math import factorial, sqrt

import numpy as np
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

MAX_MODE = 12


class OracleError(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# Bessel functions of the first kind, integer order


def _series(m, x, terms=40):
    h = 0.5 * x
    term = h**m / factorial(m)
    total = term
    q = -h * h
    for k in range(1, terms):
        term *= q / (k * (k + m))
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total


def _miller(m, x):
    # start far enough above max(m, x) that the recurrence has settled
    top = 2 * ((max(m, int(x)) + 20 + int(sqrt(40.0 * max(m, x, 1.0)))) // 2)
    jp, j = 0.0, 1e-30
    norm = 0.0
    out = 0.0
    for k in range(top, 0, -1):
        jm = 2.0 * k / x * j - jp
        jp, j = j, jm
        if abs(j) > 1e250:
            j *= 1e-250
            jp *= 1e-250
            out *= 1e-250
            norm *= 1e-250
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j
        if k - 1 == m:
            out = j
    norm += j  # J_0
    return out / norm


def bessel_j(m, x):
    """J_m(x) for integer m >= 0 and real x (scalar or array)."""
    if m < 0:
        return (-1) ** (-m) * bessel_j(-m, x)
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(xs)
    for i, v in enumerate(xs):
        a = abs(v)
        if a == 0.0:
            r = 1.0 if m == 0 else 0.0
        elif a < 2.0:
            r = _series(m, a)
        else:
            r = _miller(m, a)
        out[i] = r * (-1) ** m if v < 0 else r
    return out if np.ndim(x) else float(out[0])


def bessel_jp(m, x):
    """Derivative J_m'(x) = (J_{m-1}(x) - J_{m+1}(x)) / 2, with J_0' = -J_1."""
    if m == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(m - 1, x) - bessel_j(m + 1, x))


# ---------------------------------------------------------------------------
# disk Robin roots


def _robin_char(m, tau_r):
    return lambda x: x * bessel_jp(m, x) + tau_r * bessel_j(m, x)


def disk_bessel_robin(tau, m, j, R=1.0, step=0.05, x_max=200.0):
    """j-th eigenvalue (j >= 1) of angular mode m on the disk with Robin parameter tau.

    Robin uses the inward normal: u'(R) + tau u(R) = 0 for u = J_m(sqrt(lam) r).
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    m = abs(int(m))
    F = _robin_char(m, tau * R)
    roots = []
    if m == 0 and tau == 0:
        roots.append(0.0)
    a = 1e-3
    fa = F(a)
    while len(roots) < j:
        b = a + step
        if b > x_max:
            raise OracleError(f"could not bracket root {j} of mode {m} below x={x_max}")
        fb = F(b)
        if fa == 0.0:
            roots.append(a)
        elif fa * fb < 0:
            roots.append(brentq(F, a, b, xtol=1e-15, rtol=1e-15, maxiter=200))
        a, fa = b, fb
    return (roots[j - 1] / R) ** 2


def disk_robin_spectrum(tau, count, R=1.0, max_mode=MAX_MODE):
    """Bottom ``count`` eigenvalues (with multiplicity) of the field-free Robin disk."""
    vals = []
    for m in range(max_mode + 1):
        mult = 1 if m == 0 else 2
        for j in range(1, count + 1):
            lam = disk_bessel_robin(tau, m, j, R)
            vals += [lam] * mult
    vals.sort()
    return np.array(vals[:count])


def dirichlet_disk(m=0, j=1, R=1.0):
    """Dirichlet eigenvalue (j_{m,j} / R)^2 from the zeros of J_m."""
    m = abs(int(m))
    F = lambda x: bessel_j(m, x)
    a, fa, found = 1e-3 if m else 0.5, None, 0
    fa = F(a)
    while True:
        b = a + 0.05
        fb = F(b)
        if fa * fb < 0:
            found += 1
            if found == j:
                return (brentq(F, a, b, xtol=1e-15) / R) ** 2
        a, fa = b, fb


# ---------------------------------------------------------------------------
# radial reductions


@dataclass(frozen=True)
class RadialProblem:
    """Separated problem for alpha = A(rho) dtheta on a rotationally symmetric domain.

    kind    -- "disk" (rho = r in [0, R]), "annulus" (r in [r0, r1]) or
               "cap" (rho = theta in [0, theta0] on the unit sphere)
    extent  -- (R,), (r0, r1) or (theta0,)
    bc      -- per boundary circle: "neumann", "dirichlet" or ("robin", tau);
               keys "outer"/"inner" (annulus), "outer" (disk), "rim" (cap)
    beta    -- normalized flux added to A (annulus only)
    field   -- uniform field strength B; A gains B r^2/2 (planar) or B(1 - cos theta) (cap)
    m       -- single angular mode, or None to merge |m| <= MAX_MODE
    """

    kind: str
    extent: tuple
    bc: dict
    beta: float = 0.0
    field: float = 0.0
    m: object = None
    resolution: int = 4000

    def __post_init__(self):
        if self.resolution < 2000:
            raise ValueError("radial resolution must be >= 2000")
        if self.beta and self.kind != "annulus":
            raise ValueError("a flux parameter needs the annulus")

    @classmethod
    def disk(cls, R=1.0, tau=1.0, **kw):
        return cls("disk", (R,), {"outer": _bc(tau)}, **kw)

    @classmethod
    def annulus(cls, r0=0.5, r1=1.0, tau=1.0, beta=0.0, **kw):
        return cls("annulus", (r0, r1), {"outer": _bc(tau), "inner": _bc(tau)}, beta=beta, **kw)

    @classmethod
    def cap(cls, theta0, tau=1.0, **kw):
        return cls("cap", (theta0,), {"rim": _bc(tau)}, **kw)


def _bc(tau):
    if tau == "dirichlet" or tau == "neumann":
        return tau
    return ("robin", float(tau)) if tau else "neumann"


def _robin_coeff(bc):
    if bc == "neumann":
        return 0.0
    if isinstance(bc, tuple) and bc[0] == "robin":
        return bc[1]
    return None  # dirichlet


def _grid(p):
    if p.kind == "annulus":
        a, b = p.extent
        left, right = p.bc["inner"], p.bc["outer"]
    elif p.kind == "disk":
        a, b = 0.0, p.extent[0]
        left, right = "center", p.bc["outer"]
    elif p.kind == "cap":
        a, b = 0.0, p.extent[0]
        left, right = "center", p.bc["rim"]
    else:
        raise ValueError(f"unknown radial problem kind {p.kind!r}")
    return a, b, left, right


def _weight_integral(kind, lo, hi):
    """int_lo^hi w(rho) drho with w = r (planar) or sin theta (cap)."""
    if kind == "cap":
        return np.cos(lo) - np.cos(hi)
    return 0.5 * (hi**2 - lo**2)


def _angular(p, rho):
    """A(rho) and the circumference factor (r or sin theta)."""
    if p.kind == "cap":
        A = p.field * (1.0 - np.cos(rho))
        return A, np.sin(rho)
    A = p.beta + 0.5 * p.field * rho**2
    return A, rho


def _mode_spectrum(p, m, count, n):
    a, b, left, right = _grid(p)
    x = np.linspace(a, b, n + 1)
    h = (b - a) / n
    cell = _weight_integral(p.kind, x[:-1], x[1:])  # int of w over each cell
    lo = np.concatenate([[x[0]], 0.5 * (x[:-1] + x[1:])])
    hi = np.concatenate([0.5 * (x[:-1] + x[1:]), [x[-1]]])
    mass = _weight_integral(p.kind, lo, hi)

    with np.errstate(divide="ignore", invalid="ignore"):
        A, circ = _angular(p, x)
        V = ((m + A) / circ) ** 2
    diag = np.zeros(n + 1)
    diag[:-1] += cell / h**2
    diag[1:] += cell / h**2
    off = -cell / h**2
    keep = np.ones(n + 1, dtype=bool)

    if left == "center":
        # regular at the center: only the m + A(0) = 0 mode is nonzero there
        if abs(m + A[0]) > 0:
            keep[0] = False
        V[0] = 0.0
    diag += V * mass
    for idx, bc in ((0, left), (n, right)):
        if bc == "center":
            continue
        t = _robin_coeff(bc)
        if t is None:
            keep[idx] = False
        else:
            diag[idx] += t * (x[idx] if p.kind != "cap" else np.sin(x[idx]))

    ids = np.flatnonzero(keep)
    d = diag[ids]
    e = off[ids[:-1]]
    s = 1.0 / np.sqrt(mass[ids])
    d = d * s * s
    e = e * s[:-1] * s[1:]
    k = min(count, len(d)) - 1
    return eigh_tridiagonal(d, e, eigvals_only=True, select="i", select_range=(0, k))


def radial_fd_eigen(problem, count):
    """Bottom ``count`` eigenvalues of the radial reduction, merged over angular modes.

    Each mode is solved on grids of N and 2N cells and combined by
    Richardson extrapolation (4 lam_2N - lam_N) / 3.
    """
    modes = range(-MAX_MODE, MAX_MODE + 1) if problem.m is None else [int(problem.m)]
    n = problem.resolution
    vals = []
    for m in modes:
        c1 = _mode_spectrum(problem, m, count, n)
        c2 = _mode_spectrum(problem, m, count, 2 * n)
        vals.extend((4.0 * c2 - c1) / 3.0)
    vals.sort()
    return np.array(vals[:count])


def refine(problem, factor=2):
    return replace(problem, resolution=problem.resolution * factor)
