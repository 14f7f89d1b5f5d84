"""Term-by-term evaluation of the magnetic Bochner identities.

Conventions used throughout:

* d^a f = df + i f a for a complex function f and real 1-form a.
* Hermitian products <u, v> are conjugate-linear in the second slot, so
  <w, nu> = w(nu) and <nu, w> = conj(w(nu)) for a real unit vector nu.
* A complex covector w is turned into a vector by raising its index with
  g^{-1} *without* conjugation; d alpha then acts on complex vectors by
  complex bilinearity, dalpha(U, V) = b (U^1 V^2 - U^2 V^1).
* |d alpha| = |b| / sqrt(det g) (sum over i < j in an orthonormal frame).
* The Laplacian is the nonnegative one, Delta = delta d = -trace Hess.

The integrated identity on a surface M with boundary N reads

    int |Hess^a f + (1/n) Delta^a f g|^2
        = (n-1)/n int |Delta^a f|^2 - int Ric(d^a f, d^a f)
          + int Im dalpha(d^a f, conj d^a f) + int |f|^2 |dalpha|^2
          - (n-1) int_N H |<d^a f, nu>|^2
          - 2 int_N Re(<nu, d^a f> Delta_N^a f)
          - int_N <II(d_N^a f), d_N^a f>

with nu the inward normal and Delta_N^a = -(d/ds + i a_T)^2 along each
boundary curve. The ledger stores each integral with its own sign (the
"raw" value) and the signed contribution it makes to the right side.
"""

from dataclasses import asdict, dataclass, field
from functools import cached_property

import numpy as np
import sympy as sp

from .geometry import Disk
from .potentials import CHART_SYMBOLS, X1, X2, as_expr, numeric

# signs with which each raw integral enters the right-hand side
RHS_SIGNS = {
    "laplacian": +1.0,  # times (n-1)/n
    "ricci": -1.0,
    "field_im": +1.0,
    "field_sq": +1.0,
    "H_term": -1.0,  # times (n-1)
    "cross_term": -1.0,
    "II_term": -1.0,
}


class TestField:
    """Complex test function given by a closed-form chart expression."""

    __test__ = False  # not a pytest class

    def __init__(self, expr, family="custom", names=("x", "y")):
        self.expr = as_expr(expr, names)
        self.names = tuple(names)
        self.family = family
        free = self.expr.free_symbols
        try:
            self.degree = int(sp.Poly(self.expr, *CHART_SYMBOLS).total_degree()) if free else 0
        except sp.PolynomialError:
            self.degree = None

    @cached_property
    def _value(self):
        return numeric(self.expr)

    @cached_property
    def _grad(self):
        return [numeric(sp.diff(self.expr, x)) for x in CHART_SYMBOLS]

    @cached_property
    def _hess(self):
        return [[numeric(sp.diff(self.expr, x, y)) for y in CHART_SYMBOLS] for x in CHART_SYMBOLS]

    def value(self, p):
        return np.asarray(self._value(p), dtype=complex)

    def grad(self, p):
        return np.stack([np.asarray(g(p), dtype=complex) for g in self._grad], axis=-1)

    def hess(self, p):
        return np.stack([np.stack([np.asarray(h(p), dtype=complex) for h in row], axis=-1) for row in self._hess], axis=-2)

    def grad_fd(self, p, step=1e-6):
        p = np.asarray(p, dtype=float)
        out = []
        for e in np.eye(2):
            out.append((self.value(p + step * e) - self.value(p - step * e)) / (2 * step))
        return np.stack(out, axis=-1)

    def gauge(self, chi):
        """e^{-i chi} f, the partner of alpha + d chi."""
        g = sp.exp(-sp.I * as_expr(chi, self.names)) * self.expr
        return TestField(g, family=f"{self.family}*gauge", names=self.names)

    def __repr__(self):
        return f"TestField({self.expr})"


STANDARD_FIELDS = {
    "constant": "1",
    "x": "x",
    "z2": "(x + I*y)**2",
    "x2y_iy": "x**2*y + I*y",
}


# ---------------------------------------------------------------------------
# pointwise quantities in chart coordinates


def _jets(f, alpha, geometry, p):
    p = np.asarray(p, dtype=float)
    return {
        "f": f.value(p),
        "df": f.grad(p),
        "ddf": f.hess(p),
        "a": alpha(p),
        "da": alpha.jacobian(p),
        "b": alpha.field(p),
        "g": geometry.metric(p),
        "ginv": geometry.inverse_metric(p),
        "Gamma": geometry.christoffel(p),
    }


def _hessian_chart(J):
    """Covariant components H_ij of Hess^a f = <nabla^a_{e_i} d^a f, e_j>."""
    f, df, ddf, a, da, G = J["f"], J["df"], J["ddf"], J["a"], J["da"], J["Gamma"]
    hess = ddf - np.einsum("...kij,...k->...ij", G, df)
    nabla_a = da - np.einsum("...kij,...k->...ij", G, a)  # (nabla_i a)_j
    mixed = np.einsum("...i,...j->...ij", df, a)
    return (
        hess
        + 1j * (mixed + np.swapaxes(mixed, -1, -2))
        + 1j * f[..., None, None] * nabla_a
        - f[..., None, None] * np.einsum("...i,...j->...ij", a, a)
    )


def orthonormal_frame(g):
    """Columns e_1, e_2 (chart components) with E^T g E = I."""
    L = np.linalg.cholesky(g)
    return np.swapaxes(np.linalg.inv(L), -1, -2)


def magnetic_hessian(f, alpha, geometry, p):
    """Hess^a f in an orthonormal frame at chart point(s) p, shape (..., 2, 2)."""
    J = _jets(f, alpha, geometry, p)
    E = orthonormal_frame(J["g"])
    return np.einsum("...ia,...ij,...jb->...ab", E, _hessian_chart(J), E)


def magnetic_laplacian_trace(f, alpha, geometry, p):
    """Delta^a f as minus the metric trace of the magnetic Hessian."""
    J = _jets(f, alpha, geometry, p)
    return -np.einsum("...ij,...ij->...", J["ginv"], _hessian_chart(J))


def magnetic_laplacian_pointwise(f, alpha, geometry, p):
    """Delta^a f = -Delta_g f - 2i <df, a> + (|a|^2 - i div a) f.

    Uses the divergence form of the Laplace-Beltrami operator, with no
    Christoffel symbols, so it is independent of the trace route.
    """
    p = np.asarray(p, dtype=float)
    fv, df, ddf = f.value(p), f.grad(p), f.hess(p)
    a, da = alpha(p), alpha.jacobian(p)
    ginv = geometry.inverse_metric(p)
    drift = geometry.laplacian_drift(p)
    lap = np.einsum("...ij,...ij->...", ginv, ddf) + np.einsum("...k,...k->...", drift, df)
    div = np.einsum("...ij,...ij->...", ginv, da) + np.einsum("...k,...k->...", drift, a)
    dfa = np.einsum("...i,...ij,...j->...", df, ginv, a)
    a2 = np.einsum("...i,...ij,...j->...", a, ginv, a)
    return -lap - 2j * dfa + (a2 - 1j * div) * fv


def magnetic_differential(f, alpha, p):
    """Chart components of d^a f."""
    return f.grad(p) + 1j * f.value(p)[..., None] * alpha(p)


def _volume_integrands(f, alpha, geometry, p):
    J = _jets(f, alpha, geometry, p)
    n = geometry.dimension
    Hc = _hessian_chart(J)
    E = orthonormal_frame(J["g"])
    H = np.einsum("...ia,...ij,...jb->...ab", E, Hc, E)
    lap = -np.einsum("...ij,...ij->...", J["ginv"], Hc)
    tf = H + (lap / n)[..., None, None] * np.eye(n)
    w = J["df"] + 1j * J["f"][..., None] * J["a"]
    U = np.einsum("...ij,...j->...i", J["ginv"], w)  # raised without conjugation
    w2 = np.real(np.einsum("...i,...i->...", U, np.conj(w)))
    detg = np.linalg.det(J["g"])
    return {
        "lhs": np.sum(np.abs(tf) ** 2, axis=(-1, -2)),
        "laplacian": np.abs(lap) ** 2,
        "ricci": geometry.gauss_curvature * w2,
        # dalpha(U, conj U) = b (U1 conj U2 - U2 conj U1) = 2i b Im(U1 conj U2)
        "field_im": 2.0 * J["b"] * np.imag(U[..., 0] * np.conj(U[..., 1])),
        "field_sq": np.abs(J["f"]) ** 2 * J["b"] ** 2 / detg,
    }


def _boundary_integrands(f, alpha, comp, s):
    p = comp.point(s)
    T, A, nu = comp.tangent(s), comp.accel(s), comp.normal(s)
    fv, df, ddf = f.value(p), f.grad(p), f.hess(p)
    a, da = alpha(p), alpha.jacobian(p)
    w_nu = np.einsum("...i,...i->...", df, nu) + 1j * fv * np.einsum("...i,...i->...", a, nu)
    fs = np.einsum("...i,...i->...", df, T)
    fss = np.einsum("...i,...ij,...j->...", T, ddf, T) + np.einsum("...i,...i->...", df, A)
    aT = np.einsum("...i,...i->...", a, T)
    aT_s = np.einsum("...i,...ij,...j->...", T, da, T) + np.einsum("...i,...i->...", a, A)
    D = fs + 1j * aT * fv  # d_N^a f applied to the unit tangent
    D_s = fss + 1j * (aT_s * fv + aT * fs)
    lapN = -(D_s + 1j * aT * D)
    return {
        "H_term": comp.curvature * np.abs(w_nu) ** 2,
        "cross_term": 2.0 * np.real(np.conj(w_nu) * lapN),
        "II_term": comp.curvature * np.abs(D) ** 2,
    }


# ---------------------------------------------------------------------------
# integrated identity


@dataclass
class BochnerLedger:
    """Raw integrals and signed right-side contributions of the integrated identity."""

    geometry: dict
    potential: dict
    field: str
    quad_order: int
    lhs: float
    raw: dict
    contributions: dict
    rhs: float
    residual: float
    relative_residual: float
    sign_flips: list = field(default_factory=list)

    def passed(self, rtol=1e-6):
        return bool(abs(self.residual) <= rtol * (1.0 + abs(self.lhs) + abs(self.rhs)))

    def to_dict(self):
        return asdict(self)


def boundary_terms(f, alpha, geometry, n_points=64):
    """(H_term, cross_term, II_term) as unsigned integrals summed over boundary components.

    H_term     = int_N H |<d^a f, nu>|^2
    cross_term = 2 int_N Re(<nu, d^a f> Delta_N^a f)
    II_term    = int_N kappa |(d/ds + i a_T) f|^2
    """
    out = {"H_term": 0.0, "cross_term": 0.0, "II_term": 0.0}
    for comp in geometry.boundary_components():
        s, w = comp.quadrature(n_points)
        for key, vals in _boundary_integrands(f, alpha, comp, s).items():
            out[key] += float(np.sum(w * vals))
    return out["H_term"], out["cross_term"], out["II_term"]


def verify_integrated_bochner(geometry, f, alpha, quad_order=10, sign_flips=()):
    """Evaluate every term of the integrated identity and its residual.

    ``sign_flips`` names right-side terms whose sign is reversed relative to
    the stated identity; they are recorded in the ledger, never applied
    implicitly.
    """
    if not isinstance(f, TestField):
        f = TestField(f, names=geometry.chart_names)
    n = geometry.dimension
    pts, wts = geometry.area_quadrature(quad_order)
    vol = {k: float(np.sum(wts * v)) for k, v in _volume_integrands(f, alpha, geometry, pts).items()}
    nb = 4 * (quad_order + 4)
    H_term, cross, II = boundary_terms(f, alpha, geometry, nb)
    raw = {
        "laplacian": vol["laplacian"],
        "ricci": vol["ricci"],
        "field_im": vol["field_im"],
        "field_sq": vol["field_sq"],
        "H_term": H_term,
        "cross_term": cross,
        "II_term": II,
    }
    scale = {"laplacian": (n - 1) / n, "H_term": n - 1}
    contrib = {}
    for key, val in raw.items():
        sign = RHS_SIGNS[key] * (-1.0 if key in sign_flips else 1.0)
        contrib[key] = sign * scale.get(key, 1.0) * val
    rhs = float(sum(contrib.values()))
    lhs = vol["lhs"]
    res = lhs - rhs
    return BochnerLedger(
        geometry=geometry.describe(),
        potential=alpha.describe(),
        field=str(f.expr),
        quad_order=quad_order,
        lhs=lhs,
        raw=raw,
        contributions=contrib,
        rhs=rhs,
        residual=res,
        relative_residual=abs(res) / (1.0 + abs(lhs) + abs(rhs)),
        sign_flips=list(sign_flips),
    )


# ---------------------------------------------------------------------------
# pointwise identity on a flat chart


def _flat_symbolic(f, alpha):
    """Sympy expressions for d^a f and Delta^a f on the Euclidean plane."""
    F = f.expr
    a1, a2 = alpha.components
    w = (sp.diff(F, X1) + sp.I * F * a1, sp.diff(F, X2) + sp.I * F * a2)
    lap = (
        -(sp.diff(F, X1, 2) + sp.diff(F, X2, 2))
        - 2 * sp.I * (sp.diff(F, X1) * a1 + sp.diff(F, X2) * a2)
        + (a1**2 + a2**2 - sp.I * (sp.diff(a1, X1) + sp.diff(a2, X2))) * F
    )
    return w, lap


@dataclass
class PointwiseTerms:
    lhs: np.ndarray
    rhs: np.ndarray
    terms: dict


def pointwise_bochner_terms(f, alpha, p, fd_step):
    """Both sides of the pointwise identity at flat chart points p (..., 2).

        -1/2 Delta |d^a f|^2 = |Hess^a f|^2 - Re <d^a f, d^a(Delta^a f)> + Ric(d^a f, d^a f)
                               + i (dalpha(w, conj w) - dalpha(conj w, w))
                               + i/2 (<conj f w, delta dalpha> - <f conj w, delta dalpha>)

    The left side uses the 5-point finite-difference Laplacian with step
    ``fd_step``; the right side is evaluated from closed forms.
    """
    if not isinstance(f, TestField):
        f = TestField(f)
    p = np.asarray(p, dtype=float)
    w_expr, lap_expr = _flat_symbolic(f, alpha)
    w_num = [numeric(e) for e in w_expr]
    w2 = numeric(sp.expand(w_expr[0] * sp.conjugate(w_expr[0]) + w_expr[1] * sp.conjugate(w_expr[1])))

    def sq(q):
        return np.real(w2(q))

    h = fd_step
    e1, e2 = np.array([h, 0.0]), np.array([0.0, h])
    lap_fd = (sq(p + e1) + sq(p - e1) + sq(p + e2) + sq(p - e2) - 4 * sq(p)) / h**2
    lhs = 0.5 * lap_fd  # -1/2 Delta with Delta = -(d_xx + d_yy)

    flat = Disk(1.0)
    H = magnetic_hessian(f, alpha, flat, p)
    hess2 = np.sum(np.abs(H) ** 2, axis=(-1, -2))

    L = TestField(lap_expr)
    dL = L.grad(p) + 1j * L.value(p)[..., None] * alpha(p)
    w = np.stack([np.asarray(c(p), dtype=complex) for c in w_num], axis=-1)
    drift = -np.real(np.einsum("...i,...i->...", w, np.conj(dL)))

    b = sp.sympify(alpha.b)
    # delta(b dx^dy) = (d_y b) dx - (d_x b) dy on the flat plane
    ddb = np.stack([numeric(sp.diff(b, X2))(p), -numeric(sp.diff(b, X1))(p)], axis=-1)
    bv = alpha.field(p)
    fv = f.value(p)
    dalpha_ww = bv * (w[..., 0] * np.conj(w[..., 1]) - w[..., 1] * np.conj(w[..., 0]))
    field_term = np.real(1j * (dalpha_ww - (-dalpha_ww)))
    z = np.einsum("...i,...i->...", np.conj(fv)[..., None] * w, ddb)
    coexact = np.real(0.5j * (z - np.conj(z)))

    terms = {"hess": hess2, "drift": drift, "ricci": 0.0 * hess2, "field": field_term, "coexact": coexact}
    rhs = hess2 + drift + field_term + coexact
    return PointwiseTerms(lhs, rhs, terms)


def verify_pointwise_bochner(f, alpha, p, fd_step=1e-3):
    """|lhs - rhs| of the pointwise identity at flat points; O(fd_step^2) when it holds."""
    t = pointwise_bochner_terms(f, alpha, p, fd_step)
    return np.abs(t.lhs - t.rhs)
