"""Magnetic potentials as analytic real 1-forms on a chart.

A potential is ``alpha = a1 dx1 + a2 dx2`` in the chart coordinates of a
model geometry, together with the closed-form coefficient ``b`` of its
exterior derivative, ``d alpha = b dx1 ^ dx2``. Expressions are held as
sympy objects so that derivatives of any order stay exact; numeric
evaluation goes through vectorized lambdified callables.

2-form norms use |w|^2 = sum_{i<j} w(e_i, e_j)^2 over an orthonormal frame,
so on a surface |d alpha| = |b| / sqrt(det g).
"""

from dataclasses import dataclass, field
from functools import cached_property
from math import pi

import numpy as np
import sympy as sp

X1, X2 = sp.symbols("x1 x2", real=True)
CHART_SYMBOLS = (X1, X2)


class PotentialError(ValueError):
    pass


def as_expr(value, names=("x", "y")):
    """Coerce numbers, strings and sympy objects into chart expressions.

    Strings may use x1, x2 or the chart's own coordinate ``names``, e.g.
    ("r", "theta") on the annulus and ("theta", "phi") on the cap.
    """
    if isinstance(value, str):
        local = {"x1": X1, "x2": X2, names[0]: X1, names[1]: X2}
        value = sp.sympify(value, locals=local)
    expr = sp.sympify(value)
    extra = expr.free_symbols - {X1, X2}
    if extra:
        raise PotentialError(f"expression {expr} uses symbols {extra} besides the chart coordinates")
    return expr


def numeric(expr):
    """Vectorized evaluator p -> expr(p) for chart points of shape (..., 2)."""
    f = sp.lambdify((X1, X2), expr, modules="numpy")

    def evaluate(p):
        p = np.asarray(p, dtype=float)
        return np.broadcast_to(f(p[..., 0], p[..., 1]), p.shape[:-1]).copy()

    return evaluate


@dataclass(frozen=True, eq=False)
class MagneticPotential:
    """Real 1-form alpha = a1 dx1 + a2 dx2 with closed-form field b."""

    a1: sp.Expr
    a2: sp.Expr
    b: sp.Expr
    family: str = "Custom"
    params: dict = field(default_factory=dict)

    @classmethod
    def from_exprs(cls, a1, a2, b=None, family="Custom", names=("x", "y"), **params):
        a1, a2 = as_expr(a1, names), as_expr(a2, names)
        if b is None:
            b = sp.simplify(sp.diff(a2, X1) - sp.diff(a1, X2))
        return cls(a1, a2, as_expr(b, names), family, dict(params))

    @property
    def components(self):
        return (self.a1, self.a2)

    @property
    def is_zero(self):
        return self.a1 == 0 and self.a2 == 0

    @cached_property
    def _alpha(self):
        return numeric(self.a1), numeric(self.a2)

    @cached_property
    def _dalpha(self):
        return [[numeric(sp.diff(a, x)) for a in self.components] for x in CHART_SYMBOLS]

    @cached_property
    def _field(self):
        return numeric(self.b)

    def __call__(self, p):
        """Components (..., 2) at chart points."""
        f1, f2 = self._alpha
        return np.stack([f1(p), f2(p)], axis=-1)

    def jacobian(self, p):
        """D[..., i, j] = d_i alpha_j."""
        return np.stack([np.stack([f(p) for f in row], axis=-1) for row in self._dalpha], axis=-2)

    def field(self, p):
        """Coefficient b of d alpha = b dx1 ^ dx2."""
        return self._field(p)

    def field_norm(self, geometry, p):
        """Pointwise g-norm |d alpha| = |b| / sqrt(det g)."""
        return np.abs(self.field(p)) / geometry.sqrt_det(p)

    def curl_fd(self, p, step=1e-5):
        """Central-difference d1 a2 - d2 a1, independent of the closed form b."""
        p = np.asarray(p, dtype=float)
        e1 = np.array([step, 0.0])
        e2 = np.array([0.0, step])
        f1, f2 = self._alpha
        return (f2(p + e1) - f2(p - e1)) / (2 * step) - (f1(p + e2) - f1(p - e2)) / (2 * step)

    def describe(self):
        return {"family": self.family, "params": dict(self.params), "a1": str(self.a1), "a2": str(self.a2), "b": str(self.b)}

    def __repr__(self):
        return f"MagneticPotential({self.family}, alpha=({self.a1}) dx1 + ({self.a2}) dx2, b={self.b})"


def zero():
    return MagneticPotential(sp.Integer(0), sp.Integer(0), sp.Integer(0), "Zero")


def uniform_field(geometry, strength=1.0):
    """Potential whose field is ``strength`` times the Riemannian area form."""
    B = sp.nsimplify(strength) if isinstance(strength, int) else sp.Float(strength)
    kind = geometry.kind
    if kind == "disk":
        a1, a2, b = -B * X2 / 2, B * X1 / 2, B
    elif kind == "annulus":
        a1, a2, b = sp.Integer(0), B * X1**2 / 2, B * X1
    elif kind == "cap":
        a1, a2, b = sp.Integer(0), B * (1 - sp.cos(X1)), B * sp.sin(X1)
    else:
        raise PotentialError(f"no uniform-field potential for geometry {kind!r}")
    return MagneticPotential(a1, a2, b, "UniformField", {"b": float(strength)})


def aharonov_bohm(geometry, beta):
    """Closed potential beta dtheta on the annulus (normalized flux beta)."""
    if geometry.kind != "annulus":
        raise PotentialError("Aharonov-Bohm potential needs the annulus (the disk chart contains the origin)")
    return MagneticPotential(sp.Integer(0), sp.Float(beta), sp.Integer(0), "AharonovBohm",
                             {"beta": float(beta), "raw_flux": 2 * pi * float(beta)})


def polynomial(table):
    """Expression sum c x1^i x2^j from rows (i, j, c)."""
    return sp.Add(*[sp.Float(c) * X1**int(i) * X2**int(j) for i, j, c in table]) if table else sp.Integer(0)


def custom(alpha1, alpha2, b=None, names=("x", "y")):
    """Potential from expressions or polynomial coefficient tables [(i, j, c), ...]."""
    conv = [polynomial(v) if isinstance(v, (list, tuple)) else v for v in (alpha1, alpha2, b)]
    return MagneticPotential.from_exprs(*conv, family="Custom", names=names)


def gauge_transform(alpha, chi, names=("x", "y")):
    """alpha + d chi for a single-valued chi; the field expression is reused unchanged."""
    chi = as_expr(chi, names)
    return MagneticPotential(
        sp.expand(alpha.a1 + sp.diff(chi, X1)),
        sp.expand(alpha.a2 + sp.diff(chi, X2)),
        alpha.b,
        alpha.family if alpha.family != "Zero" else "Custom",
        {**alpha.params, "gauge": str(chi)},
    )


def make_potential(spec, geometry):
    """Build a potential from a config mapping, e.g. ``{"family": "UniformField", "b": 1}``."""
    spec = dict(spec or {"family": "Zero"})
    fam = spec.get("family", "Zero")
    if fam == "Zero":
        alpha = zero()
    elif fam == "UniformField":
        alpha = uniform_field(geometry, spec.get("b", 1.0))
    elif fam == "AharonovBohm":
        alpha = aharonov_bohm(geometry, spec.get("beta", 0.0))
    elif fam == "Custom":
        alpha = custom(spec.get("alpha1", []), spec.get("alpha2", []), spec.get("b"), geometry.chart_names)
    else:
        raise PotentialError(f"unknown potential family {fam!r}")
    if spec.get("gauge"):
        alpha = gauge_transform(alpha, spec["gauge"], geometry.chart_names)
    return alpha


def sup_norm_dalpha(alpha, geometry, points=None, order=12):
    """Max of |d alpha|_g over quadrature points (default: a rule covering the chart)."""
    if points is None:
        points, _ = geometry.area_quadrature(order)
    return float(np.max(alpha.field_norm(geometry, np.asarray(points)), initial=0.0))


@dataclass(frozen=True)
class ClosedCurve:
    """Closed chart curve t in [0, 1] -> point, with its velocity.

    ``periods`` gives the period of each chart coordinate (None if not
    periodic); closure is checked modulo these periods.
    """

    point: object
    velocity: object
    periods: tuple = (None, None)


@dataclass(frozen=True)
class Flux:
    raw: float
    normalized: float


def chart_circle(radius, center=(0.0, 0.0), phase=0.0, speed=1):
    """Circle in a Cartesian chart, traversed ``speed`` times with a phase shift."""
    cx, cy = center

    def point(t):
        a = 2 * pi * speed * np.asarray(t) + phase
        return np.stack([cx + radius * np.cos(a), cy + radius * np.sin(a)], axis=-1)

    def velocity(t):
        a = 2 * pi * speed * np.asarray(t) + phase
        return 2 * pi * speed * radius * np.stack([-np.sin(a), np.cos(a)], axis=-1)

    return ClosedCurve(point, velocity)


def polar_circle(radius, warp=0.0):
    """The circle r = radius in a polar chart; ``warp`` reparametrizes the angle."""

    def angle(t):
        t = np.asarray(t)
        return 2 * pi * t + warp * np.sin(2 * pi * t)

    def point(t):
        a = angle(t)
        return np.stack([radius + 0.0 * a, a], axis=-1)

    def velocity(t):
        t = np.asarray(t)
        da = 2 * pi + warp * 2 * pi * np.cos(2 * pi * t)
        return np.stack([0.0 * da, da], axis=-1)

    return ClosedCurve(point, velocity, (None, 2 * pi))


def flux(alpha, curve, n=256, tol=1e-12):
    """Line integral of alpha around a closed curve by pullback quadrature.

    Uses the trapezoid rule in the curve parameter, which is spectrally
    accurate for smooth periodic pullbacks.
    """
    a, b = curve.point(np.array([0.0, 1.0]))
    gap = b - a
    for i, per in enumerate(curve.periods):
        if per is not None:
            gap[i] = (gap[i] + per / 2) % per - per / 2
    if np.max(np.abs(gap)) > tol:
        raise PotentialError(f"curve is not closed: endpoint gap {gap}")
    t = np.arange(n) / n
    pts = curve.point(t)
    vel = curve.velocity(t)
    raw = float(np.sum(np.einsum("qi,qi->q", alpha(pts), vel)) / n)
    return Flux(raw, raw / (2 * pi))
