"""Model surfaces with boundary, their analytic curvature data, and meshes.

Three model surfaces are supported, each described on a single chart:

* ``Disk(R)`` -- Euclidean disk, Cartesian chart (x, y).
* ``Annulus(r0, r1)`` -- Euclidean annulus, polar chart (r, theta).
* ``SphericalCap(theta0)`` -- cap of the unit sphere around the north pole,
  polar chart (theta, phi); the pole is a mesh vertex.

Sign conventions: the boundary normal is the inward unit normal ``nu`` and
the second fundamental form is ``II(X, Y) = <nabla_X Y, nu>``, so convex
boundaries have positive mean curvature.
"""

from dataclasses import dataclass, field
from math import ceil, pi
from typing import Callable, Dict, List, Tuple

import numpy as np

from .quadrature import interval_rule, periodic_rule, square_rule, triangle_rule

TWO_PI = 2.0 * pi


class GeometryError(ValueError):
    """Invalid geometry parameters or chart points."""


class MeshError(ValueError):
    """Unusable mesh resolution or broken mesh invariants."""


@dataclass(frozen=True)
class BoundaryComponent:
    """A boundary circle parametrized by arclength ``s`` in [0, length).

    All chart quantities are returned as arrays of shape (len(s), 2):
    ``point`` is the chart position, ``tangent`` the unit tangent (chart
    components of d/ds), ``accel`` the coordinate acceleration d^2x/ds^2,
    ``normal`` the inward unit normal. ``curvature`` is the geodesic
    curvature with respect to the inward normal (constant on model circles).
    """

    name: str
    length: float
    curvature: float
    point: Callable[[np.ndarray], np.ndarray]
    tangent: Callable[[np.ndarray], np.ndarray]
    accel: Callable[[np.ndarray], np.ndarray]
    normal: Callable[[np.ndarray], np.ndarray]

    def quadrature(self, n):
        """Trapezoid nodes in arclength (spectrally accurate for smooth data)."""
        return periodic_rule(n, self.length)


@dataclass(frozen=True)
class CurvatureData:
    k: float
    H_min: float
    II_min: float
    H_by_component: Dict[str, float]

    def H(self, component):
        """Mean curvature on a named boundary component."""
        return self.H_by_component[component]


class ModelGeometry:
    """Base class for the model surfaces.

    Subclasses provide closed-form metric, Christoffel symbols and boundary
    parametrizations in their chart coordinates.
    """

    kind: str = ""
    # names accepted for the two chart coordinates in expression strings
    chart_names: Tuple = ("x", "y")
    dimension: int = 2
    gauss_curvature: float = 0.0
    # period of each chart coordinate (None when not periodic)
    periods: Tuple = (None, None)

    # -- chart -----------------------------------------------------------
    def contains(self, p, tol=1e-12):
        raise NotImplementedError

    def metric(self, p):
        """Metric tensor at chart points ``p`` (..., 2) -> (..., 2, 2)."""
        raise NotImplementedError

    def inverse_metric(self, p):
        return np.linalg.inv(self.metric(p))

    def sqrt_det(self, p):
        return np.sqrt(np.linalg.det(self.metric(p)))

    def christoffel(self, p):
        """Gamma[..., k, i, j] = Christoffel symbol Gamma^k_ij."""
        raise NotImplementedError

    def laplacian_drift(self, p):
        """(1/sqrt g) d_i(sqrt g g^{ik}) as an array (..., 2)."""
        raise NotImplementedError

    def embed(self, p):
        """Chart points to 3-D positions, for export and plotting."""
        raise NotImplementedError

    # -- boundary and curvature -------------------------------------------
    def boundary_components(self) -> List[BoundaryComponent]:
        raise NotImplementedError

    def ricci_lower_bound(self):
        return self.gauss_curvature

    def exact_area(self):
        raise NotImplementedError

    def boundary_length(self):
        return sum(c.length for c in self.boundary_components())

    # -- quadrature over the whole chart domain --------------------------
    def area_quadrature(self, order):
        """Chart points and Riemannian area weights covering the domain."""
        raise NotImplementedError

    def euler_characteristic(self):
        return 1

    def describe(self):
        raise NotImplementedError

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.describe().items() if k != "kind")
        return f"{type(self).__name__}({args})"


def _stack(*cols):
    return np.stack(np.broadcast_arrays(*cols), axis=-1)


def _diag2(a, b):
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape + (2, 2))
    out[..., 0, 0] = a
    out[..., 1, 1] = b
    return out


class Disk(ModelGeometry):
    kind = "disk"
    chart_names = ("x", "y")

    def __init__(self, radius=1.0):
        if not radius > 0:
            raise GeometryError(f"disk radius must be positive, got {radius}")
        self.radius = float(radius)

    def describe(self):
        return {"kind": self.kind, "radius": self.radius}

    def contains(self, p, tol=1e-12):
        p = np.asarray(p, dtype=float)
        return np.hypot(p[..., 0], p[..., 1]) <= self.radius * (1.0 + tol)

    def metric(self, p):
        p = np.asarray(p, dtype=float)
        one = np.ones(p.shape[:-1])
        return _diag2(one, one)

    def inverse_metric(self, p):
        return self.metric(p)

    def sqrt_det(self, p):
        return np.ones(np.asarray(p).shape[:-1])

    def christoffel(self, p):
        return np.zeros(np.asarray(p).shape[:-1] + (2, 2, 2))

    def laplacian_drift(self, p):
        return np.zeros(np.asarray(p).shape)

    def embed(self, p):
        p = np.asarray(p, dtype=float)
        return _stack(p[..., 0], p[..., 1], 0.0 * p[..., 0])

    def boundary_components(self):
        R = self.radius

        def point(s):
            a = np.asarray(s) / R
            return _stack(R * np.cos(a), R * np.sin(a))

        def tangent(s):
            a = np.asarray(s) / R
            return _stack(-np.sin(a), np.cos(a))

        def accel(s):
            a = np.asarray(s) / R
            return _stack(-np.cos(a) / R, -np.sin(a) / R)

        def normal(s):
            a = np.asarray(s) / R
            return _stack(-np.cos(a), -np.sin(a))

        return [BoundaryComponent("outer", TWO_PI * R, 1.0 / R, point, tangent, accel, normal)]

    def exact_area(self):
        return pi * self.radius**2

    def area_quadrature(self, order):
        r, wr = interval_rule(0.0, self.radius, order + 1)
        th, wt = periodic_rule(order + 2)
        R, T = np.meshgrid(r, th, indexing="ij")
        pts = _stack(R * np.cos(T), R * np.sin(T)).reshape(-1, 2)
        return pts, (np.outer(wr * r, wt)).ravel()


class Annulus(ModelGeometry):
    kind = "annulus"
    chart_names = ("r", "theta")
    periods = (None, TWO_PI)

    def __init__(self, r0=0.5, r1=1.0):
        if not (0 < r0 < r1):
            raise GeometryError(f"annulus needs 0 < r0 < r1, got r0={r0}, r1={r1}")
        self.r0 = float(r0)
        self.r1 = float(r1)

    def describe(self):
        return {"kind": self.kind, "r0": self.r0, "r1": self.r1}

    def contains(self, p, tol=1e-12):
        r = np.asarray(p, dtype=float)[..., 0]
        return (r >= self.r0 * (1 - tol)) & (r <= self.r1 * (1 + tol))

    def metric(self, p):
        r = np.asarray(p, dtype=float)[..., 0]
        return _diag2(np.ones_like(r), r**2)

    def inverse_metric(self, p):
        r = np.asarray(p, dtype=float)[..., 0]
        return _diag2(np.ones_like(r), 1.0 / r**2)

    def sqrt_det(self, p):
        return np.asarray(p, dtype=float)[..., 0].copy()

    def christoffel(self, p):
        r = np.asarray(p, dtype=float)[..., 0]
        G = np.zeros(r.shape + (2, 2, 2))
        G[..., 0, 1, 1] = -r
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = 1.0 / r
        return G

    def laplacian_drift(self, p):
        r = np.asarray(p, dtype=float)[..., 0]
        return _stack(1.0 / r, 0.0 * r)

    def embed(self, p):
        p = np.asarray(p, dtype=float)
        r, t = p[..., 0], p[..., 1]
        return _stack(r * np.cos(t), r * np.sin(t), 0.0 * r)

    def _circle(self, name, r, inward):
        def point(s):
            s = np.asarray(s, dtype=float)
            return _stack(r + 0.0 * s, s / r)

        def tangent(s):
            s = np.asarray(s, dtype=float)
            return _stack(0.0 * s, 1.0 / r + 0.0 * s)

        def accel(s):
            s = np.asarray(s, dtype=float)
            return _stack(0.0 * s, 0.0 * s)

        def normal(s):
            s = np.asarray(s, dtype=float)
            return _stack(inward + 0.0 * s, 0.0 * s)

        # geodesic curvature of a circle of radius r w.r.t. the inward normal
        return BoundaryComponent(name, TWO_PI * r, -inward / r, point, tangent, accel, normal)

    def boundary_components(self):
        return [self._circle("outer", self.r1, -1.0), self._circle("inner", self.r0, 1.0)]

    def exact_area(self):
        return pi * (self.r1**2 - self.r0**2)

    def euler_characteristic(self):
        return 0

    def area_quadrature(self, order):
        r, wr = interval_rule(self.r0, self.r1, order + 1)
        th, wt = periodic_rule(order + 2)
        R, T = np.meshgrid(r, th, indexing="ij")
        return _stack(R, T).reshape(-1, 2), np.outer(wr * r, wt).ravel()


class SphericalCap(ModelGeometry):
    """Geodesic ball of polar radius ``theta0`` < pi/2 on the unit sphere."""

    kind = "cap"
    chart_names = ("theta", "phi")
    gauss_curvature = 1.0
    periods = (None, TWO_PI)

    def __init__(self, theta0=pi / 4):
        if not (0 < theta0 < pi / 2):
            raise GeometryError(f"spherical cap needs 0 < theta0 < pi/2, got {theta0}")
        self.theta0 = float(theta0)

    def describe(self):
        return {"kind": self.kind, "theta0": self.theta0}

    def contains(self, p, tol=1e-12):
        t = np.asarray(p, dtype=float)[..., 0]
        return (t >= 0.0) & (t <= self.theta0 * (1 + tol))

    def metric(self, p):
        t = np.asarray(p, dtype=float)[..., 0]
        return _diag2(np.ones_like(t), np.sin(t) ** 2)

    def inverse_metric(self, p):
        t = np.asarray(p, dtype=float)[..., 0]
        return _diag2(np.ones_like(t), 1.0 / np.sin(t) ** 2)

    def sqrt_det(self, p):
        return np.sin(np.asarray(p, dtype=float)[..., 0])

    def christoffel(self, p):
        t = np.asarray(p, dtype=float)[..., 0]
        G = np.zeros(t.shape + (2, 2, 2))
        G[..., 0, 1, 1] = -np.sin(t) * np.cos(t)
        G[..., 1, 0, 1] = G[..., 1, 1, 0] = np.cos(t) / np.sin(t)
        return G

    def laplacian_drift(self, p):
        t = np.asarray(p, dtype=float)[..., 0]
        return _stack(np.cos(t) / np.sin(t), 0.0 * t)

    def embed(self, p):
        p = np.asarray(p, dtype=float)
        t, f = p[..., 0], p[..., 1]
        return _stack(np.sin(t) * np.cos(f), np.sin(t) * np.sin(f), np.cos(t))

    def boundary_components(self):
        t0 = self.theta0
        st = np.sin(t0)

        def point(s):
            s = np.asarray(s, dtype=float)
            return _stack(t0 + 0.0 * s, s / st)

        def tangent(s):
            s = np.asarray(s, dtype=float)
            return _stack(0.0 * s, 1.0 / st + 0.0 * s)

        def accel(s):
            s = np.asarray(s, dtype=float)
            return _stack(0.0 * s, 0.0 * s)

        def normal(s):
            s = np.asarray(s, dtype=float)
            return _stack(-1.0 + 0.0 * s, 0.0 * s)

        return [BoundaryComponent("rim", TWO_PI * st, np.cos(t0) / st, point, tangent, accel, normal)]

    def ricci_lower_bound(self):
        return 1.0

    def exact_area(self):
        return TWO_PI * (1.0 - np.cos(self.theta0))

    def area_quadrature(self, order):
        t, wt = interval_rule(0.0, self.theta0, 2 * order + 4)
        ph, wp = periodic_rule(order + 2)
        T, P = np.meshgrid(t, ph, indexing="ij")
        return _stack(T, P).reshape(-1, 2), np.outer(wt * np.sin(t), wp).ravel()


GEOMETRIES = {"disk": Disk, "annulus": Annulus, "cap": SphericalCap}


def make_geometry(spec):
    """Build a geometry from a config mapping such as ``{"kind": "disk", "radius": 1}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in GEOMETRIES:
        raise GeometryError(f"unknown geometry kind {kind!r}; expected one of {sorted(GEOMETRIES)}")
    try:
        return GEOMETRIES[kind](**spec)
    except TypeError as exc:
        raise GeometryError(f"bad parameters for {kind}: {exc}") from None


def metric_at(geometry, p):
    """Metric tensor g(p) at a single chart point, as a 2x2 array."""
    p = np.asarray(p, dtype=float)
    if p.shape != (2,):
        raise GeometryError(f"expected a single chart point, got shape {p.shape}")
    if not geometry.contains(p):
        raise GeometryError(f"point {tuple(p)} lies outside the chart domain of {geometry!r}")
    return geometry.metric(p)


def curvature_data(geometry):
    """Analytic curvature data: Ricci lower bound k, mean curvature per boundary circle."""
    comps = geometry.boundary_components()
    H = {c.name: float(c.curvature) for c in comps}
    H_min = min(H.values())
    # on a surface II restricted to the boundary curve is the geodesic curvature
    return CurvatureData(k=float(geometry.ricci_lower_bound()), H_min=H_min, II_min=H_min, H_by_component=H)


# ---------------------------------------------------------------------------
# meshes


@dataclass(frozen=True)
class ElementQuadrature:
    """Per-element quadrature data on a mesh.

    points  (F, Q, 2) chart coordinates
    weights (F, Q)    chart measure (reference weight times Jacobian)
    phi     (F, Q, 3) basis values of the three element vertices
    dphi    (F, Q, 3, 2) chart gradients of the basis functions
    """

    points: np.ndarray
    weights: np.ndarray
    phi: np.ndarray
    dphi: np.ndarray


@dataclass(frozen=True, eq=False)
class Mesh:
    """Conforming triangulation of a chart domain.

    ``tri_coords`` holds each element's vertex chart coordinates with
    periodic coordinates unwrapped, so every element is a genuine planar
    triangle in the chart. Elements flagged ``collapsed`` touch a polar
    coordinate singularity through their first vertex: they cover the chart
    rectangle [0, t1] x [p0, p1] with the edge t = 0 collapsed to the pole.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: Tuple[str, ...]
    edge_arclength: np.ndarray
    tri_coords: np.ndarray
    collapsed: np.ndarray
    h: float
    geometry: ModelGeometry = field(repr=False)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def edges(self):
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0, return_counts=True)

    def euler_characteristic(self):
        edges, _ = self.edges()
        return self.n_vertices - len(edges) + self.n_triangles

    def boundary_vertices(self):
        return np.unique(self.boundary_edges)

    def signed_chart_areas(self):
        c = self.tri_coords
        a = c[:, 1] - c[:, 0]
        b = c[:, 2] - c[:, 0]
        return 0.5 * (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0])

    def max_edge_length(self):
        c = self.tri_coords
        d = np.concatenate([c[:, 1] - c[:, 0], c[:, 2] - c[:, 1], c[:, 0] - c[:, 2]])
        return float(np.max(np.hypot(d[:, 0], d[:, 1])))

    def check(self):
        """Raise MeshError unless all mesh invariants hold."""
        edges, counts = self.edges()
        bnd = {tuple(sorted(e)) for e in self.boundary_edges.tolist()}
        if len(bnd) != len(self.boundary_edges):
            raise MeshError("duplicate boundary edges")
        for e, c in zip(map(tuple, edges.tolist()), counts.tolist()):
            want = 1 if e in bnd else 2
            if c != want:
                raise MeshError(f"edge {e} belongs to {c} triangles, expected {want}")
        chi = self.euler_characteristic()
        if chi != self.geometry.euler_characteristic():
            raise MeshError(f"Euler characteristic {chi}, expected {self.geometry.euler_characteristic()}")
        if np.any(self.signed_chart_areas() <= 0):
            bad = int(np.argmin(self.signed_chart_areas()))
            raise MeshError(f"element {bad} is not positively oriented")
        return True

    def riemannian_area(self, order=6):
        q = self.quadrature(order)
        return float(np.sum(q.weights * self.geometry.sqrt_det(q.points)))

    def boundary_chord_length(self):
        """Boundary length measured along the straight chart edges (O(h^2) to exact on the disk)."""
        total = 0.0
        x, w = interval_rule(0.0, 1.0, 8)
        for a, b in self.boundary_edges:
            pa, pb = self.vertices[a].copy(), self.vertices[b].copy()
            d = pb - pa
            for i, per in enumerate(self.geometry.periods):
                if per is not None:
                    d[i] = (d[i] + per / 2) % per - per / 2
            pts = pa + np.outer(x, d)
            g = self.geometry.metric(pts)
            speed = np.sqrt(np.einsum("qi,qij,qj->q", np.broadcast_to(d, pts.shape), g, np.broadcast_to(d, pts.shape)))
            total += float(np.sum(w * speed))
        return total

    def quadrature(self, order):
        """Element quadrature (points, chart weights, P1 basis values and gradients)."""
        F = self.n_triangles
        tri = ~self.collapsed
        c = self.tri_coords

        pts_t, w_t = triangle_rule(order)
        Q = len(w_t)
        pts_c, w_c = square_rule(order + 2)
        Qc = len(w_c)
        Qmax = max(Q, Qc)

        points = np.zeros((F, Qmax, 2))
        weights = np.zeros((F, Qmax))
        phi = np.zeros((F, Qmax, 3))
        dphi = np.zeros((F, Qmax, 3, 2))

        if np.any(tri):
            ct = c[tri]
            J = np.stack([ct[:, 1] - ct[:, 0], ct[:, 2] - ct[:, 0]], axis=-1)  # (Ft, 2, 2), columns
            det = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
            Jinv = np.linalg.inv(J)
            ref_grad = np.array([[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]])
            grads = np.einsum("aj,fjk->fak", ref_grad, Jinv)  # (Ft, 3, 2)
            lam = np.column_stack([1.0 - pts_t.sum(1), pts_t[:, 0], pts_t[:, 1]])
            points[tri, :Q] = ct[:, None, 0] + np.einsum("fij,qj->fqi", J, pts_t)
            weights[tri, :Q] = np.abs(det)[:, None] * w_t[None, :]
            phi[tri, :Q] = lam[None]
            dphi[tri, :Q] = grads[:, None]

        if np.any(~tri):
            cc = c[~tri]
            t1 = cc[:, 1, 0]
            p0 = cc[:, 1, 1]
            dp = cc[:, 2, 1] - cc[:, 1, 1]
            s, t = pts_c[:, 0], pts_c[:, 1]
            points[~tri, :Qc, 0] = t1[:, None] * s[None]
            points[~tri, :Qc, 1] = p0[:, None] + dp[:, None] * t[None]
            weights[~tri, :Qc] = (t1 * dp)[:, None] * w_c[None]
            phi[~tri, :Qc] = np.column_stack([1.0 - s, s * (1.0 - t), s * t])[None]
            g = np.zeros((int(np.sum(~tri)), Qc, 3, 2))
            g[:, :, 0, 0] = -1.0 / t1[:, None]
            g[:, :, 1, 0] = (1.0 - t)[None] / t1[:, None]
            g[:, :, 1, 1] = -s[None] / dp[:, None]
            g[:, :, 2, 0] = t[None] / t1[:, None]
            g[:, :, 2, 1] = s[None] / dp[:, None]
            dphi[~tri, :Qc] = g

        # padded slots carry zero weight; keep their points inside the element
        for sel, n in ((tri, Q), (~tri, Qc)):
            if n < Qmax and np.any(sel):
                points[sel, n:] = points[sel, :1]
        return ElementQuadrature(points, weights, phi, dphi)

    def to_off(self):
        """OFF text with embedded 3-D vertex positions."""
        xyz = self.geometry.embed(self.vertices)
        lines = ["OFF", f"{self.n_vertices} {self.n_triangles} 0"]
        lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in xyz]
        lines += [f"3 {a} {b} {c}" for a, b, c in self.triangles]
        return "\n".join(lines) + "\n"

    def info(self):
        return {
            "geometry": self.geometry.describe(),
            "h": self.h,
            "vertices": self.n_vertices,
            "triangles": self.n_triangles,
            "boundary_edges": len(self.boundary_edges),
            "euler_characteristic": self.euler_characteristic(),
            "max_chart_edge": self.max_edge_length(),
        }


def _count(length, h):
    return max(1, ceil(length / h - 1e-9))


def _disk_mesh(geom, h):
    R = geom.radius
    N = _count(R, h)
    verts = [(0.0, 0.0)]
    rings = [[0]]
    for j in range(1, N + 1):
        n = 6 * j
        a = TWO_PI * np.arange(n) / n
        start = len(verts)
        verts.extend(zip(R * j / N * np.cos(a), R * j / N * np.sin(a)))
        rings.append(list(range(start, start + n)))
    verts = np.array(verts)

    tris = []
    for j in range(1, N + 1):
        outer = rings[j]
        no = len(outer)
        if j == 1:
            tris += [(0, outer[k], outer[(k + 1) % no]) for k in range(no)]
            continue
        inner = rings[j - 1]
        ni = len(inner)
        i = k = 0
        while i < ni or k < no:
            # advance along the ring whose step closes the shorter new edge
            if k < no and i < ni:
                d_out = np.hypot(*(verts[outer[(k + 1) % no]] - verts[inner[i]]))
                d_in = np.hypot(*(verts[inner[(i + 1) % ni]] - verts[outer[k]]))
                take_outer = d_out < d_in - 1e-12
            else:
                take_outer = k < no
            if take_outer:
                tris.append((inner[i % ni], outer[k], outer[(k + 1) % no]))
                k += 1
            else:
                tris.append((inner[i % ni], outer[k % no], inner[(i + 1) % ni]))
                i += 1
    tris = np.array(tris, dtype=np.int64)
    coords = verts[tris]

    ring = rings[N]
    bedges = np.array([(ring[k], ring[(k + 1) % len(ring)]) for k in range(len(ring))], dtype=np.int64)
    arclen = np.full(len(bedges), TWO_PI * R / len(ring))
    tags = ("outer",) * len(bedges)
    return verts, tris, coords, np.zeros(len(tris), bool), bedges, tags, arclen


def _polar_grid(nr, nt, r_nodes, with_pole):
    """Structured triangles on a periodic (radial x angular) grid.

    Returns triangles over vertex ids and their unwrapped chart coordinates.
    Radial index 0 is either a true circle or (``with_pole``) the pole.
    """
    dt = TWO_PI / nt

    def vid(i, j):
        j %= nt
        if with_pole:
            return 0 if i == 0 else 1 + (i - 1) * nt + j
        return i * nt + j

    tris, coords, collapsed = [], [], []
    for i in range(nr):
        for j in range(nt):
            ra, rb = r_nodes[i], r_nodes[i + 1]
            ta, tb = j * dt, (j + 1) * dt
            if with_pole and i == 0:
                tris.append((vid(0, 0), vid(1, j), vid(1, j + 1)))
                coords.append([(0.0, ta), (rb, ta), (rb, tb)])
                collapsed.append(True)
                continue
            tris.append((vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)))
            coords.append([(ra, ta), (rb, ta), (rb, tb)])
            tris.append((vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)))
            coords.append([(ra, ta), (rb, tb), (ra, tb)])
            collapsed += [False, False]
    return np.array(tris, dtype=np.int64), np.array(coords), np.array(collapsed), vid


def _annulus_mesh(geom, h):
    nr = _count(geom.r1 - geom.r0, h)
    nt = max(8, _count(TWO_PI * max(geom.r1, 1.0), h))
    r = np.linspace(geom.r0, geom.r1, nr + 1)
    t = TWO_PI * np.arange(nt) / nt
    R, T = np.meshgrid(r, t, indexing="ij")
    verts = np.column_stack([R.ravel(), T.ravel()])
    tris, coords, collapsed, vid = _polar_grid(nr, nt, r, with_pole=False)
    inner = [(vid(0, j + 1), vid(0, j)) for j in range(nt)]
    outer = [(vid(nr, j), vid(nr, j + 1)) for j in range(nt)]
    bedges = np.array(outer + inner, dtype=np.int64)
    arclen = np.concatenate([np.full(nt, geom.r1 * TWO_PI / nt), np.full(nt, geom.r0 * TWO_PI / nt)])
    tags = ("outer",) * nt + ("inner",) * nt
    return verts, tris, coords, collapsed, bedges, tags, arclen


def _cap_mesh(geom, h):
    nr = _count(geom.theta0, h)
    nt = max(8, _count(TWO_PI, h))
    r = np.linspace(0.0, geom.theta0, nr + 1)
    t = TWO_PI * np.arange(nt) / nt
    R, T = np.meshgrid(r[1:], t, indexing="ij")
    verts = np.vstack([[0.0, 0.0], np.column_stack([R.ravel(), T.ravel()])])
    tris, coords, collapsed, vid = _polar_grid(nr, nt, r, with_pole=True)
    bedges = np.array([(vid(nr, j), vid(nr, j + 1)) for j in range(nt)], dtype=np.int64)
    arclen = np.full(nt, np.sin(geom.theta0) * TWO_PI / nt)
    return verts, tris, coords, collapsed, bedges, ("rim",) * nt, arclen


_BUILDERS = {"disk": _disk_mesh, "annulus": _annulus_mesh, "cap": _cap_mesh}


def build_mesh(geometry, h):
    """Structured triangulation of ``geometry`` with target chart edge length ``h``.

    Refining h -> h/2 multiplies the triangle count by about four.
    """
    if not (np.isfinite(h) and h > 0):
        raise MeshError(f"mesh size must be a positive number, got {h}")
    verts, tris, coords, collapsed, bedges, tags, arclen = _BUILDERS[geometry.kind](geometry, h)
    if len(tris) < 8:
        raise MeshError(f"h={h} gives only {len(tris)} triangles on {geometry!r}; need at least 8")

    # orient every chart triangle counter-clockwise
    a = coords[:, 1] - coords[:, 0]
    b = coords[:, 2] - coords[:, 0]
    neg = (a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]) < 0
    if np.any(neg & collapsed):
        raise MeshError("collapsed polar cell with negative orientation")
    tris[neg] = tris[neg][:, [0, 2, 1]]
    coords[neg] = coords[neg][:, [0, 2, 1]]

    return Mesh(
        vertices=verts,
        triangles=tris,
        boundary_edges=bedges,
        boundary_tags=tuple(tags),
        edge_arclength=arclen,
        tri_coords=coords,
        collapsed=collapsed,
        h=float(h),
        geometry=geometry,
    )
