"""Vertex-described convex polytopes in dimensions 1 to 3.

Hulls are built incrementally.  Orientation signs come from a floating-point
determinant guarded by an error bound; when the bound does not certify the sign
the determinant is recomputed exactly with rationals, so coplanar inputs such as
cube corners produce exact flat facets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import Degenerate, DimensionOverflow, OriginNotInterior

_EPS = np.finfo(float).eps
_O3_BOUND = (7.0 + 56.0 * _EPS) * _EPS
_O2_BOUND = (3.0 + 16.0 * _EPS) * _EPS
COPLANAR_TOL = 1e-10


def orient2d(a, b, c) -> int:
    """Sign of ``(b - a) x (c - a)``."""
    l = (b[0] - a[0]) * (c[1] - a[1])
    r = (b[1] - a[1]) * (c[0] - a[0])
    det = l - r
    if abs(det) > _O2_BOUND * (abs(l) + abs(r)):
        return 1 if det > 0 else -1
    fa = [Fraction(float(x)) for x in a]
    fb = [Fraction(float(x)) for x in b]
    fc = [Fraction(float(x)) for x in c]
    ex = (fb[0] - fa[0]) * (fc[1] - fa[1]) - (fb[1] - fa[1]) * (fc[0] - fa[0])
    return (ex > 0) - (ex < 0)


def orient3d(a, b, c, d) -> int:
    """Sign of ``det[b - a, c - a, d - a]`` (positive when d is above abc by the right-hand rule)."""
    u = (b[0] - a[0], b[1] - a[1], b[2] - a[2])
    v = (c[0] - a[0], c[1] - a[1], c[2] - a[2])
    w = (d[0] - a[0], d[1] - a[1], d[2] - a[2])
    t1 = u[0] * (v[1] * w[2] - v[2] * w[1])
    t2 = u[1] * (v[2] * w[0] - v[0] * w[2])
    t3 = u[2] * (v[0] * w[1] - v[1] * w[0])
    det = t1 + t2 + t3
    perm = (abs(u[0]) * (abs(v[1] * w[2]) + abs(v[2] * w[1]))
            + abs(u[1]) * (abs(v[2] * w[0]) + abs(v[0] * w[2]))
            + abs(u[2]) * (abs(v[0] * w[1]) + abs(v[1] * w[0])))
    if abs(det) > _O3_BOUND * perm:
        return 1 if det > 0 else -1
    fa, fb, fc, fd = ([Fraction(float(x)) for x in p] for p in (a, b, c, d))
    U = [fb[i] - fa[i] for i in range(3)]
    V = [fc[i] - fa[i] for i in range(3)]
    W = [fd[i] - fa[i] for i in range(3)]
    ex = (U[0] * (V[1] * W[2] - V[2] * W[1]) + U[1] * (V[2] * W[0] - V[0] * W[2])
          + U[2] * (V[0] * W[1] - V[1] * W[0]))
    return (ex > 0) - (ex < 0)


@dataclass(frozen=True)
class Facet:
    ring: tuple[int, ...]
    normal: np.ndarray
    offset: float


@dataclass(frozen=True, eq=False)
class PolytopeV:
    dim: int
    vertices: np.ndarray
    facets: tuple[Facet, ...]

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def n_edges(self) -> int:
        if self.dim == 3:
            return sum(len(f.ring) for f in self.facets) // 2
        if self.dim == 2:
            return len(self.facets)
        return 1

    def euler_characteristic(self) -> int:
        return self.n_vertices - self.n_edges + self.n_facets

    def origin_interior(self, tol: float = 1e-12) -> bool:
        scale = np.abs(self.vertices).max()
        return all(f.offset > tol * scale for f in self.facets)


def _hull_1d(pts: np.ndarray) -> PolytopeV:
    lo, hi = int(np.argmin(pts[:, 0])), int(np.argmax(pts[:, 0]))
    if pts[lo, 0] == pts[hi, 0]:
        raise Degenerate("segment needs two distinct points")
    verts = pts[[lo, hi]]
    facets = (Facet((0,), np.array([-1.0]), float(-verts[0, 0])),
              Facet((1,), np.array([1.0]), float(verts[1, 0])))
    return PolytopeV(1, verts, facets)


def _turn(a, b, c, slack: float) -> int:
    if slack == 0.0:
        return orient2d(a, b, c)
    det = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
    return 1 if det > slack else 0


def _monotone_chain(pts: np.ndarray, slack: float = 0.0) -> list[int]:
    """Counterclockwise hull indices; turns below ``slack`` count as straight."""
    order = sorted(range(len(pts)), key=lambda i: (pts[i][0], pts[i][1]))

    def half(seq):
        out = []
        for i in seq:
            while len(out) >= 2 and _turn(pts[out[-2]], pts[out[-1]], pts[i], slack) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = half(order)
    upper = half(order[::-1])
    return lower[:-1] + upper[:-1]


def _hull_2d(pts: np.ndarray) -> PolytopeV:
    ring = _monotone_chain(pts)
    if len(ring) < 3:
        raise Degenerate("planar hull needs three affinely independent points")
    verts = pts[ring]
    facets = []
    m = len(verts)
    for k in range(m):
        p, q = verts[k], verts[(k + 1) % m]
        e = q - p
        nrm = np.array([e[1], -e[0]]) / np.hypot(e[0], e[1])
        facets.append(Facet((k, (k + 1) % m), nrm, float(nrm @ p)))
    return PolytopeV(2, verts, tuple(facets))


def _initial_simplex(pts: np.ndarray) -> list[int]:
    i0 = 0
    i1 = int(np.argmax(np.linalg.norm(pts - pts[i0], axis=1)))
    if np.allclose(pts[i1], pts[i0], atol=0.0, rtol=0.0):
        raise Degenerate("all points coincide")
    d = pts[i1] - pts[i0]
    cross = np.cross(pts - pts[i0], d)
    i2 = int(np.argmax(np.linalg.norm(cross, axis=1)))
    nrm = np.cross(pts[i1] - pts[i0], pts[i2] - pts[i0])
    if not np.any(nrm):
        raise Degenerate("points are collinear")
    i3 = int(np.argmax(np.abs((pts - pts[i0]) @ nrm)))
    if orient3d(pts[i0], pts[i1], pts[i2], pts[i3]) == 0:
        for i3 in range(len(pts)):
            if orient3d(pts[i0], pts[i1], pts[i2], pts[i3]) != 0:
                break
        else:
            raise Degenerate("points are coplanar")
    return [i0, i1, i2, i3]


def _triangulated_hull_3d(pts: np.ndarray) -> list[tuple[int, int, int]]:
    i0, i1, i2, i3 = _initial_simplex(pts)
    if orient3d(pts[i0], pts[i1], pts[i2], pts[i3]) > 0:
        i1, i2 = i2, i1
    # faces oriented so that orient3d(face, p) > 0 means p is outside
    faces = {(i0, i1, i2), (i0, i3, i1), (i1, i3, i2), (i2, i3, i0)}
    used = {i0, i1, i2, i3}
    for p in range(len(pts)):
        if p in used:
            continue
        visible = [f for f in faces if orient3d(pts[f[0]], pts[f[1]], pts[f[2]], pts[p]) > 0]
        if not visible:
            continue
        edges = {}
        for a, b, c in visible:
            for e in ((a, b), (b, c), (c, a)):
                edges[e] = edges.get(e, 0) + 1
        horizon = [e for e in edges if (e[1], e[0]) not in edges]
        for f in visible:
            faces.discard(f)
        for a, b in horizon:
            faces.add((a, b, p))
        used.add(p)
    return list(faces)


def _plane_basis(normal: np.ndarray):
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(normal, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(normal, e1)


def _tri_plane(pts, tri):
    a, b, c = (pts[i] for i in tri)
    nrm = np.cross(b - a, c - a)
    size = np.linalg.norm(nrm)
    return (nrm / size if size > 0 else nrm), float(size), a


def _hull_3d(pts: np.ndarray, tol: float = COPLANAR_TOL) -> PolytopeV:
    """Exact incremental hull, then triangles within ``tol * scale`` of a common plane merge.

    The merge tolerance absorbs the rounding in computed inputs such as polar
    vertices, whose facets are coplanar only up to a few ulps.
    """
    tris = _triangulated_hull_3d(pts)
    scale = float(np.abs(pts).max())
    planes = [_tri_plane(pts, t) for t in tris]
    edge_owner = {}
    for t, (a, b, c) in enumerate(tris):
        for e in ((a, b), (b, c), (c, a)):
            edge_owner[e] = t
    parent = list(range(len(tris)))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for t, (a, b, c) in enumerate(tris):
        for u, v in ((a, b), (b, c), (c, a)):
            nb = edge_owner[(v, u)]
            if nb < t:
                continue
            # test against the plane of the better-conditioned triangle
            big, other = (t, nb) if planes[t][1] >= planes[nb][1] else (nb, t)
            nrm, _, base = planes[big]
            apex = [x for x in tris[other] if x not in (u, v)][0]
            if abs(nrm @ (pts[apex] - base)) <= tol * scale:
                parent[find(nb)] = find(t)

    groups = {}
    for t in range(len(tris)):
        groups.setdefault(find(t), []).append(tris[t])
    idx_all = sorted({i for t in tris for i in t})
    inside = pts[idx_all].mean(axis=0)
    raw_facets = []
    for root in sorted(groups):
        tlist = groups[root]
        idx = sorted({i for t in tlist for i in t})
        sub = pts[idx]
        centre = sub.mean(axis=0)
        if len(tlist) == 1:
            nrm = planes[root][0]
        else:
            nrm = np.linalg.svd(sub - centre)[2][-1]
        if nrm @ (centre - inside) < 0:
            nrm = -nrm
        e1, e2 = _plane_basis(nrm)
        flat = np.column_stack([sub @ e1, sub @ e2])
        ring = [idx[k] for k in _monotone_chain(flat, tol * scale ** 2)]
        raw_facets.append((ring, nrm))

    keep = sorted({i for ring, _ in raw_facets for i in ring})
    remap = {old: new for new, old in enumerate(keep)}
    verts = pts[keep]
    facets = []
    for ring, nrm in raw_facets:
        new_ring = tuple(remap[i] for i in ring)
        centroid = verts[list(new_ring)].mean(axis=0)
        facets.append(Facet(new_ring, nrm, float(nrm @ centroid)))
    return PolytopeV(3, verts, tuple(facets))


def hull(points: Sequence[Sequence[float]]) -> PolytopeV:
    """Convex hull with its facet structure; interior and non-extreme points are dropped."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] not in (1, 2, 3):
        raise Degenerate("points must be an array of 1-, 2- or 3-vectors")
    d = pts.shape[1]
    if len(pts) < d + 1:
        raise Degenerate(f"need at least {d + 1} points in dimension {d}")
    if d == 1:
        return _hull_1d(pts)
    if d == 2:
        return _hull_2d(pts)
    return _hull_3d(pts)


def polar(P: PolytopeV) -> PolytopeV:
    if not P.origin_interior():
        raise OriginNotInterior("polar body needs the origin strictly inside")
    return hull(np.array([f.normal / f.offset for f in P.facets]))


def volume(P: PolytopeV) -> float:
    v = P.vertices
    if P.dim == 1:
        return float(v[:, 0].max() - v[:, 0].min())
    if P.dim == 2:
        x, y = v[:, 0], v[:, 1]
        return float(0.5 * abs(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)))
    total = 0.0
    for f in P.facets:
        ring = f.ring
        p0 = v[ring[0]]
        for k in range(1, len(ring) - 1):
            total += np.dot(p0, np.cross(v[ring[k]], v[ring[k + 1]]))
    return float(abs(total) / 6.0)


def mahler(P: PolytopeV) -> float:
    return volume(P) * volume(polar(P))


def cube_mahler(d: int) -> float:
    return 4.0 ** d / math.factorial(d)


def kuperberg_gap(P: PolytopeV) -> float:
    d = P.dim
    return mahler(P) - (np.pi / 4.0) ** (d - 1) * cube_mahler(d)


def product_body(P: PolytopeV, Q: PolytopeV) -> PolytopeV:
    if P.dim + Q.dim > 3:
        raise DimensionOverflow(f"product dimension {P.dim + Q.dim} exceeds 3")
    pts = [np.concatenate([p, q]) for p in P.vertices for q in Q.vertices]
    return hull(np.array(pts))


def linear_image(P: PolytopeV, T) -> PolytopeV:
    return hull(P.vertices @ np.asarray(T, dtype=float).T)


def cube(d: int = 3, half_width: float = 1.0) -> PolytopeV:
    corners = np.array(np.meshgrid(*[[-half_width, half_width]] * d)).reshape(d, -1).T
    return hull(corners)


def cross_polytope(d: int = 3) -> PolytopeV:
    eye = np.eye(d)
    return hull(np.vstack([eye, -eye]))


def random_symmetric(seed=None, pairs: int = 20, dim: int = 3,
                     radii: tuple[float, float] = (0.5, 2.0)) -> PolytopeV:
    """Hull of ``pairs`` antipodal point pairs with radii drawn from ``radii``."""
    rng = np.random.default_rng(seed)
    for _ in range(100):
        dirs = rng.normal(size=(pairs, dim))
        dirs /= np.linalg.norm(dirs, axis=1)[:, None]
        pts = dirs * rng.uniform(*radii, size=(pairs, 1))
        try:
            P = hull(np.vstack([pts, -pts]))
        except Degenerate:
            continue
        if P.origin_interior():
            return P
    raise Degenerate("could not draw a full-dimensional symmetric polytope")
