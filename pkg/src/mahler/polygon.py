"""Closed-form Mahler calculus on convex polygons.

A polygon is described by its outward edge normals ``theta_i`` (sorted in
[0, 2 pi)), the support values ``h_i = h(theta_i)`` and the edge lengths
``a_i``, so that ``h'' + h = sum a_i delta_{theta_i}``.  Vertex ``A_i`` is the
corner shared by edges ``i`` and ``i + 1``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np
from scipy.optimize import least_squares

from .errors import (
    Degenerate,
    DegenerateGap,
    NotBounded,
    NotConvexPosition,
    NotCritical,
    NotSymmetric,
    OriginNotInterior,
    WideTriple,
)
from .polytope import hull

log = logging.getLogger(__name__)

TWO_PI = 2.0 * np.pi
CRITICAL_TOL = 1e-8


def _snap_angles(theta: np.ndarray) -> np.ndarray:
    theta = np.mod(theta, TWO_PI)
    return np.where(theta > TWO_PI - 1e-13, 0.0, theta)


def _gaps(normals: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Forward gaps ``theta_{i+1} - theta_i`` and backward gaps ``theta_i - theta_{i-1}``."""
    fwd = np.diff(np.append(normals, normals[0] + TWO_PI))
    return fwd, np.roll(fwd, 1)


def edge_lengths(normals: np.ndarray, values: np.ndarray) -> np.ndarray:
    fwd, bwd = _gaps(normals)
    nxt, prv = np.roll(values, -1), np.roll(values, 1)
    return ((prv - values * np.cos(bwd)) / np.sin(bwd)
            + (nxt - values * np.cos(fwd)) / np.sin(fwd))


@dataclass(frozen=True, eq=False)
class PolygonSupport:
    normals: np.ndarray
    support_values: np.ndarray
    masses: np.ndarray = field(default=None)

    def __post_init__(self):
        th = np.array(self.normals, dtype=float)
        hv = np.array(self.support_values, dtype=float)
        if th.ndim != 1 or th.shape != hv.shape or th.size < 3:
            raise NotConvexPosition("need at least three normals with matching support values")
        if np.any(np.diff(th) <= 0) or th[0] < 0 or th[-1] >= TWO_PI:
            raise DegenerateGap("normals must be strictly increasing in [0, 2 pi)")
        fwd, _ = _gaps(th)
        if np.any(fwd >= np.pi):
            raise DegenerateGap(f"normal gap {fwd.max():.6g} >= pi leaves the polygon unbounded")
        if np.any(hv <= 0):
            raise OriginNotInterior("support values must be positive")
        a = edge_lengths(th, hv)
        scale = np.abs(hv).max()
        if np.any(a <= 1e-12 * scale):
            raise NotConvexPosition(f"edge length {a.min():.3e} is not positive",
                                    invariant="positive edge lengths")
        if self.masses is not None:
            given = np.asarray(self.masses, dtype=float)
            if given.shape != a.shape or np.max(np.abs(given - a)) > 1e-10 * max(1.0, scale):
                raise NotConvexPosition("edge lengths disagree with the support data",
                                        invariant="mass consistency")
        closure = np.array([np.dot(a, np.cos(th)), np.dot(a, np.sin(th))])
        if np.abs(closure).max() > 1e-10 * max(1.0, a.sum()):
            raise NotConvexPosition("edge vectors do not close", invariant="closure")
        for name, arr in (("normals", th), ("support_values", hv), ("masses", a)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_support(cls, normals, values) -> "PolygonSupport":
        th = _snap_angles(np.asarray(normals, dtype=float))
        order = np.argsort(th, kind="stable")
        return cls(th[order], np.asarray(values, dtype=float)[order])

    @property
    def m(self) -> int:
        return self.normals.size

    @property
    def units(self) -> np.ndarray:
        return np.column_stack([np.cos(self.normals), np.sin(self.normals)])

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        if self.m % 2:
            return False
        k = self.m // 2
        th, hv = self.normals, self.support_values
        return bool(np.all(np.abs(th[k:] - th[:k] - np.pi) <= tol)
                    and np.all(np.abs(hv[k:] - hv[:k]) <= tol * max(1.0, hv.max())))

    def to_vertices(self) -> np.ndarray:
        """Vertices ``A_0 .. A_{m-1}`` in counterclockwise order."""
        th, hv = self.normals, self.support_values
        th1, hv1 = np.roll(th, -1), np.roll(hv, -1)
        s = np.sin(th1 - th)
        x = (hv * np.sin(th1) - hv1 * np.sin(th)) / s
        y = (hv1 * np.cos(th) - hv * np.cos(th1)) / s
        return np.column_stack([x, y])

    @classmethod
    def from_vertices(cls, points) -> "PolygonSupport":
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
            raise NotConvexPosition("expected at least three 2-D points")
        edges = np.roll(pts, -1, axis=0) - pts
        turn = edges[:, 0] * np.roll(edges, -1, axis=0)[:, 1] - edges[:, 1] * np.roll(edges, -1, axis=0)[:, 0]
        scale = np.abs(pts).max()
        if np.any(turn <= 1e-14 * scale ** 2):
            raise NotConvexPosition("points are not in strictly convex counterclockwise position")
        normals = np.arctan2(-edges[:, 0], edges[:, 1])
        winding = np.sum(np.mod(np.diff(np.append(normals, normals[0])), TWO_PI))
        if abs(winding - TWO_PI) > 1e-9:
            raise NotConvexPosition("boundary winds more than once")
        unit = np.column_stack([np.cos(normals), np.sin(normals)])
        values = np.einsum("ij,ij->i", pts, unit)
        if np.any(values <= 1e-14 * scale):
            raise OriginNotInterior("origin is not strictly inside the polygon")
        return cls.from_support(normals, values)

    def __repr__(self):
        return (f"PolygonSupport(m={self.m}, normals={np.round(self.normals, 6).tolist()}, "
                f"h={np.round(self.support_values, 6).tolist()})")


def _area(normals, values) -> float:
    return float(0.5 * np.dot(edge_lengths(normals, values), values))


def _polar_area(normals, values) -> float:
    fwd, _ = _gaps(normals)
    return float(np.sum(np.sin(fwd) / (2.0 * values * np.roll(values, -1))))


def area_exact(P: PolygonSupport) -> float:
    return float(0.5 * np.dot(P.masses, P.support_values))


def shoelace(points) -> float:
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    return float(0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def polar_area_exact(P: PolygonSupport) -> float:
    return _polar_area(P.normals, P.support_values)


def mahler_exact(P: PolygonSupport) -> float:
    return area_exact(P) * polar_area_exact(P)


def mahler_from_support(normals, values) -> float:
    """Mahler volume from raw support data, without validating convexity."""
    th = np.asarray(normals, dtype=float)
    hv = np.asarray(values, dtype=float)
    return _area(th, hv) * _polar_area(th, hv)


def polar(P: PolygonSupport) -> PolygonSupport:
    return PolygonSupport.from_vertices(P.units / P.support_values[:, None])


def linear_image(P: PolygonSupport, T) -> PolygonSupport:
    """Support data of ``T(P)`` for an invertible 2x2 matrix T."""
    T = np.asarray(T, dtype=float)
    w = np.linalg.solve(T.T, P.units.T).T
    norm = np.hypot(w[:, 0], w[:, 1])
    return PolygonSupport.from_support(np.arctan2(w[:, 1], w[:, 0]), P.support_values / norm)


def centroid(P: PolygonSupport) -> np.ndarray:
    """Area centroid from the vertex list."""
    v = P.to_vertices()
    w = np.roll(v, -1, axis=0)
    cross = v[:, 0] * w[:, 1] - w[:, 0] * v[:, 1]
    return (v + w).T @ cross / (3.0 * cross.sum())


def sample_support(P: PolygonSupport, n: int) -> np.ndarray:
    """``h_P`` on the uniform n-grid, as the max of vertex projections."""
    th = 2.0 * np.pi * np.arange(n) / n
    return (P.to_vertices() @ np.vstack([np.cos(th), np.sin(th)])).max(axis=0)


def translate(P: PolygonSupport, z) -> PolygonSupport:
    """Support data of ``P - z``."""
    return PolygonSupport(P.normals, P.support_values - P.units @ np.asarray(z, dtype=float))


def mahler_gradient(P: PolygonSupport) -> np.ndarray:
    """``dJ/dh_i`` for every support value (edge normals kept fixed)."""
    a, b = area_exact(P), polar_area_exact(P)
    hv = P.support_values
    fwd, bwd = _gaps(P.normals)
    bracket = np.sin(fwd) / np.roll(hv, -1) + np.sin(bwd) / np.roll(hv, 1)
    return b * P.masses - a / (2.0 * hv ** 2) * bracket


def foc_residual(P: PolygonSupport) -> np.ndarray:
    """Left side of the first-order condition at the first half of the vertices."""
    if not P.is_symmetric():
        raise NotSymmetric("first-order residuals are defined for symmetric polygons")
    return mahler_gradient(P)[: P.m // 2]


@dataclass(frozen=True)
class Certificate:
    vertex_index: int
    deformation_value: float
    quadratic_form: float
    bracket: float
    normalized_frame: Optional[dict] = None


def _triple(P: PolygonSupport, i: int):
    m = P.m
    th = P.normals
    t1 = th[i % m]
    t0 = t1 - np.mod(t1 - th[(i - 1) % m], TWO_PI)
    t2 = t1 + np.mod(th[(i + 1) % m] - t1, TWO_PI)
    return t0, t1, t2


def _check_critical(P: PolygonSupport, tol: float):
    res = np.abs(foc_residual(P)).max()
    if res > tol:
        raise NotCritical(f"first-order residual {res:.3e} exceeds {tol:g}")


def simple_deformation_hessian(P: PolygonSupport, i: int,
                               tol: float = CRITICAL_TOL) -> Certificate:
    """Second variation along the one-edge deformation at edge i.

    The deformation moves the support value of edge i (and, by symmetry, of its
    antipode) by 1 and keeps every other support value, so that ``v'' + v`` sits
    on the three normals around edge i.  At a critical polygon the second
    variation reduces to ``2 B(h) * bracket``.
    """
    if not P.is_symmetric():
        raise NotSymmetric("simple deformations are defined for symmetric polygons")
    _check_critical(P, tol)
    t0, t1, t2 = _triple(P, i)
    if t2 - t0 > np.pi + 1e-12:
        raise WideTriple(f"normals around edge {i} span {t2 - t0:.6g} > pi")
    m = P.m
    a1, h1 = P.masses[i % m], P.support_values[i % m]
    s20 = np.sin(t2 - t0)
    if abs(s20) < 1e-15:
        s20 = 0.0
    bracket = (-s20 / (np.sin(t2 - t1) * np.sin(t1 - t0))
               - 4.0 * a1 ** 2 / area_exact(P) + 2.0 * a1 / h1)
    q = 2.0 * polar_area_exact(P) * bracket
    return Certificate(vertex_index=i % m, deformation_value=1.0,
                       quadratic_form=float(q), bracket=float(bracket))


def deformation_second_difference(P: PolygonSupport, i: int, t: float = 1e-3) -> float:
    """Finite-difference second derivative of M along the symmetric one-edge deformation.

    Richardson-extrapolated central differences at steps t and t/2.
    """
    v = np.zeros(P.m)
    v[i % P.m] = 1.0
    if P.is_symmetric():
        v[(i + P.m // 2) % P.m] = 1.0
    th, hv = P.normals, P.support_values
    m0 = mahler_from_support(th, hv)

    def central(s):
        return (mahler_from_support(th, hv + s * v) + mahler_from_support(th, hv - s * v)
                - 2.0 * m0) / s ** 2

    return (4.0 * central(t / 2) - central(t)) / 3.0


class NormalizedFrame(NamedTuple):
    polygon: PolygonSupport
    matrix: np.ndarray
    target_index: int
    theta2: float
    a0: float
    a1: float


def normalized_frame(P: PolygonSupport, i: int) -> NormalizedFrame:
    """Linear image with edges ``i-1, i`` at normals ``0, pi/2`` and unit support.

    If the edge at ``pi/2`` comes out longer than the one at ``0`` the image is
    reflected through the diagonal, which swaps the two edges.  ``target_index``
    is the original index of the edge that ends up at ``pi/2``.
    """
    m = P.m
    j, k = (i - 1) % m, i % m
    u = P.units
    T = np.vstack([u[j] / P.support_values[j], u[k] / P.support_values[k]])
    Q = linear_image(P, T)
    target = k
    if Q.masses[1] > Q.masses[0]:
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        T = swap @ T
        Q = linear_image(P, T)
        target = j
    theta2 = float(Q.normals[2])
    return NormalizedFrame(Q, T, target, theta2, float(Q.masses[0]), float(Q.masses[1]))


def affine_normalize(P: PolygonSupport, i: int) -> PolygonSupport:
    return normalized_frame(P, i).polygon


def is_parallelogram(P: PolygonSupport) -> bool:
    return P.m == 4 and P.is_symmetric()


def certify_nonminimal(P: PolygonSupport, tol: float = CRITICAL_TOL) -> Optional[Certificate]:
    """Search every edge for a symmetric deformation with negative second variation.

    Each candidate is evaluated in the input frame and again after the affine
    normalization of its edge pair; the certificate is kept only if both values
    are negative.  Returns the most negative one, or None for parallelograms.
    """
    if not P.is_symmetric():
        raise NotSymmetric("certificates are defined for symmetric polygons")
    _check_critical(P, tol)
    if P.m == 4:
        return None
    best = None
    for i in range(P.m):
        try:
            cert = simple_deformation_hessian(P, i, tol)
        except WideTriple:
            continue
        frame = normalized_frame(P, i)
        try:
            local = simple_deformation_hessian(frame.polygon, 1, max(tol, 1e-7))
        except (WideTriple, NotCritical):
            continue
        if cert.quadratic_form >= -1e-10 or local.quadratic_form >= 0:
            continue
        a0, a1 = frame.a0, frame.a1
        info = {
            "theta0": float(frame.polygon.normals[0]),
            "theta1": float(frame.polygon.normals[1]),
            "theta2": frame.theta2,
            "a0": a0,
            "a1": a1,
            "target_index": frame.target_index,
            "area": area_exact(frame.polygon),
            "bracket": local.bracket,
            "quadratic_form": local.quadratic_form,
            "abs_tan_theta2": float(abs(np.tan(frame.theta2))),
            "tan_lower_bound": float((2.0 - a1) / (2.0 - a0)),
            "harmonic_factor": float(a1 * (2.0 - a0) - 1.0),
        }
        cert = Certificate(cert.vertex_index, cert.deformation_value,
                           cert.quadratic_form, cert.bracket, info)
        if best is None or cert.quadratic_form < best.quadratic_form:
            best = cert
    if best is None:
        log.warning("no negative certificate found for a critical %d-gon", P.m)
    return best


class SantaloResult(NamedTuple):
    point: np.ndarray
    value: float
    gradient_norm: float
    iterations: int


def _translate_objective(normals, values, z):
    units = np.column_stack([np.cos(normals), np.sin(normals)])
    g = values - units @ z
    fwd, _ = _gaps(normals)
    g1 = np.roll(g, -1)
    u1 = np.roll(units, -1, axis=0)
    f = np.sin(fwd) / (2.0 * g * g1)
    w = units / g[:, None] + u1 / g1[:, None]
    grad = (f[:, None] * w).sum(axis=0)
    hess = (np.einsum("i,ij,ik->jk", f, w, w)
            + np.einsum("i,ij,ik->jk", f / g ** 2, units, units)
            + np.einsum("i,ij,ik->jk", f / g1 ** 2, u1, u1))
    return float(f.sum()), grad, hess, g


def santalo_point(P: PolygonSupport, max_iter: int = 100,
                  floor: float = 1e-9) -> SantaloResult:
    """Translation minimising the polar area, by damped Newton with backtracking.

    ``value`` is the nonsymmetric Mahler volume ``|P| |(P - z)^o|`` at the minimiser.
    """
    th, hv = P.normals, P.support_values
    z = np.zeros(2)
    f, grad, hess, _ = _translate_objective(th, hv, z)
    for it in range(max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= 1e-10:
            return SantaloResult(z, area_exact(P) * f, gnorm, it)
        step = -np.linalg.solve(hess, grad)
        t = 1.0
        while True:
            cand = z + t * step
            g = hv - P.units @ cand
            if g.min() >= floor:
                fc, gc, hc, _ = _translate_objective(th, hv, cand)
                if fc <= f + 1e-4 * t * np.dot(grad, step) or t < 1e-12:
                    break
            t *= 0.5
            if t < 1e-16:
                raise NotBounded("line search failed to keep the translate inside the body")
        z, f, grad, hess = cand, fc, gc, hc
    gnorm = float(np.linalg.norm(grad))
    if gnorm > 1e-10:
        raise NotBounded(f"Newton did not converge (|grad| = {gnorm:.3e})")
    return SantaloResult(z, area_exact(P) * f, gnorm, max_iter)


def make_regular(N: int, apothem: float = 1.0) -> PolygonSupport:
    """Regular 2N-gon with normals ``k pi / N`` and the given apothem."""
    if N < 2 or apothem <= 0:
        raise DegenerateGap("need N >= 2 and a positive apothem")
    th = np.pi * np.arange(2 * N) / N
    return PolygonSupport(th, np.full(2 * N, float(apothem)))


def make_parallelogram(phi1: float = 0.0, phi2: float = np.pi / 2,
                       h1: float = 1.0, h2: float = 1.0) -> PolygonSupport:
    """``{x : |x.u(phi1)| <= h1, |x.u(phi2)| <= h2}`` with ``0 <= phi1 < phi2 < pi``."""
    if not 0.0 <= phi1 < phi2 < np.pi:
        raise DegenerateGap("need 0 <= phi1 < phi2 < pi")
    return PolygonSupport([phi1, phi2, phi1 + np.pi, phi2 + np.pi], [h1, h2, h1, h2])


def _symmetric_from_half(angles, values) -> PolygonSupport:
    angles = np.asarray(angles, dtype=float)
    values = np.asarray(values, dtype=float)
    return PolygonSupport(np.concatenate([angles, angles + np.pi]),
                          np.concatenate([values, values]))


def make_random_symmetric(N: int, seed=None, max_tries: int = 1000) -> PolygonSupport:
    """Random symmetric polygon from N normals in (0, pi) and support values in [0.5, 2].

    The data are completed by antipodal symmetry and the polygon is the
    intersection of the resulting half-planes, so redundant constraints drop out
    and the result has between 4 and 2N edges.
    """
    if N < 2:
        raise DegenerateGap("need N >= 2")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        th = rng.uniform(0.0, np.pi, N)
        hv = rng.uniform(0.5, 2.0, N)
        th = np.concatenate([th, th + np.pi])
        dual = np.column_stack([np.cos(th), np.sin(th)]) / np.concatenate([hv, hv])[:, None]
        try:
            P = polar(PolygonSupport.from_vertices(hull(dual).vertices))
        except (Degenerate, DegenerateGap, NotConvexPosition):
            continue
        if P.is_symmetric():
            return P
    raise DegenerateGap(f"no valid symmetric polygon from {N} normals after {max_tries} draws")


def _critical_residual(log_h, th_half):
    hv = np.exp(np.concatenate([[0.0], log_h]))
    th = np.concatenate([th_half, th_half + np.pi])
    full = np.concatenate([hv, hv])
    a = edge_lengths(th, full)
    A, B = _area(th, full), _polar_area(th, full)
    fwd, bwd = _gaps(th)
    bracket = np.sin(fwd) / np.roll(full, -1) + np.sin(bwd) / np.roll(full, 1)
    res = B * a - A / (2.0 * full ** 2) * bracket
    return (res * full)[: th_half.size]


def make_random_critical(N: int, seed=None, min_gap: float = 0.15,
                         max_tries: int = 200) -> PolygonSupport:
    """Random symmetric critical 2N-gon.

    Normals are drawn at random; the support values are then moved onto the
    first-order condition by a least-squares solve started from the polygon
    circumscribed about the unit circle.
    """
    if N < 2:
        raise DegenerateGap("need N >= 2")
    rng = np.random.default_rng(seed)
    for _ in range(max_tries):
        th = np.sort(rng.uniform(0.0, np.pi, N))
        gaps = np.diff(np.append(th, th[0] + np.pi))
        if gaps.min() < min_gap:
            continue
        sol = least_squares(_critical_residual, np.zeros(N - 1), args=(th,),
                            xtol=1e-15, ftol=1e-15, gtol=1e-15, method="lm")
        hv = np.exp(np.concatenate([[0.0], sol.x]))
        try:
            P = _symmetric_from_half(th, hv)
        except (DegenerateGap, NotConvexPosition):
            continue
        if np.abs(foc_residual(P)).max() <= 1e-11:
            return P
    raise NotCritical(f"could not build a critical {2 * N}-gon in {max_tries} draws")
