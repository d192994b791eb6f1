"""The planar Mahler functional ``J = A * B`` on sampled support functions.

Discretisation (all on the uniform grid, dtheta = 2 pi / n):

* ``A(h) = 1/2 sum_j h_j mu_j`` where ``mu`` is the cell measure of ``h''+h``;
  equivalently ``1/2 [dtheta sum h^2 - sum (h_{j+1}-h_j)^2 / delta]``.  For a
  convex h this is the area of the grid polygon times ``(dtheta/2)/tan(dtheta/2)``,
  a relative error of about ``dtheta^2 / 12``.
* ``B(h) = dtheta sum 1 / (2 h_j^2)`` (trapezoid rule).

First and second variations below are the exact derivatives of these discrete
quantities, so finite differences of ``mahler`` reproduce them to truncation
error.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import (
    DegenerateSystem,
    GridMismatch,
    NoAtomInSubwindow,
    NonConvex,
    NotSymmetric,
    PositivityViolated,
    Resonance,
    UnsupportedPerturbation,
)
from .support import (
    CONVEX_TOL,
    CurvatureMeasure,
    GridSupport,
    Perturbation,
    cell_masses,
    cell_spacing,
    curvature_measure,
    grid_angles,
    h1_seminorm_sq,
    norms,
    rounding_floor,
)

FD_STEP_FIRST = 1e-5
FD_STEP_SECOND = 1e-4


def _check_grid(h: GridSupport, v: Perturbation):
    if h.n != v.n:
        raise GridMismatch(f"body has n={h.n}, perturbation has n={v.n}")


def _check_positive(h: GridSupport):
    if h.samples.min() < h.h_min:
        raise PositivityViolated(
            f"min support value {h.samples.min():.3e} below floor {h.h_min:g}")


def area(h: GridSupport, check: bool = True) -> float:
    mu = cell_masses(h.samples)
    if check and mu.min() < -max(CONVEX_TOL, rounding_floor(h.samples)):
        raise NonConvex(f"negative curvature mass {mu.min():.3e}")
    return float(0.5 * np.dot(h.samples, mu))


def area_gradient_form(h: GridSupport) -> float:
    """Same area through ``1/2 int (h^2 - h'^2)``; kept as a cross-check."""
    s = h.samples
    diff = np.roll(s, -1) - s
    return float(0.5 * (h.step * np.dot(s, s) - np.dot(diff, diff) / cell_spacing(h.n)))


def area_measure_form(h: GridSupport) -> float:
    """``1/2 int h d(h''+h)`` with the atom/density split of the curvature measure."""
    mu = curvature_measure(h)
    at = np.interp(mu.atom_angles, np.append(h.angles, 2 * np.pi), np.append(h.samples, h.samples[0]))
    return float(0.5 * (np.dot(at, mu.atom_masses) + h.step * np.dot(h.samples, mu.density)))


def polar_area(h: GridSupport) -> float:
    _check_positive(h)
    return float(h.step * np.sum(0.5 / h.samples ** 2))


def mahler(h: GridSupport, check: bool = True) -> float:
    if check:
        _check_positive(h)
    return area(h, check=check) * polar_area(h)


def dA(h: GridSupport, v: Perturbation) -> float:
    _check_grid(h, v)
    return float(np.dot(v.values, cell_masses(h.samples)))


def dB(h: GridSupport, v: Perturbation) -> float:
    _check_grid(h, v)
    return float(-h.step * np.sum(v.values / h.samples ** 3))


def dJ(h: GridSupport, v: Perturbation) -> float:
    a, b = area(h, check=False), polar_area(h)
    return b * dA(h, v) + a * dB(h, v)


def d2A(h: GridSupport, v: Perturbation) -> float:
    _check_grid(h, v)
    vals = v.values
    return float(v.step * np.dot(vals, vals) - h1_seminorm_sq(vals))


def d2B(h: GridSupport, v: Perturbation) -> float:
    _check_grid(h, v)
    return float(3.0 * h.step * np.sum(v.values ** 2 / h.samples ** 4))


def d2J(h: GridSupport, v: Perturbation) -> float:
    a, b = area(h, check=False), polar_area(h)
    return b * d2A(h, v) + 2.0 * dA(h, v) * dB(h, v) + a * d2B(h, v)


class MiddleTerm(NamedTuple):
    via_dA: float
    via_measure: float


def middle_term(h: GridSupport, v: Perturbation) -> MiddleTerm:
    """``2 A'(h).v B'(h).v`` computed twice: from dA, and from the measure pairing."""
    integral = -dB(h, v)
    paired = curvature_measure(h).pair(v)
    return MiddleTerm(2.0 * dA(h, v) * dB(h, v), -2.0 * paired * integral)


def _supported_in_upper_half(v: Perturbation, tol: float = 1e-12) -> bool:
    half = v.n // 2
    outside = np.concatenate([v.values[:1], v.values[half:]])
    return bool(np.abs(outside).max() <= tol * max(1.0, np.abs(v.values).max()))


def d2J_symmetric(h: GridSupport, v: Perturbation) -> float:
    """Second variation along the antipodal extension of v, from half-circle pieces."""
    _check_grid(h, v)
    if not h.is_symmetric(1e-9):
        raise NotSymmetric("body is not centrally symmetric within 1e-9")
    if not _supported_in_upper_half(v):
        raise UnsupportedPerturbation("perturbation must vanish outside (0, pi)")
    a, b = area(h, check=False), polar_area(h)
    return 2.0 * d2A(h, v) * b + 8.0 * dA(h, v) * dB(h, v) + 2.0 * d2B(h, v) * a


@dataclass(frozen=True)
class ConcavityConstants:
    C: float
    alpha: float


def concavity_constants(h: GridSupport) -> ConcavityConstants:
    a, b = area(h), polar_area(h)
    mass = curvature_measure(h).total_mass()
    inv = 1.0 / h.samples
    c = (b + 3.0 * a * np.max(inv ** 4)) + 2.0 * mass * np.max(inv ** 3)
    return ConcavityConstants(C=float(c), alpha=b)


class ConcavityCheck(NamedTuple):
    lhs: float
    rhs: float
    holds: bool


def check_concavity_bound(h: GridSupport, v: Perturbation,
                          symmetric: bool = False) -> ConcavityCheck:
    """Compare the second variation with ``C |v|_inf |v|_1 - alpha |v|_H1^2``.

    With ``symmetric=True`` the left side is the second variation along the
    antipodal extension of v and the bound is ``4C ... - 2 alpha ...``.
    """
    const = concavity_constants(h)
    nv = norms(v)
    if symmetric:
        lhs = d2J_symmetric(h, v)
        rhs = 4.0 * const.C * nv.linf * nv.l1 - 2.0 * const.alpha * nv.h1_seminorm ** 2
    else:
        lhs = d2J(h, v)
        rhs = const.C * nv.linf * nv.l1 - const.alpha * nv.h1_seminorm ** 2
    return ConcavityCheck(lhs, rhs, bool(lhs <= rhs + 1e-9))


def _subwindow_response(mu: CurvatureMeasure, lo: float, hi: float,
                        a: float, theta: np.ndarray):
    """Zero-Cauchy-data solution of ``w'' + w = mu|(lo,hi)`` started at ``a``.

    Returns the samples of w on ``theta`` (unwrapped, >= a), the number of atoms
    used, and the endpoint values ``w(b), w'(b)`` are obtained by the caller by
    passing b in ``theta``.
    """
    two_pi = 2.0 * np.pi
    pos, mass = [], []
    for ang, m in zip(mu.atom_angles, mu.atom_masses):
        t = a + np.mod(ang - a, two_pi)
        if lo < t < hi:
            pos.append(t)
            mass.append(m)
    n_atoms = len(pos)
    grid = grid_angles(mu.n)
    t = a + np.mod(grid - a, two_pi)
    sel = (t > lo) & (t < hi) & (mu.density > 0)
    pos.extend(t[sel])
    mass.extend(mu.step * mu.density[sel])
    pos = np.asarray(pos)
    mass = np.asarray(mass)
    diff = theta[:, None] - pos[None, :]
    val = np.where(diff > 0, np.sin(diff), 0.0) @ mass
    slope = np.where(diff > 0, np.cos(diff), 0.0) @ mass
    return val, slope, n_atoms


@dataclass(frozen=True)
class LocalizedDeformation:
    """Closed-form ``v = sum_k lambda_k v_k`` on ``window``; zero outside it."""

    mu: CurvatureMeasure
    window: tuple[float, float]
    subwindows: tuple[tuple[float, float], ...]
    lambdas: np.ndarray
    tails: np.ndarray
    scale: float = 1.0

    def _unwrap(self, theta) -> np.ndarray:
        a = self.window[0]
        return a + np.mod(np.atleast_1d(np.asarray(theta, dtype=float)) - a, 2.0 * np.pi)

    def _combine(self, t: np.ndarray, derivative: bool) -> np.ndarray:
        a, b = self.window
        length = b - a
        inside = (t > a) & (t < b)
        out = np.zeros(t.shape)
        for k, (lo, hi) in enumerate(self.subwindows):
            w, wp, _ = _subwindow_response(self.mu, lo, hi, a, t[inside])
            if derivative:
                piece = wp - self.tails[k] * np.cos(t[inside] - a) / np.sin(length)
            else:
                piece = w - self.tails[k] * np.sin(t[inside] - a) / np.sin(length)
            out[inside] += self.lambdas[k] * piece
        return out / self.scale

    def value(self, theta) -> np.ndarray:
        return self._combine(self._unwrap(theta), derivative=False)

    def derivative(self, theta) -> np.ndarray:
        return self._combine(self._unwrap(theta), derivative=True)

    def boundary_slopes(self) -> tuple[float, float]:
        """One-sided derivatives just inside ``a`` and ``b`` (outside they vanish)."""
        a, b = self.window
        span = b - a
        eps = 1e-12 * max(1.0, abs(b))
        inner = np.array([a + eps, a + span - eps])
        d = self._combine(inner, derivative=True)
        return float(d[0]), float(d[1])

    def perturbation(self) -> Perturbation:
        return Perturbation(self.value(grid_angles(self.mu.n)))


def localized_deformation(mu: CurvatureMeasure, window: tuple[float, float],
                          subwindows: Sequence[tuple[float, float]],
                          tol: float = 1e-6) -> LocalizedDeformation:
    """Deformation supported in ``window`` whose ``v'' + v`` lives on the atoms of mu.

    Each piece solves ``v_k'' + v_k = 1_{subwindow k} mu`` with zero Dirichlet data
    at both window ends (closed form, variation of parameters).  The combination
    ``sum lambda_k v_k`` is chosen in the null space of the two one-sided slope
    conditions at the window ends, which removes the kinks there.  Two pieces give
    a square homogeneous system, so a nonzero combination needs at least three
    subwindows unless the two slope vectors happen to be parallel.

    The result is scaled so that its sup norm on the grid is 1.
    """
    a, b = float(window[0]), float(window[1])
    length = b - a
    if not 0.0 < length < np.pi:
        raise Resonance(f"window length {length:.6g} must lie in (0, pi)")
    if abs(np.sin(length)) < tol:
        raise Resonance(f"sin(window length) = {np.sin(length):.3e}")
    subs = tuple((float(lo), float(hi)) for lo, hi in subwindows)
    if len(subs) < 2:
        raise DegenerateSystem("need at least two subwindows")
    ordered = sorted(subs)
    for (lo, hi), nxt in zip(ordered, ordered[1:] + [None]):
        if not a <= lo < hi <= b:
            raise Resonance(f"subwindow ({lo}, {hi}) is empty or leaves the window")
        if abs(np.sin(hi - lo)) < tol:
            raise Resonance(f"subwindow ({lo}, {hi}) is resonant")
        if nxt is not None and nxt[0] < hi:
            raise DegenerateSystem("subwindows overlap")

    ends = np.array([b])
    slopes = np.empty((2, len(subs)))
    tails = np.empty(len(subs))
    for k, (lo, hi) in enumerate(subs):
        wb, wpb, n_atoms = _subwindow_response(mu, lo, hi, a, ends)
        if n_atoms == 0:
            raise NoAtomInSubwindow(f"no atom of the measure in ({lo:.6g}, {hi:.6g})")
        # v_k = w_k - w_k(b) sin(theta - a) / sin(b - a)
        slopes[0, k] = -wb[0] / np.sin(length)
        slopes[1, k] = wpb[0] - wb[0] * np.cos(length) / np.sin(length)
        tails[k] = wb[0]
    _, sing, vt = np.linalg.svd(slopes)
    scale = np.abs(slopes).max()
    rank = int(np.sum(sing > 1e-12 * scale))
    if rank >= len(subs):
        raise DegenerateSystem(
            "only the trivial combination has zero boundary slopes; "
            "use a third subwindow")
    lam = vt[-1]
    raw = LocalizedDeformation(mu, (a, b), subs, lam, tails)
    peak = np.abs(raw.value(grid_angles(mu.n))).max()
    if peak == 0.0:
        raise DegenerateSystem("combined deformation vanishes on the grid")
    return LocalizedDeformation(mu, (a, b), subs, lam, tails, float(peak))


def localized_perturbation(mu: CurvatureMeasure, window: tuple[float, float],
                           subwindows: Sequence[tuple[float, float]],
                           tol: float = 1e-6) -> Perturbation:
    """Grid samples of :func:`localized_deformation`, sup norm 1."""
    return localized_deformation(mu, window, subwindows, tol).perturbation()


def finite_difference_first(h: GridSupport, v: Perturbation,
                            t: float = FD_STEP_FIRST) -> float:
    hp = h.with_samples(h.samples + t * v.values)
    hm = h.with_samples(h.samples - t * v.values)
    return (mahler(hp, check=False) - mahler(hm, check=False)) / (2.0 * t)


def finite_difference_second(h: GridSupport, v: Perturbation,
                             t: float = FD_STEP_SECOND) -> float:
    hp = h.with_samples(h.samples + t * v.values)
    hm = h.with_samples(h.samples - t * v.values)
    return (mahler(hp, check=False) + mahler(hm, check=False)
            - 2.0 * mahler(h, check=False)) / t ** 2
