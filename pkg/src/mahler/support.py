"""Sampled support functions on the circle.

A body is stored as ``h(2*pi*j/n)`` on a uniform grid.  Its curvature measure
``h'' + h`` is discretised cell by cell with the three-point operator

    mu_j = (h[j+1] - 2 h[j] + h[j-1]) / delta + h[j] * dtheta,
    delta = 4 sin^2(dtheta/2) / dtheta,

which annihilates ``cos`` and ``sin`` exactly.  With this choice ``mu_j`` is the
edge length of the polygon cut out by the grid half-planes times the constant
``(dtheta/2) / tan(dtheta/2)``, the measure closes (``sum mu_j u_j = 0``) and its
total mass is the trapezoid integral of h.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.optimize import linprog

from .errors import (
    EmptyBody,
    GridMismatch,
    InvalidBody,
    NonConvex,
    UnsupportedPerturbation,
)

H_MIN = 1e-6
CONVEX_TOL = 1e-9
DEFAULT_N = 720
ATOM_FACTOR = 50.0


def _as_grid_array(values, name):
    arr = np.array(values, dtype=float).ravel()
    n = arr.size
    if n < 8 or n % 2:
        raise InvalidBody(f"{name}: grid size must be even and >= 8, got {n}",
                          invariant="n even and n >= 8")
    if not np.all(np.isfinite(arr)):
        raise InvalidBody(f"{name}: samples must be finite", invariant="finite samples")
    arr.setflags(write=False)
    return arr


def grid_angles(n: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n) / n


def cell_spacing(n: int) -> float:
    """Effective spacing ``delta`` of the second difference (exact on harmonic 1)."""
    d = 2.0 * np.pi / n
    return 4.0 * np.sin(0.5 * d) ** 2 / d


@dataclass(frozen=True, eq=False)
class GridSupport:
    """Support function sampled at ``2*pi*j/n``."""

    samples: np.ndarray
    h_min: float = H_MIN

    def __post_init__(self):
        object.__setattr__(self, "samples", _as_grid_array(self.samples, "GridSupport"))

    @classmethod
    def from_function(cls, func, n: int = DEFAULT_N, **kwargs) -> "GridSupport":
        return cls(func(grid_angles(n)), **kwargs)

    @classmethod
    def constant(cls, value: float = 1.0, n: int = DEFAULT_N) -> "GridSupport":
        return cls(np.full(n, float(value)))

    @property
    def n(self) -> int:
        return self.samples.size

    @property
    def step(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def angles(self) -> np.ndarray:
        return grid_angles(self.n)

    def is_positive(self) -> bool:
        return bool(self.samples.min() >= self.h_min)

    def is_symmetric(self, tol: float = 1e-9) -> bool:
        return bool(np.max(np.abs(self.samples - np.roll(self.samples, -self.n // 2))) <= tol)

    def with_samples(self, samples) -> "GridSupport":
        return GridSupport(samples, h_min=self.h_min)

    def __mul__(self, r: float) -> "GridSupport":
        return self.with_samples(self.samples * r)

    __rmul__ = __mul__

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class Perturbation:
    """A deformation ``v`` sampled on the same grid as the body it perturbs."""

    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _as_grid_array(self.values, "Perturbation"))

    @classmethod
    def from_function(cls, func, n: int = DEFAULT_N) -> "Perturbation":
        return cls(func(grid_angles(n)))

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def step(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def angles(self) -> np.ndarray:
        return grid_angles(self.n)

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class CurvatureMeasure:
    """``h'' + h`` split into atoms ``(angle, mass)`` and a density sampled on the grid."""

    atom_angles: np.ndarray
    atom_masses: np.ndarray
    density: np.ndarray
    cell_masses: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.density.size

    @property
    def step(self) -> float:
        return 2.0 * np.pi / self.n

    @property
    def atoms(self) -> list[tuple[float, float]]:
        return list(zip(self.atom_angles.tolist(), self.atom_masses.tolist()))

    def total_mass(self) -> float:
        return float(self.atom_masses.sum() + self.step * self.density.sum())

    def closure(self) -> np.ndarray:
        """``sum a_i u(theta_i) + int density u``; vanishes for a closed body."""
        th = grid_angles(self.n)
        vec = self.step * np.array([np.dot(self.density, np.cos(th)),
                                    np.dot(self.density, np.sin(th))])
        vec += np.array([np.dot(self.atom_masses, np.cos(self.atom_angles)),
                         np.dot(self.atom_masses, np.sin(self.atom_angles))])
        return vec

    def pair(self, v: Perturbation) -> float:
        """``int v d(h''+h)``: atoms see v linearly interpolated at their angle."""
        if v.n != self.n:
            raise GridMismatch(f"measure has n={self.n}, perturbation n={v.n}")
        at_atoms = linear_interp(v.values, self.atom_angles)
        return float(np.dot(at_atoms, self.atom_masses)
                     + self.step * np.dot(v.values, self.density))


def linear_interp(values: np.ndarray, theta) -> np.ndarray:
    """Periodic piecewise-linear interpolation of grid samples."""
    n = values.size
    x = np.mod(np.asarray(theta, dtype=float), 2.0 * np.pi) * n / (2.0 * np.pi)
    j = np.floor(x).astype(int) % n
    w = x - np.floor(x)
    return (1.0 - w) * values[j] + w * values[(j + 1) % n]


def evaluate(h: GridSupport, theta):
    """Support value at arbitrary angles.

    Between two grid angles the sampled values are joined by the support function
    of the vertex where the two grid lines meet, ``rho cos(theta - alpha)``; grid
    angles return the stored sample exactly.
    """
    scalar = np.ndim(theta) == 0
    n, d = h.n, h.step
    x = np.mod(np.atleast_1d(np.asarray(theta, dtype=float)), 2.0 * np.pi) / d
    j = np.floor(x).astype(int)
    frac = x - j
    j %= n
    # snap values within rounding of a grid angle
    near_next = frac > 1.0 - 1e-12
    j = np.where(near_next, (j + 1) % n, j)
    frac = np.where(near_next, 0.0, frac)
    hj = h.samples[j]
    hk = h.samples[(j + 1) % n]
    s = (hj * np.sin((1.0 - frac) * d) + hk * np.sin(frac * d)) / np.sin(d)
    out = np.where(frac < 1e-12, hj, s)
    return float(out[0]) if scalar else out


def cell_masses(samples: np.ndarray) -> np.ndarray:
    """Discrete measure ``mu_j`` of ``h''+h`` on every grid cell."""
    n = samples.size
    d = 2.0 * np.pi / n
    second = np.roll(samples, -1) - 2.0 * samples + np.roll(samples, 1)
    return second / cell_spacing(n) + samples * d


def rounding_floor(samples: np.ndarray) -> float:
    """Size of the floating-point noise in ``cell_masses`` for these samples."""
    return float(16.0 * np.finfo(float).eps * np.abs(samples).max() / cell_spacing(samples.size))


def is_convex(h: GridSupport, tol: float = CONVEX_TOL) -> bool:
    return bool(cell_masses(h.samples).min() >= -tol)


def _runs(mask: np.ndarray) -> list[np.ndarray]:
    """Maximal cyclic runs of True as arrays of (unwrapped) indices."""
    n = mask.size
    if mask.all():
        return [np.arange(n)]
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return []
    start = int(np.flatnonzero(~mask)[0])
    rolled = (np.arange(n) + start) % n
    runs, cur = [], []
    for k, j in enumerate(rolled):
        if mask[j]:
            cur.append(start + k)
        elif cur:
            runs.append(np.array(cur))
            cur = []
    if cur:
        runs.append(np.array(cur))
    return runs


def curvature_measure(h: GridSupport, atom_threshold: float | None = None,
                      tol: float = CONVEX_TOL) -> CurvatureMeasure:
    """Split the discrete measure of ``h''+h`` into atoms and a density.

    Cells whose mass per unit angle exceeds ``atom_threshold`` (default: 50 times
    the mean density) become atoms; adjacent such cells merge into one atom placed
    at their mass-weighted mean angle.
    """
    n, d = h.n, h.step
    mu = cell_masses(h.samples)
    if mu.min() < -max(tol * d, rounding_floor(h.samples)):
        j = int(mu.argmin())
        raise NonConvex(f"negative curvature mass {mu[j]:.3e} at theta={j * d:.6f}")
    mu = np.maximum(mu, 0.0)
    if atom_threshold is None:
        atom_threshold = ATOM_FACTOR * mu.sum() / (2.0 * np.pi)
    mask = mu / d > atom_threshold
    angles, masses = [], []
    for run in _runs(mask):
        cells = run % n
        m = mu[cells].sum()
        angles.append(np.mod(np.dot(mu[cells], run * d) / m, 2.0 * np.pi))
        masses.append(m)
    order = np.argsort(angles)
    density = np.where(mask, 0.0, mu / d)
    return CurvatureMeasure(np.array(angles, dtype=float)[order],
                            np.array(masses, dtype=float)[order],
                            density, mu)


def _interior_point(h: GridSupport) -> np.ndarray | None:
    """Chebyshev-style centre of the half-plane body, or None if it has no interior."""
    th = h.angles
    a_ub = np.column_stack([np.cos(th), np.sin(th), np.ones_like(th)])
    res = linprog(c=[0.0, 0.0, -1.0], A_ub=a_ub, b_ub=h.samples,
                  bounds=[(None, None), (None, None), (None, 1.0)], method="highs")
    if res.status != 0 or res.x[2] <= 1e-12:
        return None
    return res.x[:2]


def _hull_indices(px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Graham scan over points already sorted by angle about an interior origin."""
    n = px.size
    start = int(np.argmax(px * px + py * py))
    scale = float(px[start] ** 2 + py[start] ** 2)
    eps = 1e-13 * scale
    stack = [start]
    for k in range(1, n + 1):
        j = (start + k) % n
        while len(stack) >= 2:
            a, b = stack[-2], stack[-1]
            cross = ((px[b] - px[a]) * (py[j] - py[b]) - (py[b] - py[a]) * (px[j] - px[b]))
            if cross > eps:
                break
            stack.pop()
        if k < n:
            stack.append(j)
    return np.sort(np.array(stack))


def convexify(h: GridSupport) -> GridSupport:
    """Support function of ``{x : x.u(theta_j) <= h_j for all j}`` sampled on the grid.

    The constraint lines that touch the body are found as the hull vertices of the
    dual points ``u_j / h_j``; every other sample is replaced by the support value
    of the vertex between its two active neighbours.
    """
    samples = h.samples
    shift = None
    if samples.min() <= 0.0:
        shift = _interior_point(h)
        if shift is None:
            raise EmptyBody("the half-plane intersection has empty interior")
    th = h.angles
    c, s = np.cos(th), np.sin(th)
    if shift is not None:
        samples = samples - (shift[0] * c + shift[1] * s)
    n, d = h.n, h.step
    active = _hull_indices(c / samples, s / samples)
    nxt = np.searchsorted(active, np.arange(n), side="left")
    b = np.where(nxt < active.size, active[nxt % active.size], active[0] + n)
    a_pos = np.searchsorted(active, np.arange(n), side="right") - 1
    a = np.where(a_pos >= 0, active[a_pos % active.size], active[-1] - n)
    j = np.arange(n)
    out = samples.copy()
    inactive = b != j
    if np.any(b - a >= n // 2):
        raise EmptyBody("active normals leave a gap of pi or more")
    jj, aa, bb = j[inactive], a[inactive], b[inactive]
    out[inactive] = (samples[aa % n] * np.sin((bb - jj) * d)
                     + samples[bb % n] * np.sin((jj - aa) * d)) / np.sin((bb - aa) * d)
    if shift is not None:
        out = out + (shift[0] * c + shift[1] * s)
    return h.with_samples(out)


def symmetrize_body(h: GridSupport) -> GridSupport:
    """Average of h and its antipodal reflection."""
    return h.with_samples(0.5 * (h.samples + np.roll(h.samples, -h.n // 2)))


def symmetrize_perturbation(v: Perturbation, tol: float = 1e-12) -> Perturbation:
    """Extend v from the open half-circle (0, pi) to the antipodal half.

    The copy satisfies ``vt(theta + pi) = vt(theta)``, so ``h + t*vt`` stays
    centrally symmetric whenever h is.
    """
    n = v.n
    half = n // 2
    vals = v.values
    outside = np.abs(np.concatenate([vals[:1], vals[half:]]))
    if outside.size and outside.max() > tol * max(1.0, np.abs(vals).max()):
        raise UnsupportedPerturbation(
            f"perturbation has mass {outside.max():.3e} outside (0, pi)")
    out = np.zeros(n)
    out[1:half] = vals[1:half]
    out[half + 1:] = vals[1:half]
    return Perturbation(out)


class Norms(NamedTuple):
    l1: float
    l2: float
    linf: float
    h1_seminorm: float


def h1_seminorm_sq(values: np.ndarray) -> float:
    diff = np.roll(values, -1) - values
    return float(np.dot(diff, diff) / cell_spacing(values.size))


def norms(v: Perturbation) -> Norms:
    """Trapezoid L1/L2, sup norm and the difference-quotient H1 seminorm.

    The H1 quotient divides by ``delta`` instead of ``dtheta`` so that it is exact
    on the first harmonic and matches the discrete second variation of the area.
    """
    vals = v.values
    d = v.step
    return Norms(
        l1=float(d * np.abs(vals).sum()),
        l2=float(np.sqrt(d * np.dot(vals, vals))),
        linf=float(np.abs(vals).max()),
        h1_seminorm=float(np.sqrt(h1_seminorm_sq(vals))),
    )


def random_smooth_body(rng: np.random.Generator, n: int = DEFAULT_N,
                       symmetric: bool = False, modes: int = 8,
                       strength: float = 0.8) -> GridSupport:
    """``1 + sum a_k cos(k theta + phi_k)`` with ``sum |a_k| (k^2 - 1) = strength < 1``.

    The bound keeps ``h'' + h >= 1 - strength > 0``, so the body is smooth,
    strictly convex and positive.
    """
    ks = np.arange(2, modes + 1, 2) if symmetric else np.arange(2, modes + 1)
    amp = rng.normal(size=ks.size)
    amp *= strength * rng.uniform(0.1, 1.0) / np.sum(np.abs(amp) * (ks ** 2 - 1))
    phase = rng.uniform(0.0, 2.0 * np.pi, ks.size)
    th = grid_angles(n)
    vals = 1.0 + np.sum(amp[:, None] * np.cos(ks[:, None] * th + phase[:, None]), axis=0)
    return GridSupport(vals * rng.uniform(0.5, 2.0))


def random_perturbation(rng: np.random.Generator, n: int = DEFAULT_N,
                        modes: int = 10) -> Perturbation:
    """Random trigonometric polynomial with decaying coefficients and sup norm 1."""
    th = grid_angles(n)
    ks = np.arange(modes + 1)
    c = rng.normal(size=(2, ks.size)) / (1.0 + ks) ** 1.5
    vals = (c[0][:, None] * np.cos(ks[:, None] * th)
            + c[1][:, None] * np.sin(ks[:, None] * th)).sum(axis=0)
    return Perturbation(vals / np.abs(vals).max())


def random_half_perturbation(rng: np.random.Generator, n: int = DEFAULT_N,
                             modes: int = 6) -> Perturbation:
    """Random deformation supported in the open half-circle ``(0, pi)``, sup norm 1."""
    th = grid_angles(n)
    inside = (th > 0) & (th < np.pi)
    ks = np.arange(1, modes + 1)
    c = rng.normal(size=ks.size) / ks
    vals = np.zeros(n)
    vals[inside] = (c[:, None] * np.sin(ks[:, None] * th[inside])).sum(axis=0)
    return Perturbation(vals / np.abs(vals).max())
