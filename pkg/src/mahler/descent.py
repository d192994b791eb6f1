"""Projected descent of the planar Mahler functional on sampled support functions."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

import numpy as np
from scipy.optimize import minimize

from .errors import EmptyBody, GridMismatch, NonAdmissibleStart
from .functional import area, polar_area
from .support import (
    CONVEX_TOL,
    GridSupport,
    cell_masses,
    convexify,
    curvature_measure,
    evaluate,
    grid_angles,
    is_convex,
    symmetrize_body,
)

log = logging.getLogger(__name__)

ARMIJO_SHRINK = 0.5
SUFFICIENT_DECREASE = 1e-4


@dataclass
class DescentOptions:
    symmetric: bool = True
    max_iters: int = 5000
    step0: float = 1e-3
    tol_grad: float = 1e-7
    min_step: float = 1e-12
    renormalize_every: int = 50
    jitter: float = 1e-3
    seed: int = 0
    topk: int = 4


class Concentration(NamedTuple):
    topk_fraction: float
    atom_count: int


@dataclass
class DescentTrace:
    iterates: list = field(default_factory=list)
    values: list = field(default_factory=list)
    steps: list = field(default_factory=list)
    concentration: list = field(default_factory=list)
    stop_reason: str = "max_iters"

    @property
    def final(self) -> GridSupport:
        return self.iterates[-1]

    def records(self):
        """Rows ``(iteration, J, step, topk_fraction, atom_count)``."""
        for k, (val, step, conc) in enumerate(zip(self.values, self.steps, self.concentration)):
            yield k, val, step, conc.topk_fraction, conc.atom_count


def concentration_report(h: GridSupport, k: int = 4) -> Concentration:
    mu = np.maximum(cell_masses(h.samples), 0.0)
    top = np.sort(mu)[::-1][:k].sum()
    return Concentration(float(top / mu.sum()), len(curvature_measure(h).atom_masses))


def hausdorff_distance(h1: GridSupport, h2: GridSupport) -> float:
    if h1.n != h2.n:
        raise GridMismatch(f"grids differ: {h1.n} vs {h2.n}")
    return float(np.abs(h1.samples - h2.samples).max())


def mahler_gradient(h: GridSupport) -> np.ndarray:
    """L2 representative of the first variation: ``B (h''+h) - A / h^3`` per unit angle."""
    a, b = area(h, check=False), polar_area(h)
    return b * cell_masses(h.samples) / h.step - a / h.samples ** 3


def project(h: GridSupport, symmetric: bool) -> GridSupport:
    if symmetric:
        h = symmetrize_body(h)
    return convexify(h)


def _admissible(h: GridSupport, symmetric: bool) -> bool:
    if h.samples.min() < h.h_min or not is_convex(h, CONVEX_TOL):
        return False
    return not symmetric or h.is_symmetric(1e-12)


def _jittered(h: GridSupport, opts: DescentOptions) -> GridSupport:
    """Small random smooth perturbation; the disc is a critical point of J."""
    if opts.jitter <= 0:
        return h
    rng = np.random.default_rng(opts.seed)
    th = h.angles
    modes = np.arange(2, 9, 2) if opts.symmetric else np.arange(2, 9)
    v = np.zeros(h.n)
    for k in modes:
        c, s = rng.normal(size=2) / (k * k - 1)
        v += c * np.cos(k * th) + s * np.sin(k * th)
    v *= opts.jitter * h.samples.mean() / np.abs(v).max()
    out = project(h.with_samples(h.samples + v), opts.symmetric)
    return out if _admissible(out, opts.symmetric) else h


def descend(h0: GridSupport, opts: Optional[DescentOptions] = None,
            callback: Optional[Callable[[int, GridSupport], None]] = None,
            **kwargs) -> DescentTrace:
    """Backtracking projected gradient on ``J = A B``.

    Each trial point is ``convexify(symmetrize(h - s g))``; a trial is accepted
    when it keeps the positivity floor and satisfies the Armijo condition along
    the projection arc.  The area is rescaled to its starting value every
    ``renormalize_every`` iterations (J is scale invariant).
    """
    opts = opts or DescentOptions()
    for key, val in kwargs.items():
        setattr(opts, key, val)
    if opts.symmetric:
        if not h0.is_symmetric(1e-9):
            raise NonAdmissibleStart("starting body is not symmetric within 1e-9")
        h0 = symmetrize_body(h0)
    if not _admissible(h0, opts.symmetric):
        raise NonAdmissibleStart("starting body must be convex and positive")
    h = _jittered(h0, opts)
    area0 = area(h)
    val = area0 * polar_area(h)
    trace = DescentTrace()

    def record(body, value, step):
        trace.iterates.append(body)
        trace.values.append(value)
        trace.steps.append(step)
        trace.concentration.append(concentration_report(body, opts.topk))
        if callback is not None:
            callback(len(trace.values) - 1, body)

    record(h, val, 0.0)
    step = opts.step0
    for it in range(1, opts.max_iters + 1):
        g = mahler_gradient(h)
        while True:
            try:
                trial = project(h.with_samples(h.samples - step * g), opts.symmetric)
            except EmptyBody:
                trial = None
            if trial is not None and trial.samples.min() >= h.h_min:
                new_val = area(trial, check=False) * polar_area(trial)
                moved = trial.samples - h.samples
                slope = h.step * np.dot(g, moved)
                if new_val <= val + SUFFICIENT_DECREASE * slope and slope < 0:
                    break
            step *= ARMIJO_SHRINK
            if step < opts.min_step:
                trace.stop_reason = "step_small"
                return trace
        grad_norm = np.sqrt(h.step * np.dot(moved, moved)) / step
        h, val = trial, new_val
        if opts.renormalize_every and it % opts.renormalize_every == 0:
            h = h.with_samples(h.samples * np.sqrt(area0 / area(h, check=False)))
            val = area(h, check=False) * polar_area(h)
        record(h, val, step)
        if grad_norm <= opts.tol_grad:
            trace.stop_reason = "gradient_small"
            return trace
        step = min(step * 2.0, 1e3)
    trace.stop_reason = "max_iters"
    return trace


class ParallelogramFit(NamedTuple):
    distance: float
    matrix: np.ndarray
    normals: tuple[float, float]


def _dominant_normals(h: GridSupport) -> tuple[float, float]:
    """Two heaviest curvature directions modulo pi, from the raw cell masses."""
    mu = np.maximum(cell_masses(h.samples), 0.0)
    folded = np.mod(h.angles, np.pi)
    # antipodal cells are merged so a symmetric atom counts once
    order = np.argsort(mu)[::-1]
    weights = {}
    sep = 4.0 * h.step
    for j in order[: max(16, h.n // 20)]:
        ang = folded[j]
        for c in weights:
            if min(abs(ang - c), np.pi - abs(ang - c)) <= sep:
                weights[c] += mu[j]
                break
        else:
            weights[ang] = mu[j]
    chosen = sorted(weights, key=weights.get, reverse=True)[:2]
    if len(chosen) < 2:
        chosen.append(np.mod(chosen[0] + np.pi / 2, np.pi))
    return tuple(sorted(chosen))


def _square_support(n: int) -> np.ndarray:
    th = grid_angles(n)
    return np.abs(np.cos(th)) + np.abs(np.sin(th))


def _image_support(h: GridSupport, L: np.ndarray) -> np.ndarray:
    """Support function of ``L K`` sampled on the grid of h."""
    th = h.angles
    w = L.T @ np.vstack([np.cos(th), np.sin(th)])
    r = np.hypot(w[0], w[1])
    return r * evaluate(h, np.arctan2(w[1], w[0]))


def parallelogram_fit(h: GridSupport, refine: bool = True) -> ParallelogramFit:
    """Hausdorff distance from the body to the square ``[-1,1]^2`` after a linear map.

    The map starts from the one sending the parallelogram spanned by the two
    dominant curvature atoms (and their support values) to the square, then a
    Nelder-Mead search over the four matrix entries lowers the distance.
    """
    p1, p2 = _dominant_normals(h)
    u1 = np.array([np.cos(p1), np.sin(p1)])
    u2 = np.array([np.cos(p2), np.sin(p2)])
    L0 = np.vstack([u1 / evaluate(h, p1), u2 / evaluate(h, p2)])
    target = _square_support(h.n)

    def dist(flat):
        L = flat.reshape(2, 2)
        if abs(np.linalg.det(L)) < 1e-12:
            return np.inf
        return float(np.abs(_image_support(h, L) - target).max())

    best = L0.ravel()
    best_val = dist(best)
    if refine:
        res = minimize(dist, best, method="Nelder-Mead",
                       options={"xatol": 1e-10, "fatol": 1e-12, "maxiter": 4000})
        if res.fun < best_val:
            best, best_val = res.x, float(res.fun)
    return ParallelogramFit(best_val, best.reshape(2, 2), (float(p1), float(p2)))
