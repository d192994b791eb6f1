"""Acceptance criteria 1 to 11 with their tolerances and runtime limits.

Each test prints one PASS/FAIL line, and the lines are repeated in a summary
section at the end of the run.  Runtimes are wall-clock seconds measured
around the checked computation.  The three sub-second limits (criteria 1 to 3)
are measured after one warm-up call so that they time the computation and not
first-call import and allocation costs.
"""

import time
from fractions import Fraction

import numpy as np

from mahler.descent import DescentOptions, concentration_report, descend, parallelogram_fit
from mahler.errors import NoAtomInSubwindow, Resonance
from mahler.functional import (
    check_concavity_bound,
    d2J,
    dJ,
    finite_difference_first,
    finite_difference_second,
    localized_deformation,
    mahler,
    middle_term,
)
from mahler.polygon import (
    PolygonSupport,
    centroid,
    certify_nonminimal,
    deformation_second_difference,
    foc_residual,
    linear_image,
    mahler_exact,
    make_parallelogram,
    make_random_critical,
    make_random_symmetric,
    make_regular,
    polar,
    polar_area_exact,
    sample_support,
    santalo_point,
    simple_deformation_hessian,
)
from mahler import polytope as pt
from mahler.support import (
    GridSupport,
    cell_masses,
    curvature_measure,
    grid_angles,
    norms,
    random_half_perturbation,
    random_perturbation,
    random_smooth_body,
)

from oracles import santalo_brute_force


def timed(fn, warm=False):
    if warm:
        fn()
    t0 = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t0


def well_conditioned(rng, cond=100.0):
    while True:
        T = rng.normal(size=(2, 2))
        if np.linalg.cond(T) <= cond:
            return T


def square_foc_rational():
    """First-order residual of the unit square in exact rational arithmetic.

    Normals are the four right angles, so every sine and cosine that enters
    is 0 or +-1 and the whole computation stays in the rationals.
    """
    h = [Fraction(1)] * 4
    sin_gap = Fraction(1)  # sin(pi/2)
    cot_gap = Fraction(0)  # cot(pi/2)
    m = len(h)
    edges = [(h[(i - 1) % m] + h[(i + 1) % m]) / sin_gap - h[i] * 2 * cot_gap for i in range(m)]
    A = sum(h[i] * edges[i] for i in range(m)) / 2
    B = sum(sin_gap / (h[i] * h[(i + 1) % m]) for i in range(m)) / 2
    return [B * edges[i] - A / (2 * h[i] ** 2) * (sin_gap / h[(i + 1) % m] + sin_gap / h[(i - 1) % m])
            for i in range(m)], A, B


def test_criterion_01_exact_square(acceptance):
    sq = make_regular(2)

    def run():
        return mahler_exact(sq), polar_area_exact(sq), foc_residual(sq)

    (m, b, foc), elapsed = timed(run, warm=True)
    rational, A, B = square_foc_rational()
    from_pts = PolygonSupport.from_vertices([(1, 1), (-1, 1), (-1, -1), (1, -1)])
    checks = {
        "M = 8 to 1e-12": abs(m - 8.0) <= 1e-12,
        "polar area = 2": abs(b - 2.0) <= 1e-12,
        "rational residual exactly 0": all(r == 0 for r in rational) and A * B == 8,
        "float residual <= 1e-12": np.abs(foc).max() <= 1e-12,
        "residual from vertices <= 1e-12": np.abs(foc_residual(from_pts)).max() <= 1e-12,
    }
    ok, line = acceptance.record(1, "exact square", checks, elapsed, 1e-3)
    assert ok, line


def test_criterion_02_disc_on_grid(acceptance):
    disc = GridSupport.constant(1.0, 2048)
    m, elapsed = timed(lambda: mahler(disc), warm=True)
    checks = {"M = pi^2 within 1e-6 at n = 2048": abs(m - np.pi ** 2) <= 1e-6}
    ok, line = acceptance.record(2, "disc on grid", checks, elapsed, 1e-2)
    assert ok, line


def test_criterion_03_hexagon(acceptance):
    hexagon = make_regular(3)

    def run():
        m = mahler_exact(hexagon)
        grid = mahler(GridSupport(sample_support(hexagon, 720)))
        foc = np.abs(foc_residual(hexagon)).max()
        q = simple_deformation_hessian(hexagon, 1).quadratic_form
        fd = deformation_second_difference(hexagon, 1)
        return m, grid, foc, q, fd

    (m, grid, foc, q, fd), elapsed = timed(run, warm=True)
    checks = {
        "M = 9 to 1e-12": abs(m - 9.0) <= 1e-12,
        "grid oracle within 5e-3": abs(grid - 9.0) <= 5e-3,
        "residual <= 1e-12": foc <= 1e-12,
        "quadratic form = -2 to 1e-10": abs(q + 2.0) <= 1e-10,
        "finite difference within 1e-6 relative": abs(fd - q) <= 1e-6 * abs(q),
    }
    ok, line = acceptance.record(3, "hexagon suite", checks, elapsed, 0.1)
    assert ok, line


def test_criterion_04_certificate_sweep(acceptance):
    def run():
        regular = [certify_nonminimal(make_regular(N)) for N in range(3, 13)]
        critical = []
        for seed in range(100):
            N = int(np.random.default_rng(seed).integers(3, 9))
            P = make_random_critical(N, seed=seed)
            critical.append((P.m, certify_nonminimal(P)))
        rng = np.random.default_rng(2024)
        paras = []
        while len(paras) < 100:
            a, b = np.sort(rng.uniform(0.0, np.pi, 2))
            if min(b - a, np.pi - (b - a)) < 0.2:
                continue
            P = make_parallelogram(a, b, *rng.uniform(0.3, 3.0, 2))
            paras.append(certify_nonminimal(P))
        return regular, critical, paras

    (regular, critical, paras), elapsed = timed(run)
    checks = {
        "regular 2N-gons N = 3..12 certified negative":
            all(c is not None and c.quadratic_form < 0 for c in regular),
        "100 random critical polygons with >= 6 vertices certified negative":
            len(critical) == 100
            and all(m >= 6 and c is not None and c.quadratic_form < 0 for m, c in critical),
        "100 random parallelograms give no certificate": all(c is None for c in paras),
    }
    ok, line = acceptance.record(4, "certificate sweep", checks, elapsed, 30.0)
    assert ok, line


def test_criterion_05_derivative_validation(acceptance):
    def run():
        worst = [0.0, 0.0, 0.0]
        for seed in range(50):
            rng = np.random.default_rng(seed)
            h = random_smooth_body(rng, 720)
            v = random_perturbation(rng, 720)
            first, fd1 = dJ(h, v), finite_difference_first(h, v)
            second, fd2 = d2J(h, v), finite_difference_second(h, v)
            mt = middle_term(h, v)
            worst[0] = max(worst[0], abs(first - fd1) / abs(fd1))
            worst[1] = max(worst[1], abs(second - fd2) / abs(fd2))
            worst[2] = max(worst[2], abs(mt.via_dA - mt.via_measure) / abs(mt.via_dA))
        return worst

    worst, elapsed = timed(run)
    checks = {
        f"first variation vs difference {worst[0]:.2e} <= 1e-6": worst[0] <= 1e-6,
        f"second variation vs difference {worst[1]:.2e} <= 1e-4": worst[1] <= 1e-4,
        f"middle-term cross-check {worst[2]:.2e} <= 1e-6": worst[2] <= 1e-6,
    }
    ok, line = acceptance.record(5, "derivative validation, 50 pairs", checks, elapsed, 10.0)
    assert ok, line


def test_criterion_06_concavity(acceptance):
    def run():
        excess = []
        for seed in range(200):
            rng = np.random.default_rng(seed)
            symmetric = seed % 2 == 1
            h = random_smooth_body(rng, 720, symmetric=symmetric)
            v = random_half_perturbation(rng, 720) if symmetric else random_perturbation(rng, 720)
            chk = check_concavity_bound(h, v, symmetric=symmetric)
            excess.append(chk.lhs - chk.rhs)
        return np.array(excess)

    excess, elapsed = timed(run)
    checks = {f"violations beyond 1e-9: {int(np.sum(excess > 1e-9))} of 200": np.all(excess <= 1e-9)}
    ok, line = acceptance.record(6, "concavity bound, 200 cases", checks, elapsed, 20.0)
    assert ok, line


def measure_support_mask(mu):
    """Cells within 1.5 cells of an atom, or touching a cell with density."""
    th = grid_angles(mu.n)
    dist = np.abs(np.angle(np.exp(1j * (th[:, None] - mu.atom_angles[None, :]))))
    near = dist.min(axis=1) <= 1.5 * mu.step
    dens = mu.density > 1e-9
    return near | dens | np.roll(dens, 1) | np.roll(dens, -1)


def test_criterion_07_localized_perturbations(acceptance):
    def run():
        rng = np.random.default_rng(0)
        worst = [0.0, 0.0, -np.inf]
        valid = draws = 0
        while valid < 50:
            draws += 1
            P = make_random_symmetric(12, seed=rng)
            h = GridSupport(sample_support(P, 720))
            mu = curvature_measure(h, atom_threshold=5.0)
            a = rng.uniform(0.0, 2 * np.pi)
            length = rng.uniform(0.8, 2.8)
            cuts = np.linspace(a, a + length, 4)
            margin = 0.02 * length
            subs = [(cuts[k] + margin, cuts[k + 1] - margin) for k in range(3)]
            try:
                D = localized_deformation(mu, (a, a + length), subs)
            except (NoAtomInSubwindow, Resonance):
                continue
            valid += 1
            v = D.perturbation()
            nv = norms(v)
            outside = ~measure_support_mask(mu)
            worst[0] = max(worst[0], max(map(abs, D.boundary_slopes())))
            worst[1] = max(worst[1], np.abs(cell_masses(v.values)[outside]).max())
            worst[2] = max(worst[2], nv.linf - np.sqrt(length) * nv.h1_seminorm)
        return worst, draws

    (worst, draws), elapsed = timed(run)
    checks = {
        f"boundary slopes {worst[0]:.2e} <= 1e-8": worst[0] <= 1e-8,
        f"measure outside support {worst[1]:.2e} <= 1e-6": worst[1] <= 1e-6,
        f"Poincare excess {worst[2]:.2e} <= 1e-9": worst[2] <= 1e-9,
    }
    ok, line = acceptance.record(7, f"localized perturbations, 50 windows ({draws} draws)",
                                 checks, elapsed, 5.0)
    assert ok, line


def test_criterion_08_descent(acceptance):
    def run():
        return descend(GridSupport.constant(1.0, 720), DescentOptions(seed=1, symmetric=True))

    trace, elapsed = timed(run)
    final = trace.values[-1]
    topk = concentration_report(trace.final, 4).topk_fraction
    dist = parallelogram_fit(trace.final).distance
    checks = {
        f"final J {final:.6f} <= 8.1": final <= 8.1,
        f"top-4 concentration {topk:.6f} >= 0.99": topk >= 0.99,
        f"Hausdorff to fitted parallelogram {dist:.2e} <= 0.05": dist <= 0.05,
    }
    ok, line = acceptance.record(8, "descent from the disc, seed 1", checks, elapsed, 60.0)
    assert ok, line


def test_criterion_09_bounds_scan(acceptance):
    def run():
        rows = []
        for seed in range(100):
            rng = np.random.default_rng(seed)
            P = make_random_symmetric(int(rng.integers(2, 9)), seed=rng)
            m = mahler_exact(P)
            dual = abs(mahler_exact(polar(P)) - m)
            affine = abs(mahler_exact(linear_image(P, well_conditioned(rng))) - m)
            rows.append((m, dual, affine))
        return np.array(rows)

    rows, elapsed = timed(run)
    m, dual, affine = rows.T
    checks = {
        f"8 - 1e-9 <= M (min {m.min():.12f})": m.min() >= 8.0 - 1e-9,
        f"M <= pi^2 (max {m.max():.6f})": m.max() <= np.pi ** 2,
        f"duality {dual.max():.1e} <= 1e-10": dual.max() <= 1e-10,
        f"affine invariance {affine.max():.1e} <= 1e-8": affine.max() <= 1e-8,
    }
    ok, line = acceptance.record(9, "bounds scan, 100 polygons", checks, elapsed, 10.0)
    assert ok, line


def test_criterion_10_three_dimensional(acceptance):
    def run():
        cube_m = pt.mahler(pt.cube())
        segment = pt.hull([[-1.0], [1.0]])
        cross2 = pt.hull([[1, 0], [0, 1], [-1, 0], [0, -1]])
        prod_m = pt.mahler(pt.product_body(segment, cross2))
        rng = np.random.default_rng(7)
        gaps = np.array([pt.kuperberg_gap(pt.random_symmetric(rng)) for _ in range(50)])
        return cube_m, prod_m, gaps

    (cube_m, prod_m, gaps), elapsed = timed(run)
    checks = {
        "M(cube) = 32/3 to 1e-9": abs(cube_m - 32 / 3) <= 1e-9,
        "M(segment x square) = 32/3 to 1e-9": abs(prod_m - 32 / 3) <= 1e-9,
        f"Kuperberg gap >= -1e-9 (min {gaps.min():.3f})": gaps.min() >= -1e-9,
    }
    ok, line = acceptance.record(10, "3-D suite, 50 polytopes", checks, elapsed, 30.0)
    assert ok, line


def test_criterion_11_nonsymmetric(acceptance):
    tri = PolygonSupport.from_vertices([(-0.2, -0.3), (0.8, -0.3), (-0.2, 0.7)])

    def run():
        oracle = santalo_brute_force(tri)
        return oracle, santalo_point(tri)

    ((z_bf, p_bf), res), elapsed = timed(run)
    c = centroid(tri)
    checks = {
        f"brute-force value {p_bf:.12f} = 27/4 within 1e-8": abs(p_bf - 27 / 4) <= 1e-8,
        "brute-force point at the centroid within 1e-6": np.linalg.norm(z_bf - c) <= 1e-6,
        "Santalo point = centroid within 1e-6": np.linalg.norm(res.point - c) <= 1e-6,
        "P(triangle) = 27/4 within 1e-8": abs(res.value - 27 / 4) <= 1e-8,
    }
    ok, line = acceptance.record(11, "nonsymmetric triangle", checks, elapsed, 5.0)
    assert ok, line
