import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mahler.errors import (
    DegenerateGap,
    NotConvexPosition,
    NotCritical,
    NotSymmetric,
    OriginNotInterior,
)
from mahler.functional import mahler
from mahler.polygon import (
    PolygonSupport,
    affine_normalize,
    area_exact,
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
    normalized_frame,
    polar,
    polar_area_exact,
    sample_support,
    santalo_point,
    shoelace,
    simple_deformation_hessian,
    translate,
)
from mahler.support import GridSupport

from oracles import santalo_brute_force

SQUARE = [(1, 1), (-1, 1), (-1, -1), (1, -1)]
RECT = [(1, 2), (-1, 2), (-1, -2), (1, -2)]


def random_matrix(rng, max_cond=100.0):
    while True:
        T = rng.normal(size=(2, 2))
        if np.linalg.cond(T) <= max_cond:
            return T


def test_from_vertices_examples():
    sq = PolygonSupport.from_vertices(SQUARE)
    assert np.allclose(sq.normals, np.arange(4) * np.pi / 2, atol=1e-15)
    assert np.allclose(sq.support_values, 1.0) and np.allclose(sq.masses, 2.0)
    rect = PolygonSupport.from_vertices(RECT)
    assert np.allclose(rect.support_values, [1, 2, 1, 2]) and np.allclose(rect.masses, [4, 2, 4, 2])
    hexagon = make_regular(3)
    assert np.allclose(hexagon.masses, 2 / np.sqrt(3))
    assert np.allclose(hexagon.normals, np.arange(6) * np.pi / 3)


def test_vertex_round_trip():
    rng = np.random.default_rng(0)
    for _ in range(20):
        P = make_random_symmetric(int(rng.integers(2, 8)), seed=rng)
        pts = P.to_vertices()
        Q = PolygonSupport.from_vertices(pts)
        assert np.max(np.abs(Q.to_vertices() - pts)) < 1e-10
        assert area_exact(P) == pytest.approx(shoelace(pts), abs=1e-12)


def test_invalid_polygons():
    with pytest.raises(NotConvexPosition):
        PolygonSupport.from_vertices([(1, 1), (-1, 1), (0, 0.5), (-1, -1), (1, -1)])
    with pytest.raises(OriginNotInterior):
        PolygonSupport.from_vertices([(1, 1), (3, 1), (3, 3), (1, 3)])
    with pytest.raises(DegenerateGap):
        PolygonSupport([0.0, 0.5, 1.0], [1.0, 1.0, 1.0])
    with pytest.raises(DegenerateGap):
        PolygonSupport([0.0, 2.0, 1.0, 4.0], [1.0, 1.0, 1.0, 1.0])
    with pytest.raises(NotConvexPosition):
        PolygonSupport([0, np.pi / 2, np.pi, 3 * np.pi / 2], [1, 1, 1, 1], masses=[2, 2, 2, 2.1])


def test_polar_examples():
    sq = PolygonSupport.from_vertices(SQUARE)
    cross = polar(sq)
    assert area_exact(cross) == pytest.approx(2.0, abs=1e-14)
    assert np.allclose(sorted(map(tuple, np.round(cross.to_vertices(), 12))),
                       sorted([(1, 0), (0, 1), (-1, 0), (0, -1)]))
    hp = polar(make_regular(3))
    assert np.allclose(np.hypot(*hp.to_vertices().T), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 100_000), st.integers(2, 8))
def test_duality_and_affine_invariance(seed, N):
    rng = np.random.default_rng(seed)
    P = make_random_symmetric(N, seed=rng)
    pp = polar(polar(P))
    assert np.max(np.abs(pp.to_vertices() - P.to_vertices())) < 1e-10
    assert polar_area_exact(P) == pytest.approx(area_exact(polar(P)), abs=1e-12)
    m = mahler_exact(P)
    assert abs(mahler_exact(polar(P)) - m) < 1e-10
    assert abs(mahler_exact(linear_image(P, random_matrix(rng))) - m) < 1e-8
    assert 8.0 - 1e-9 <= m <= np.pi ** 2


def test_area_examples():
    assert area_exact(PolygonSupport.from_vertices(SQUARE)) == pytest.approx(4.0)
    assert area_exact(make_regular(3)) == pytest.approx(2 * np.sqrt(3), abs=1e-14)
    assert area_exact(PolygonSupport.from_vertices(RECT)) == pytest.approx(8.0)
    assert polar_area_exact(PolygonSupport.from_vertices(SQUARE)) == pytest.approx(2.0)
    assert polar_area_exact(make_regular(3)) == pytest.approx(1.5 * np.sqrt(3), abs=1e-14)
    assert polar_area_exact(PolygonSupport.from_vertices(RECT)) == pytest.approx(1.0)


def test_mahler_examples():
    assert mahler_exact(PolygonSupport.from_vertices(SQUARE)) == pytest.approx(8.0, abs=1e-12)
    assert mahler_exact(PolygonSupport.from_vertices(RECT)) == pytest.approx(8.0, abs=1e-12)
    assert mahler_exact(make_regular(3)) == pytest.approx(9.0, abs=1e-12)


def test_grid_quadrature_oracle():
    # slivers put many off-grid normals inside one cell; keep the aspect bounded
    rng = np.random.default_rng(4)
    checked = 0
    while checked < 10:
        P = make_random_symmetric(int(rng.integers(2, 7)), seed=rng)
        if P.masses.max() > 10 * P.support_values.min():
            continue
        checked += 1
        grid = mahler(GridSupport(sample_support(P, 8192)))
        assert grid == pytest.approx(mahler_exact(P), rel=5e-3)


def test_parallelograms_have_mahler_eight():
    rng = np.random.default_rng(2)
    for _ in range(20):
        a, b = np.sort(rng.uniform(0, np.pi, 2))
        if b - a < 0.05:
            continue
        P = make_parallelogram(a, b, *rng.uniform(0.5, 2.0, 2))
        assert mahler_exact(P) == pytest.approx(8.0, abs=1e-9)


def test_foc_residual_examples():
    assert np.array_equal(foc_residual(make_regular(2)), [0.0, 0.0])
    assert np.abs(foc_residual(PolygonSupport.from_vertices(SQUARE))).max() <= 1e-12
    assert np.abs(foc_residual(make_regular(3))).max() <= 1e-12
    assert np.abs(foc_residual(PolygonSupport.from_vertices(RECT))).max() <= 1e-12
    with pytest.raises(NotSymmetric):
        foc_residual(PolygonSupport.from_vertices([(-1, -1), (2, -1), (-1, 2)]))


def test_hessian_examples():
    sq = simple_deformation_hessian(PolygonSupport.from_vertices(SQUARE), 1)
    assert sq.bracket == pytest.approx(0.0, abs=1e-12)
    assert sq.quadratic_form == pytest.approx(0.0, abs=1e-12)
    hx = simple_deformation_hessian(make_regular(3), 1)
    assert hx.bracket == pytest.approx(-2 / (3 * np.sqrt(3)), abs=1e-12)
    assert hx.quadratic_form == pytest.approx(-2.0, abs=1e-10)
    fd = deformation_second_difference(make_regular(3), 1)
    assert fd == pytest.approx(-2.0, rel=1e-6)
    octagon = simple_deformation_hessian(make_regular(4), 1)
    assert octagon.bracket < 0
    assert deformation_second_difference(make_regular(4), 1) == pytest.approx(
        octagon.quadratic_form, rel=1e-6)


def test_hessian_requires_criticality():
    P = make_random_symmetric(4, seed=6)
    assert P.m > 4
    with pytest.raises(NotCritical):
        simple_deformation_hessian(P, 0)
    with pytest.raises(NotCritical):
        certify_nonminimal(P)


def test_affine_normalize_examples():
    Q = affine_normalize(PolygonSupport.from_vertices(RECT), 1)
    assert np.allclose(Q.to_vertices(), PolygonSupport.from_vertices(SQUARE).to_vertices(), atol=1e-12)
    rng = np.random.default_rng(8)
    for _ in range(20):
        P = make_random_symmetric(int(rng.integers(3, 7)), seed=rng)
        for i in range(P.m):
            fr = normalized_frame(P, i)
            Q = fr.polygon
            assert abs(mahler_exact(Q) - mahler_exact(P)) < 1e-10
            assert np.allclose(Q.normals[:2], [0.0, np.pi / 2], atol=1e-12)
            assert np.allclose(Q.support_values[:2], 1.0, atol=1e-12)
            assert fr.a1 <= fr.a0 + 1e-12
            if P.m > 4:
                assert area_exact(Q) < 4.0


def test_certify_examples():
    assert certify_nonminimal(PolygonSupport.from_vertices(SQUARE)) is None
    cert = certify_nonminimal(make_regular(3))
    assert cert.quadratic_form == pytest.approx(-2.0, abs=1e-10)
    for N in range(3, 13):
        c = certify_nonminimal(make_regular(N))
        assert c is not None and c.quadratic_form < 0
        fd = deformation_second_difference(make_regular(N), c.vertex_index)
        assert fd == pytest.approx(c.quadratic_form, rel=1e-6)


def test_certificate_invariants_on_random_critical():
    for seed in range(15):
        P = make_random_critical(int(np.random.default_rng(seed).integers(3, 7)), seed=seed)
        assert np.abs(foc_residual(P)).max() <= 1e-11
        c = certify_nonminimal(P)
        assert c is not None and c.quadratic_form < 0
        assert c.quadratic_form == pytest.approx(2 * polar_area_exact(P) * c.bracket, abs=1e-10)
        fd = deformation_second_difference(P, c.vertex_index)
        assert fd < 0 and fd == pytest.approx(c.quadratic_form, rel=1e-6)
        frame = c.normalized_frame
        assert frame["abs_tan_theta2"] >= frame["tan_lower_bound"] - 1e-9
        assert frame["area"] < 4.0


def test_certificate_sign_is_affine_invariant():
    rng = np.random.default_rng(21)
    for seed in range(8):
        P = make_random_critical(4, seed=seed)
        base = [simple_deformation_hessian(P, i).quadratic_form for i in range(P.m)]
        T = random_matrix(rng, 20.0)
        Q = linear_image(P, T)
        # edge order can rotate under T; compare the sorted sign patterns
        moved = [simple_deformation_hessian(Q, i, tol=1e-7).quadratic_form for i in range(Q.m)]
        assert sorted(np.sign(base)) == sorted(np.sign(moved))


def test_santalo_examples():
    sym = make_random_symmetric(4, seed=1)
    assert np.abs(santalo_point(sym).point).max() < 1e-10
    sq = translate(PolygonSupport.from_vertices([(2, 2), (-2, 2), (-2, -2), (2, -2)]), (-1, -1))
    # the square [-1, 3]^2 has its Santalo point at (1, 1)
    assert np.allclose(santalo_point(sq).point, [1.0, 1.0], atol=1e-10)
    tri = PolygonSupport.from_vertices([(-0.2, -0.3), (0.8, -0.3), (-0.2, 0.7)])
    res = santalo_point(tri)
    # vertex (0,0) of the unit right triangle sits at (-0.2, -0.3) here
    assert np.allclose(res.point + [0.2, 0.3], [1 / 3, 1 / 3], atol=1e-6)
    assert res.value == pytest.approx(27 / 4, abs=1e-8)
    assert res.gradient_norm <= 1e-10
    z, value = santalo_brute_force(tri)
    assert np.allclose(z, res.point, atol=1e-6)
    assert value == pytest.approx(27 / 4, abs=1e-8)


def test_santalo_is_centroid_equivariant():
    rng = np.random.default_rng(3)
    tri = PolygonSupport.from_vertices([(-0.2, -0.3), (0.8, -0.3), (-0.2, 0.7)])
    for _ in range(5):
        T = random_matrix(rng, 10.0)
        if np.linalg.det(T) < 0:
            T[0] *= -1
        Q = linear_image(tri, T)
        res = santalo_point(Q)
        assert np.allclose(res.point, centroid(Q), atol=1e-9)
        assert res.value == pytest.approx(27 / 4, abs=1e-8)


def test_constructors():
    sq = make_regular(2, 1.0)
    assert np.allclose(sq.to_vertices(), PolygonSupport.from_vertices(SQUARE).to_vertices())
    assert mahler_exact(make_regular(3, 1.0)) == pytest.approx(9.0, abs=1e-12)
    P = make_random_symmetric(5, seed=7)
    assert P.is_symmetric()
    closure = P.masses @ P.units
    assert np.abs(closure).max() < 1e-10
    with pytest.raises(DegenerateGap):
        make_regular(1)
