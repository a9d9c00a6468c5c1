"""Bodies, rays, frames, jets and serialization."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import bisect_ray, boundary_height
from voldist.errors import (ConfigInvalid, NoIntersection, NotConvex,
                            NotInside, NotOnSurface, SingularMap,
                            UnboundedCap, UnsupportedDimension)
from voldist.geometry import (AffineImage, AffineMap, Ellipsoid, PlaneFrame,
                              QuarticGraph, apply_affine, body_from_dict,
                              graph_jet4, make_frame, orthonormal_complement,
                              ray_cast, surface_normal)


def unit_ball(dim=3):
    return Ellipsoid(np.zeros(dim), np.eye(dim))


def paraboloid(radius=0.8):
    return QuarticGraph(0.0, np.zeros(5), radius)


# ---------------------------------------------------------------------------
# affine maps


def test_affine_map_compose_inverse():
    rng = np.random.default_rng(3)
    a = AffineMap(rng.normal(size=(3, 3)) + 3 * np.eye(3), rng.normal(size=3))
    b = AffineMap(rng.normal(size=(3, 3)) + 3 * np.eye(3), rng.normal(size=3))
    pts = rng.normal(size=(5, 3))
    np.testing.assert_allclose(a.compose(b)(pts), a(b(pts)), rtol=1e-12, atol=1e-12)
    np.testing.assert_allclose(a.inverse()(a(pts)), pts, rtol=1e-10, atol=1e-12)


def test_affine_map_rejects_singular():
    with pytest.raises(SingularMap):
        AffineMap(np.zeros((3, 3)), np.zeros(3))


# ---------------------------------------------------------------------------
# frames


def test_make_frame_orthonormal():
    fr = make_frame([0.1, 0.2, 0.3], [1.0, 2.0, -1.0])
    gram = np.column_stack([fr.basis, fr.normal])
    np.testing.assert_allclose(gram.T @ gram, np.eye(3), atol=1e-13)


def test_orthonormal_complement_deterministic():
    n = np.array([0.3, -0.5, 0.81])
    b1 = orthonormal_complement(n)
    b2 = orthonormal_complement(n.copy())
    np.testing.assert_array_equal(b1, b2)


def test_plane_frame_validation():
    with pytest.raises(ValueError):
        PlaneFrame(np.zeros(3), np.array([0.0, 0.0, 2.0]), np.eye(3)[:, :2])
    with pytest.raises(ValueError):
        PlaneFrame(np.zeros(3), np.array([0.0, 0.0, 1.0]),
                   np.array([[1.0, 0.1], [0.0, 1.0], [0.0, 0.0]]))


# ---------------------------------------------------------------------------
# ray casting


def test_ellipsoid_ray_cast_frozen():
    # semi-axes (1, 2, 3): ray from the center along e3 exits at distance 3
    body = Ellipsoid(np.zeros(3), np.diag([1.0, 2.0, 3.0]))
    assert abs(ray_cast(body, np.zeros(3), [0.0, 0.0, 1.0]) - 3.0) < 1e-13


def test_ray_cast_requires_interior_origin():
    with pytest.raises(NotInside):
        ray_cast(unit_ball(), [2.0, 0.0, 0.0], [1.0, 0.0, 0.0])
    with pytest.raises(NotInside):
        ray_cast(paraboloid(), [0.0, 0.0, -0.1], [0.0, 0.0, 1.0])


def test_graph_ray_cast_against_bisection():
    body = QuarticGraph(1.0, np.array([1.0, 0.5, -0.2, 0.3, 0.8]), 0.8)
    rng = np.random.default_rng(11)
    origin = np.array([0.05, -0.02, 0.2])
    for _ in range(25):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        try:
            s = ray_cast(body, origin, d)
        except NoIntersection:
            continue
        hit = origin + s * d
        assert abs(body.implicit_values(hit)) < 1e-12 * max(1.0, body.diameter)
        s_oracle = bisect_ray(body, origin, d, s * (1.0 + 1e-6))
        assert abs(s - s_oracle) < 1e-11 * max(s, 0.1)


def test_graph_ray_cast_domain_exit():
    body = paraboloid(0.5)
    with pytest.raises(NoIntersection):
        # horizontal ray at z = 0.2 exits the cylinder (rim height 0.125) first
        ray_cast(body, [0.0, 0.0, 0.2], [1.0, 0.0, 0.0])
    with pytest.raises(NoIntersection):
        # straight up never meets the graph
        ray_cast(body, [0.0, 0.0, 0.01], [0.0, 0.0, 1.0])


def test_graph_ray_cast_vertical_down():
    body = paraboloid(0.8)
    s = ray_cast(body, [0.1, 0.2, 0.3], [0.0, 0.0, -1.0])
    expected = 0.3 - 0.5 * (0.1 ** 2 + 0.2 ** 2)
    assert abs(s - expected) < 1e-13


@settings(max_examples=40, deadline=None)
@given(ox=st.floats(-0.4, 0.4), oy=st.floats(-0.3, 0.3),
       dx=st.floats(-1, 1), dy=st.floats(-1, 1), dz=st.floats(-1, 1))
def test_ellipsoid_ray_cast_consistency(ox, oy, dx, dy, dz):
    d = np.array([dx, dy, dz])
    if np.linalg.norm(d) < 1e-3:
        d = np.array([1.0, 0.0, 0.0])
    d /= np.linalg.norm(d)
    body = Ellipsoid(np.array([0.1, 0.0, -0.2]), np.diag([1.0, 0.8, 1.3]))
    origin = np.array([ox + 0.1, oy, -0.2])
    s = ray_cast(body, origin, d)
    hit = origin + s * d
    assert abs(body.implicit_values(hit)) < 1e-11


def test_ray_cast_affine_equivariance():
    rng = np.random.default_rng(5)
    base = QuarticGraph(0.8, np.array([0.5, 0.0, 0.2, 0.0, -0.1]), 0.8)
    amap = AffineMap(np.array([[1.2, 0.1, 0.0], [0.0, 0.9, 0.3], [0.1, 0.0, 1.1]]),
                     np.array([0.3, -0.2, 0.5]))
    image = apply_affine(base, amap)
    origin = np.array([0.02, 0.01, 0.15])
    for _ in range(10):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        try:
            s = ray_cast(base, origin, d)
        except NoIntersection:
            continue
        hit = origin + s * d
        od = amap(origin)
        dd = amap.apply_vector(d)
        dd_unit = dd / np.linalg.norm(dd)
        s_img = ray_cast(image, od, dd_unit)
        np.testing.assert_allclose(od + s_img * dd_unit, amap(hit),
                                   rtol=0, atol=1e-10)


# ---------------------------------------------------------------------------
# normals, support, containment


def test_surface_normal_ball():
    n = surface_normal(unit_ball(), [0.0, 0.0, 1.0])
    np.testing.assert_allclose(n, [0.0, 0.0, 1.0], atol=1e-14)
    with pytest.raises(NotOnSurface):
        surface_normal(unit_ball(), [0.0, 0.0, 0.5])


def test_support_point_maximizes():
    rng = np.random.default_rng(17)
    body = Ellipsoid(np.array([0.2, -0.1, 0.0]),
                     np.array([[1.0, 0.2, 0.0], [0.0, 0.7, 0.1], [0.0, 0.0, 1.4]]))
    for _ in range(10):
        w = rng.normal(size=3)
        y = body.support_point(w)
        assert abs(body.implicit_values(y)) < 1e-10
        dirs = rng.normal(size=(200, 3))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        s = body.ray_cast_many(body.center[None, :], dirs)
        samples = body.center + s[:, None] * dirs
        assert np.max(samples @ w) <= y @ w + 1e-9 * np.linalg.norm(w)


def test_graph_support_point():
    body = QuarticGraph(1.0, np.zeros(5), 0.8)
    y = body.support_point(np.array([0.1, -0.05, -1.0]))
    g = body.height_gradient(y[:2])
    np.testing.assert_allclose(g, [0.1, -0.05], atol=1e-12)
    with pytest.raises(UnboundedCap):
        body.support_point(np.array([0.0, 0.0, 1.0]))


def test_contains():
    assert unit_ball().contains([0.5, 0.0, 0.0])
    assert not unit_ball().contains([1.5, 0.0, 0.0])
    body = paraboloid(0.5)
    assert body.contains([0.1, 0.0, 0.2])
    assert not body.contains([0.1, 0.0, 0.001])
    assert not body.contains([0.6, 0.0, 1.0])


# ---------------------------------------------------------------------------
# convexity guard


def test_nonconvex_rejected():
    with pytest.raises(NotConvex):
        QuarticGraph(10.0, np.zeros(5), 0.8)


def test_convex_margin_accepted():
    QuarticGraph(1.0, np.array([1.0, 1.0, 0.0, 0.0, 0.0]), 0.8)


# ---------------------------------------------------------------------------
# jets


def test_sphere_jet_frozen():
    # unit sphere at the south pole: f = r^2/2 + r^4/8 + ...
    jet = graph_jet4(unit_ball(), [0.0, 0.0, -1.0])
    np.testing.assert_allclose(jet.axis, [0.0, 0.0, 1.0], atol=1e-14)
    np.testing.assert_allclose(jet.quadratic, np.eye(2), atol=1e-13)
    np.testing.assert_allclose(jet.cubic, np.zeros((2, 2, 2)), atol=1e-13)
    t = jet.quartic
    got = (t[0, 0, 0, 0], t[0, 0, 0, 1], t[0, 0, 1, 1], t[0, 1, 1, 1], t[1, 1, 1, 1])
    np.testing.assert_allclose(got, (3.0, 0.0, 1.0, 0.0, 3.0), atol=1e-12)


def test_sphere_radius_two_jet():
    body = Ellipsoid(np.zeros(3), 2.0 * np.eye(3))
    jet = graph_jet4(body, [0.0, 0.0, -2.0])
    np.testing.assert_allclose(jet.quadratic, 0.5 * np.eye(2), atol=1e-13)


def test_quartic_graph_jet_recovers_coefficients():
    c = 0.7
    a = np.array([0.9, -0.3, 0.4, 0.2, -0.6])
    body = QuarticGraph(c, a, 0.8)
    jet = graph_jet4(body, np.zeros(3))
    np.testing.assert_allclose(jet.quadratic, np.eye(2), atol=1e-13)
    t3 = jet.cubic
    # tangent basis at the origin is the standard one up to sign/order
    np.testing.assert_allclose(jet.axis, [0.0, 0.0, 1.0], atol=1e-14)
    b = jet.tangent_basis
    # express the cubic back in ambient xy coordinates and compare
    m3 = np.einsum("ia,jb,kc,abc->ijk", b, b, b, t3)
    expected = np.zeros((3, 3, 3))
    expected[0, 0, 0] = c
    expected[0, 1, 1] = expected[1, 0, 1] = expected[1, 1, 0] = -c
    np.testing.assert_allclose(m3, expected, atol=1e-12)
    m4 = np.einsum("ia,jb,kc,ld,abcd->ijkl", b, b, b, b, jet.quartic)
    assert abs(m4[0, 0, 0, 0] - a[0]) < 1e-12
    assert abs(m4[0, 0, 0, 1] - a[1]) < 1e-12
    assert abs(m4[0, 0, 1, 1] - a[2]) < 1e-12
    assert abs(m4[0, 1, 1, 1] - a[3]) < 1e-12
    assert abs(m4[1, 1, 1, 1] - a[4]) < 1e-12


def test_jet_frame_right_handed():
    rng = np.random.default_rng(23)
    body = Ellipsoid(np.array([0.1, 0.2, -0.1]),
                     np.array([[1.1, 0.2, 0.0], [0.0, 0.9, 0.1], [0.2, 0.0, 1.3]]))
    u = rng.normal(size=3)
    q = body.support_point(u)
    jet = graph_jet4(body, q)
    assert np.linalg.det(jet.frame_matrix()) > 0.0
    outward = surface_normal(body, q)
    np.testing.assert_allclose(jet.axis, -outward, atol=1e-13)


@pytest.mark.parametrize("body,point", [
    (unit_ball(), np.array([0.0, 0.0, -1.0])),
    (Ellipsoid(np.zeros(3), np.diag([1.0, 1.0, 2.0])), np.array([0.0, 0.0, -2.0])),
    (QuarticGraph(1.0, np.array([1.0, 0.0, 0.5, 0.0, -0.3]), 0.8),
     np.array([0.3, 0.1, 0.3 ** 2 / 2 + 0.1 ** 2 / 2])),
    (AffineImage(unit_ball(),
                 AffineMap(np.array([[1.0, 0.0, 0.3], [0.0, 1.0, 0.0],
                                     [0.0, 0.0, 1.0]]), np.array([0.1, 0.0, 0.0]))),
     None),
])
def test_jet_truncation_order(body, point):
    # max |f - jet| / r^4 over a polar grid must drop by >= 8 from r=0.1 to 0.01
    if isinstance(body, QuarticGraph):
        q = point.copy()
        q[2] = float(body.height(q[:2]))
    elif isinstance(body, AffineImage):
        q = body.map(np.array([0.0, 0.0, -1.0]))
    else:
        q = point
    jet = graph_jet4(body, q)
    angles = np.linspace(0.0, 2.0 * np.pi, 17)[:-1]
    ratios = []
    for r in (1e-1, 1e-2):
        errs = []
        for th in angles:
            x = r * np.array([np.cos(th), np.sin(th)])
            z_jet = float(jet.height(x))
            z_true = boundary_height(body, q, jet.tangent_basis, jet.axis, x, z_jet)
            errs.append(abs(z_true - z_jet))
        ratios.append(max(errs) / r ** 4)
    assert ratios[0] / max(ratios[1], 1e-300) >= 8.0
    assert ratios[1] * 1e-8 <= 1e-8  # residual at r = 1e-2 stays below 1e-8
    errs_abs = ratios[1] * (1e-2) ** 4
    assert errs_abs <= 1e-8


def test_jet_rejects_off_surface_point():
    with pytest.raises(NotOnSurface):
        graph_jet4(unit_ball(), [0.0, 0.0, -0.9])


# ---------------------------------------------------------------------------
# apply_affine and serialization


def test_apply_affine_ellipsoid_direct():
    amap = AffineMap(np.diag([1.0, 1.0, 2.0]), np.zeros(3))
    img = apply_affine(unit_ball(), amap)
    assert isinstance(img, Ellipsoid)
    np.testing.assert_allclose(img.linear, np.diag([1.0, 1.0, 2.0]))


def test_apply_affine_collapses_wrappers():
    amap = AffineMap(np.eye(3) * 1.5, np.array([0.0, 1.0, 0.0]))
    img = apply_affine(paraboloid(), amap)
    img2 = apply_affine(img, amap)
    assert isinstance(img2, AffineImage)
    assert isinstance(img2.base, QuarticGraph)


def test_body_serialization_roundtrip():
    bodies = [
        unit_ball(),
        QuarticGraph(1.0, np.array([1.0, 0.0, 0.0, 0.0, 0.0]), 0.8),
        apply_affine(paraboloid(),
                     AffineMap(np.diag([2.0, 1.0, 1.0]), np.array([0.1, 0.0, 0.0]))),
    ]
    for body in bodies:
        d = body.to_dict()
        rebuilt = body_from_dict(d)
        assert rebuilt.to_dict() == d
        pts = np.array([[0.05, 0.02, 0.4]])
        np.testing.assert_allclose(rebuilt.implicit_values(pts),
                                   body.implicit_values(pts), rtol=1e-14)


def test_body_from_dict_rejects_malformed():
    with pytest.raises(ConfigInvalid):
        body_from_dict({"type": "torus"})
    with pytest.raises(ConfigInvalid):
        body_from_dict({"type": "ellipsoid", "center": [0, 0, 0]})


def test_ellipsoid_dimension_guard():
    with pytest.raises(UnsupportedDimension):
        Ellipsoid(np.zeros(5), np.eye(5))


def test_implicit_poly_matches_values():
    body = AffineImage(Ellipsoid(np.array([0.1, 0.0, 0.2]), np.diag([1.0, 0.8, 1.2])),
                       AffineMap(np.array([[1.0, 0.2, 0.0], [0.0, 1.0, 0.0],
                                           [0.0, 0.1, 0.9]]), np.array([0.0, 0.3, 0.0])))
    poly = body.implicit_poly()
    rng = np.random.default_rng(29)
    pts = rng.normal(size=(20, 3)) * 0.5
    np.testing.assert_allclose(poly(pts), body.implicit_values(pts),
                               rtol=1e-11, atol=1e-12)
