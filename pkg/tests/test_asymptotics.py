"""Section ladders and expansion fits along the affine normal."""

import numpy as np
import pytest

from voldist.asymptotics import (Ladder, build_ladder, fit_expansion,
                                 ladder_reach, power_fit)
from voldist.errors import ConfigInvalid, InsufficientLadder
from voldist.geometry import AffineMap, Ellipsoid, QuarticGraph, apply_affine

SOUTH = np.array([0.0, 0.0, -1.0])


@pytest.fixture(scope="module")
def unit_sphere_ladder():
    return build_ladder(Ellipsoid(np.zeros(3), np.eye(3)), SOUTH,
                        diagnostics=False)


@pytest.fixture(scope="module")
def cubic_ladder():
    return build_ladder(QuarticGraph(1.0, np.zeros(5), 0.8), np.zeros(3))


@pytest.fixture(scope="module")
def asymmetric_ladder():
    return build_ladder(QuarticGraph(1.0, np.array([1.0, 0, 0, 0, 0]), 0.8),
                        np.zeros(3))


def test_heights_follow_the_geometric_schedule(unit_sphere_ladder):
    lad = unit_sphere_ladder
    expected = 0.2 * 0.5 ** np.arange(8) * lad.reach
    assert np.allclose(lad.heights, expected, rtol=0, atol=0)


def test_unit_sphere_rungs_are_exact(unit_sphere_ladder):
    # ball sections: Q(t) = (1 - t) I with no higher terms at all
    for rung in unit_sphere_ladder.rungs:
        expected = (1.0 - rung.height) * np.eye(2)
        assert np.max(np.abs(rung.q_matrix - expected)) < 1e-12
        assert np.linalg.norm(rung.centroid) < 1e-12
        assert rung.recenter_defect < 1e-12
        assert rung.conormal_err < 1e-8


def test_unit_sphere_fit_recovers_exact_rate(unit_sphere_ladder):
    fit = fit_expansion(unit_sphere_ladder)
    assert fit.metric_err < 1e-12
    assert np.max(np.abs(fit.q1 + np.eye(2))) < 1e-10
    assert fit.rate_err < 1e-10
    assert fit.remainder_fit.below_floor
    assert fit.centroid_fit.below_floor


def test_unit_sphere_reach_is_the_equator(unit_sphere_ladder):
    assert 0.99 <= unit_sphere_ladder.reach <= 1.0


@pytest.mark.parametrize("radius", [0.5, 4.0])
def test_sphere_family_rate_matches_shape_form(radius):
    body = Ellipsoid(np.zeros(3), radius * np.eye(3))
    lad = build_ladder(body, np.array([0.0, 0.0, -radius]),
                       diagnostics=False)
    assert np.allclose(lad.shape.rate_matrix,
                       -radius ** -1.5 * np.eye(2), atol=1e-10)
    fit = fit_expansion(lad)
    assert fit.rate_err < 1e-9
    assert fit.metric_err < 1e-9


def test_paraboloid_sections_are_stationary():
    body = QuarticGraph(0.0, np.zeros(5), 0.8)
    lad = build_ladder(body, np.zeros(3), diagnostics=False)
    # z = |x|^2/2 has Q(t) = I for every height and a rim-limited reach
    assert lad.reach == pytest.approx(0.32, abs=1e-4)
    for rung in lad.rungs:
        assert np.max(np.abs(rung.q_matrix - np.eye(2))) < 1e-12
    fit = fit_expansion(lad)
    assert fit.metric_err < 1e-12
    assert np.max(np.abs(fit.q1)) < 1e-10
    assert fit.remainder_fit.below_floor


def test_ellipsoid_rate_matches_closed_form():
    body = Ellipsoid(np.zeros(3), np.diag([1.0, 1.0, 2.0]))
    lad = build_ladder(body, np.array([0.0, 0.0, -2.0]), diagnostics=False)
    assert np.allclose(lad.shape.rate_matrix, -2.0 ** -0.5 * np.eye(2),
                       atol=1e-10)
    fit = fit_expansion(lad)
    assert fit.rate_err < 1e-9


def test_sheared_ball_generic_point_is_exactly_linear():
    lin = np.array([[1.0, 0.4, 0.7], [0.0, 1.0, -0.3], [0.2, 0.0, 1.0]])
    body = apply_affine(Ellipsoid(np.zeros(3), np.eye(3)),
                        AffineMap(lin, np.zeros(3)))
    q = lin @ (-np.array([0.3, -0.5, np.sqrt(1.0 - 0.34)]))
    lad = build_ladder(body, q, diagnostics=False)
    scale = np.linalg.det(lin) ** -0.5
    assert np.allclose(lad.shape.rate_matrix, -scale * np.eye(2), atol=1e-9)
    fit = fit_expansion(lad)
    assert fit.rate_err < 1e-8
    assert fit.metric_err < 1e-8
    assert fit.remainder_fit.below_floor
    assert fit.centroid_fit.below_floor


def test_pure_cubic_rate(cubic_ladder):
    fit = fit_expansion(cubic_ladder)
    assert fit.metric_err < 1e-5
    assert np.max(np.abs(fit.q1 - 0.5 * np.eye(2))) < 0.01
    assert fit.rate_err < 0.02


def test_pure_cubic_remainder_is_second_order(cubic_ladder):
    fit = fit_expansion(cubic_ladder)
    assert not fit.remainder_fit.below_floor
    assert fit.remainder_fit.order >= 1.8
    assert fit.remainder_fit.order == pytest.approx(2.0, abs=0.15)


def test_pure_cubic_symmetry_pins_centroid_and_coupling(cubic_ladder):
    # three-fold symmetry makes the centroid and the tangent-axis coupling
    # vanish identically; both channels must sit at noise level
    fit = fit_expansion(cubic_ladder)
    assert fit.centroid_fit.below_floor
    for rung in cubic_ladder.rungs:
        assert np.linalg.norm(rung.centroid) < 1e-11
        assert rung.diag_ratio < 1e-7
    assert fit.diagonal_fit.below_floor


def test_pure_cubic_conormal_identity_is_noise(cubic_ladder):
    for rung in cubic_ladder.rungs:
        assert rung.conormal_err < 1e-8


def test_asymmetric_rate(asymmetric_ladder):
    fit = fit_expansion(asymmetric_ladder)
    assert np.max(np.abs(fit.q1 - np.diag([0.25, 0.5]))) < 0.01
    assert fit.rate_err < 0.02
    assert fit.remainder_fit.order >= 1.8


def test_asymmetric_centroid_curve_is_second_order(asymmetric_ladder):
    fit = fit_expansion(asymmetric_ladder)
    assert not fit.centroid_fit.below_floor
    assert fit.centroid_fit.samples_used == 8
    assert fit.centroid_fit.order == pytest.approx(2.0, abs=0.1)


def test_asymmetric_coupling_decays(asymmetric_ladder):
    fit = fit_expansion(asymmetric_ladder)
    assert not fit.diagonal_fit.below_floor
    assert fit.diagonal_fit.order >= 0.9
    ratios = [r.diag_ratio for r in asymmetric_ladder.rungs]
    assert all(b <= a * 1.01 for a, b in zip(ratios, ratios[1:]))


def test_rung_criticality_certificates(asymmetric_ladder):
    for rung in asymmetric_ladder.rungs:
        assert rung.recenter_defect < 1e-12
        assert rung.area > 0
        assert rung.volume > 0


def test_ladder_is_deterministic():
    body = QuarticGraph(1.0, np.array([1.0, 0, 0, 0, 0]), 0.8)
    a = build_ladder(body, np.zeros(3), diagnostics=False)
    b = build_ladder(body, np.zeros(3), diagnostics=False)
    assert a.reach == b.reach
    assert np.array_equal(a.q_stack, b.q_stack)
    assert np.array_equal(a.heights, b.heights)
    assert all(x.volume == y.volume for x, y in zip(a.rungs, b.rungs))


def test_reach_probe_on_narrow_domain_raises():
    body = QuarticGraph(0.0, np.zeros(5), 0.02)
    with pytest.raises(InsufficientLadder):
        build_ladder(body, np.zeros(3), diagnostics=False)


def test_ladder_config_guards():
    body = Ellipsoid(np.zeros(3), np.eye(3))
    with pytest.raises(ConfigInvalid):
        build_ladder(body, SOUTH, ratio=1.0)
    with pytest.raises(ConfigInvalid):
        build_ladder(body, SOUTH, count=3)


def test_power_fit_recovers_synthetic_exponent():
    ts = 0.1 * 0.5 ** np.arange(8)
    fit = power_fit(ts, 3.0 * ts ** 2.5, floor=1e-30)
    assert fit.order == pytest.approx(2.5, abs=1e-12)
    assert fit.prefactor == pytest.approx(3.0, rel=1e-10)
    assert not fit.below_floor


def test_power_fit_floors_noise():
    ts = 0.1 * 0.5 ** np.arange(8)
    fit = power_fit(ts, np.full(8, 1e-12), floor=1e-9)
    assert fit.below_floor
    assert fit.order is None
    assert fit.samples_used == 0


def test_power_fit_uses_only_samples_above_floor():
    ts = 0.1 * 0.5 ** np.arange(8)
    vals = ts ** 2
    vals[-3:] = 1e-15
    fit = power_fit(ts, vals, floor=1e-9)
    assert fit.samples_used == 5
    assert fit.order == pytest.approx(2.0, abs=1e-10)


def test_smaller_t0_reduces_rate_error():
    body = QuarticGraph(1.0, np.zeros(5), 0.8)
    coarse = fit_expansion(build_ladder(body, np.zeros(3), t0=0.4,
                                        diagnostics=False))
    fine = fit_expansion(build_ladder(body, np.zeros(3), t0=0.1,
                                      diagnostics=False))
    assert fine.rate_err < coarse.rate_err
