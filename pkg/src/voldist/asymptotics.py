"""Section ladders along the affine normal and expansion fits.

After normalizing a boundary point (:mod:`voldist.normal_form`) the surface
is the graph z = |x|^2/2 + ... and the affine normal is the z axis. Planes
z = t cut small caps; recentering each plane at its section centroid gives
the critical pair through that centroid, so the ladder walks the centroid
curve gamma(t) of the point. Along it the normalized section Hessian Q(t)
(direction Hessian of the cap volume divided by section area) admits the
expansion

    Q(t) = I + t A + O(t^2),

where A is the rate matrix of the normal form (the negative of the shape
form in the normalized frame). The ladder records, per height ``t``: Q, the
section area b, the cap volume V, the in-plane centroid coordinates (which
vanish to second order: the affine normal is tangent to the centroid curve),
an off-diagonality ratio of the ambient distance Hessian (its tangent-axis
coupling decays along the ladder), and the defect of the transport identity
dV/dt = b (the conormal pairing: the distance gradient b * e_z equals dV/dt
times the conormal e_z of the normalized surface).

Geometric ladders t_k = t0 * ratio^k * reach are probed against the body's
actual reach first. Power laws are fitted on log-log scales with noise
floors: channels that a symmetry pins to zero sit at quadrature noise, and
a fitted order would be meaningless there.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .distance import cap_volume, hess_v
from .errors import ConfigInvalid, InsufficientLadder, VoldistError
from .geometry import Body, PlaneFrame, apply_affine
from .normal_form import NormalForm, ShapeForm, normalize_at, shape_form
from .quadrature import (DEFAULT_CIRCLE_NODES, DEFAULT_DEPTH_NODES,
                         SphereRule, sphere_rule)
from .sections import section_measures, section_profile

DEFAULT_T0 = 0.2
DEFAULT_RATIO = 0.5
DEFAULT_COUNT = 8

FLOOR_CENTROID = 1e-11
FLOOR_RESIDUAL = 1e-9
FLOOR_DIAGONAL = 1e-8
FLOOR_CONORMAL = 1e-8
FLOOR_RATE_SCALE = 1e-6

_PROBE_START = 1e-3
_PROBE_DOUBLINGS = 60
_PROBE_BISECTIONS = 25


def _axis_frame(t: float, centroid_xy=None) -> PlaneFrame:
    """Horizontal plane z = t with the standard in-plane basis."""
    origin = np.array([0.0, 0.0, t]) if centroid_xy is None else \
        np.array([centroid_xy[0], centroid_xy[1], t])
    basis = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]])
    return PlaneFrame(origin, np.array([0.0, 0.0, 1.0]), basis)


@dataclass(frozen=True)
class LadderRung:
    """One recentered section of the normalized body."""

    height: float             # plane height t
    area: float               # section area b(t)
    volume: float             # cap volume V(t)
    q_matrix: np.ndarray      # normalized section Hessian Q(t), (2, 2)
    centroid: np.ndarray      # in-plane centroid coordinates, (2,)
    recenter_defect: float    # residual centroid offset after recentering
    conormal_err: float       # |dV/dt - b| / b, central differences
    diag_ratio: float | None  # tangent-axis coupling of the distance Hessian


@dataclass(frozen=True)
class Ladder:
    """Geometric ladder of recentered sections along the affine normal."""

    normal_form: NormalForm
    shape: ShapeForm
    normalized_body: Body
    reach: float
    rungs: tuple

    @property
    def heights(self) -> np.ndarray:
        return np.array([r.height for r in self.rungs])

    @property
    def q_stack(self) -> np.ndarray:
        return np.array([r.q_matrix for r in self.rungs])

    @property
    def centroid_norms(self) -> np.ndarray:
        return np.array([np.linalg.norm(r.centroid) for r in self.rungs])


@dataclass(frozen=True)
class PowerFit:
    """Log-log least-squares fit of a decaying channel.

    ``order`` is None when too few samples rise above the noise floor to
    carry a slope; ``below_floor`` marks that case.
    """

    order: float | None
    prefactor: float | None
    floor: float
    samples_used: int
    below_floor: bool


@dataclass(frozen=True)
class ExpansionFit:
    """Least-squares expansion of Q(t) and power laws of the side channels."""

    q0: np.ndarray            # fitted limit
    q1: np.ndarray            # fitted first-order rate
    q2: np.ndarray | None     # curvature term when fitted
    metric_err: float         # max |q0 - I|
    rate_err: float           # max |q1 - A| over max(max |A|, 1) (A predicted)
    remainder_fit: PowerFit   # order of ||Q(t) - I - t A||, A predicted
    centroid_fit: PowerFit    # order of ||centroid(t)||
    diagonal_fit: PowerFit | None


def ladder_reach(body: Body, rule: SphereRule | None = None,
                 start: float = _PROBE_START) -> float:
    """Largest certified plane height for the normalized body.

    Doubles the height while full rung evaluation stays valid (section
    profiled with positive slopes, before and after recentering), then
    bisects the first failing interval.
    """
    if rule is None:
        rule = sphere_rule(2, DEFAULT_CIRCLE_NODES)

    def ok(t: float) -> bool:
        try:
            prof = section_profile(body, _axis_frame(t), rule)
            if np.min(prof.slopes) <= 0.0:
                return False
            meas = section_measures(prof)
            prof2 = section_profile(
                body, _axis_frame(t, meas.centroid[:2]), rule)
            return bool(np.min(prof2.slopes) > 0.0)
        except VoldistError:
            return False

    t = start
    if not ok(t):
        raise InsufficientLadder(
            f"no valid section at probe height {t:.3e}")
    for _ in range(_PROBE_DOUBLINGS):
        if not ok(2.0 * t):
            break
        t *= 2.0
    else:
        return t
    lo, hi = t, 2.0 * t
    for _ in range(_PROBE_BISECTIONS):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


def _evaluate_rung(body: Body, t: float, rule: SphereRule,
                   circle_nodes: int, depth_nodes: int,
                   diagnostics: bool) -> LadderRung:
    prof = section_profile(body, _axis_frame(t), rule)
    meas = section_measures(prof)
    centroid_xy = meas.centroid[:2].copy()
    frame = _axis_frame(t, centroid_xy)
    meas = section_measures(section_profile(body, frame, rule))
    defect = float(np.linalg.norm(meas.centroid_offset))
    centroid_xy += meas.centroid_offset

    volume = cap_volume(body, frame, circle_nodes, depth_nodes)
    delta = 1e-5 * t
    v_up = cap_volume(body, frame.shifted(np.zeros(2), delta),
                      circle_nodes, depth_nodes)
    v_dn = cap_volume(body, frame.shifted(np.zeros(2), -delta),
                      circle_nodes, depth_nodes)
    conormal_err = abs((v_up - v_dn) / (2.0 * delta) - meas.area) / meas.area

    diag_ratio = None
    if diagnostics:
        # keep the difference step well below the height of the plane
        step = min(1e-4, 0.25 * t / max(body.diameter, 1e-300))
        hv = hess_v(body, frame.point, step_scale=step, rule=rule)
        m = hv.matrix
        coupling = max(abs(m[0, 2]), abs(m[1, 2]))
        diag_ratio = coupling / np.max(np.abs(m))

    return LadderRung(t, meas.area, volume, meas.normalized, centroid_xy,
                      defect, conormal_err, diag_ratio)


def build_ladder(body: Body, point: np.ndarray,
                 t0: float = DEFAULT_T0, ratio: float = DEFAULT_RATIO,
                 count: int = DEFAULT_COUNT,
                 circle_nodes: int = DEFAULT_CIRCLE_NODES,
                 depth_nodes: int = DEFAULT_DEPTH_NODES,
                 diagnostics: bool = True) -> Ladder:
    """Normalize the body at a boundary point and ladder down the normal.

    Heights are t_k = t0 * ratio^k * reach for k = 0..count-1, with reach
    probed on the normalized body. Rung evaluation recenters each plane at
    its section centroid, so every rung is a critical pair of the cap
    volume.
    """
    if not 0.0 < ratio < 1.0:
        raise ConfigInvalid("ladder ratio must lie in (0, 1)")
    if count < 4:
        raise ConfigInvalid("a ladder needs at least four rungs")
    nf = normalize_at(body, point)
    shape = shape_form(nf)
    normalized = apply_affine(body, nf.to_normalized)
    rule = sphere_rule(2, circle_nodes)
    reach = ladder_reach(normalized, rule)
    rungs = []
    for k in range(count):
        t = t0 * ratio ** k * reach
        rungs.append(_evaluate_rung(normalized, t, rule,
                                    circle_nodes, depth_nodes, diagnostics))
    return Ladder(nf, shape, normalized, reach, tuple(rungs))


def power_fit(heights: np.ndarray, values: np.ndarray,
              floor: float) -> PowerFit:
    """Slope of log(values) against log(heights), ignoring floored samples."""
    heights = np.asarray(heights, dtype=float)
    values = np.asarray(values, dtype=float)
    mask = values > floor
    used = int(np.sum(mask))
    if used < 3:
        return PowerFit(None, None, floor, used, True)
    slope, intercept = np.polyfit(np.log(heights[mask]),
                                  np.log(values[mask]), 1)
    return PowerFit(float(slope), float(np.exp(intercept)), floor, used,
                    False)


def fit_expansion(ladder: Ladder, include_quadratic: bool = True) -> ExpansionFit:
    """Least-squares expansion Q(t) = q0 + t q1 (+ t^2 q2) over the rungs.

    The quadratic term absorbs the curvature of Q(t) so that q0 and q1 are
    clean extractions of the limit and the rate. The remainder channel is
    measured against the prediction I + t A with A taken from the normal
    form itself (not from the fit), so its t^2 scaling is uncontaminated by
    fitting error.
    """
    ts = ladder.heights
    qs = ladder.q_stack
    cols = [np.ones_like(ts), ts]
    if include_quadratic:
        cols.append(ts ** 2)
    design = np.column_stack(cols)
    flat = qs.reshape(len(ts), 4)
    coeffs, *_ = np.linalg.lstsq(design, flat, rcond=None)
    q0 = coeffs[0].reshape(2, 2)
    q1 = coeffs[1].reshape(2, 2)
    q2 = coeffs[2].reshape(2, 2) if include_quadratic else None

    rate = ladder.shape.rate_matrix
    metric_err = float(np.max(np.abs(q0 - np.eye(2))))
    # relative comparison against the predicted first-order rate; when the
    # shape form is flat (round bodies) fall back to an absolute one
    rate_scale = float(np.max(np.abs(rate)))
    if rate_scale <= FLOOR_RATE_SCALE:
        rate_scale = 1.0
    rate_err = float(np.max(np.abs(q1 - rate))) / rate_scale

    remainder = np.array([
        np.max(np.abs(qs[k] - np.eye(2) - ts[k] * rate))
        for k in range(len(ts))])
    remainder_fit = power_fit(ts, remainder, FLOOR_RESIDUAL)
    centroid_fit = power_fit(ts, ladder.centroid_norms, FLOOR_CENTROID)

    diagonal_fit = None
    ratios = [r.diag_ratio for r in ladder.rungs]
    if all(r is not None for r in ratios):
        diagonal_fit = power_fit(ts, np.array(ratios), FLOOR_DIAGONAL)

    return ExpansionFit(q0, q1, q2, metric_err, rate_err, remainder_fit,
                        centroid_fit, diagonal_fit)
