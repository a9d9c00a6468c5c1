"""Volume distance: cap volumes, the minimizing-plane solver, derivatives.

The volume distance of an interior point near the boundary is the smallest
volume cut off by a plane through the point. At the minimizer the point is
the centroid of its section, the gradient of the distance is the section
area times the plane normal (pointing into the body), and the normalized
section Hessian is the inverse of the negated tangential Hessian of the
distance (checked by :func:`hessian_identity_check`).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import (DomainExceeded, MaxIterations, NoIntersection,
                     NonpositiveDepth, NotInside, NotPositiveDefinite,
                     StepTooLarge, VoldistError)
from .geometry import Body, PlaneFrame, orthonormal_complement
from .quadrature import (DEFAULT_CIRCLE_NODES, DEFAULT_DEPTH_NODES,
                         SphereRule, depth_rule, sphere_rule)
from .sections import SectionMeasures, section_measures, section_profile

DEFAULT_SOLVER_TOL = 1e-12
DEFAULT_FD_GRAD = 1e-6
DEFAULT_FD_HESS = 1e-4
_MAX_TILT_STEP = 0.5


@dataclass(frozen=True)
class MinimizingPair:
    """Converged critical pair: the plane through a point minimizing cap volume."""

    frame: PlaneFrame
    area: float
    centroid: np.ndarray
    hessian: np.ndarray
    normalized: np.ndarray
    residual: float
    iterations: int
    volume: float | None = None

    @property
    def normal(self) -> np.ndarray:
        return self.frame.normal

    @property
    def point(self) -> np.ndarray:
        return self.frame.point


def cap_depth(body: Body, frame: PlaneFrame):
    """Depth of the cap below the frame's plane and its deepest boundary point."""
    deepest = body.support_point(-frame.normal)
    depth = float((frame.point - deepest) @ frame.normal)
    if depth <= 0.0:
        raise NonpositiveDepth("plane does not cut a cap of positive depth")
    return depth, deepest


def cap_volume(body: Body, frame: PlaneFrame,
               circle_nodes: int = DEFAULT_CIRCLE_NODES,
               depth_nodes: int = DEFAULT_DEPTH_NODES) -> float:
    """Volume cut off by the frame's plane on the ``-normal`` side.

    Integrates section areas over depth; the plane origins of the sections
    march down the chord from the frame point to the deepest boundary point,
    which keeps them strictly inside the body.
    """
    if not body.contains(frame.point):
        raise NotInside("frame point is not strictly inside the body")
    depth, deepest = cap_depth(body, frame)
    zeta, weights = depth_rule(depth, depth_nodes)
    rule = sphere_rule(frame.section_dim, circle_nodes)
    chord = (deepest - frame.point) / depth
    origins = frame.point + zeta[:, None] * chord
    dirs = frame.embed_directions(rule.nodes)
    m, k = zeta.size, rule.nodes.shape[0]
    all_origins = np.repeat(origins, k, axis=0)
    all_dirs = np.tile(dirs, (m, 1))
    radii = body.ray_cast_many(all_origins, all_dirs).reshape(m, k)
    n = frame.section_dim
    areas = (radii ** n) @ rule.weights / n
    return float(weights @ areas)


def grad_V_n(body: Body, frame: PlaneFrame,
             rule: SphereRule | None = None) -> np.ndarray:
    """Gradient of the cap volume under tilts of the plane about its point.

    Components are taken against the frame basis; the value is the section
    area times the in-plane offset from the frame point to the section
    centroid, negated.
    """
    meas = section_measures(section_profile(body, frame, rule))
    return -meas.area * meas.centroid_offset


def _transport_basis(basis: np.ndarray, normal: np.ndarray) -> np.ndarray:
    """Project a previous in-plane basis onto the new plane and re-orthonormalize."""
    b = basis - np.outer(normal, normal @ basis)
    q, r = np.linalg.qr(b)
    return q * np.sign(np.diag(r))


def _seed_normal(body: Body, point: np.ndarray) -> np.ndarray:
    """Initial plane normal: inward normal at the nearest-boundary estimate."""
    g = body.implicit_gradients(point[None, :])[0]
    norm = np.linalg.norm(g)
    if norm <= 1e-14:
        # gradient vanishes at interior symmetry centers; any direction works
        g = np.zeros(body.dim)
        g[0] = 1.0
    else:
        g = g / norm
    s = body.ray_cast_many(point[None, :], g[None, :])[0]
    hit = point + s * g
    return -body.outward_normals(hit[None, :])[0]


def minimize_direction(body: Body, point: np.ndarray,
                       seed_normal: np.ndarray | None = None,
                       tol: float = DEFAULT_SOLVER_TOL,
                       rule: SphereRule | None = None,
                       max_iterations: int = 50) -> MinimizingPair:
    """Newton solve for the plane through ``point`` minimizing cap volume.

    Convergence is declared when the section centroid coincides with the
    point within ``tol`` times the body diameter. The returned pair carries
    the section measures at the solution; its ``volume`` field is not filled
    (see :func:`volume_distance`).
    """
    p = np.asarray(point, dtype=float)
    if not body.contains(p):
        raise NotInside("point is not strictly inside the body")
    if rule is None:
        rule = sphere_rule(body.section_dim, DEFAULT_CIRCLE_NODES)
    n = np.asarray(seed_normal, dtype=float) if seed_normal is not None \
        else _seed_normal(body, p)
    n = n / np.linalg.norm(n)
    basis = orthonormal_complement(n)
    scale = body.diameter
    meas: SectionMeasures | None = None
    for it in range(1, max_iterations + 1):
        frame = PlaneFrame(p, n, basis)
        meas = section_measures(section_profile(body, frame, rule))
        residual = float(np.linalg.norm(meas.centroid_offset))
        if residual <= tol * scale:
            if not meas.positive_definite:
                raise NotPositiveDefinite(
                    "direction Hessian is not positive definite at the solution")
            return MinimizingPair(frame, meas.area, meas.centroid,
                                  meas.hessian, meas.normalized,
                                  residual, it)
        rhs = meas.area * meas.centroid_offset
        try:
            chol = np.linalg.cholesky(meas.hessian)
            w = np.linalg.solve(chol.T, np.linalg.solve(chol, rhs))
        except np.linalg.LinAlgError:
            w = meas.centroid_offset / scale
        norm_w = np.linalg.norm(w)
        if norm_w > _MAX_TILT_STEP:
            w = w * (_MAX_TILT_STEP / norm_w)
        n = n + basis @ w
        n = n / np.linalg.norm(n)
        basis = _transport_basis(basis, n)
    raise MaxIterations(
        f"minimizing plane not found in {max_iterations} iterations "
        f"(last residual {float(np.linalg.norm(meas.centroid_offset)):.3e})")


def volume_distance(body: Body, point: np.ndarray,
                    seed_normal: np.ndarray | None = None,
                    tol: float = DEFAULT_SOLVER_TOL,
                    circle_nodes: int = DEFAULT_CIRCLE_NODES,
                    depth_nodes: int = DEFAULT_DEPTH_NODES,
                    max_iterations: int = 50) -> MinimizingPair:
    """Volume distance of an interior point: minimal cap volume over planes."""
    rule = sphere_rule(body.section_dim, circle_nodes)
    pair = minimize_direction(body, point, seed_normal=seed_normal, tol=tol,
                              rule=rule, max_iterations=max_iterations)
    vol = cap_volume(body, pair.frame, circle_nodes, depth_nodes)
    return replace(pair, volume=vol)


def grad_v(body: Body, point: np.ndarray,
           pair: MinimizingPair | None = None,
           tol: float = DEFAULT_SOLVER_TOL,
           rule: SphereRule | None = None) -> np.ndarray:
    """Ambient gradient of the volume distance: section area times normal.

    The normal points into the body, so the gradient increases toward the
    interior.
    """
    if pair is None:
        pair = minimize_direction(body, point, tol=tol, rule=rule)
    return pair.area * pair.frame.normal


@dataclass(frozen=True)
class HessV:
    """Finite-difference Hessian of the volume distance at a point."""

    matrix: np.ndarray      # full ambient Hessian
    restricted: np.ndarray  # restriction to the minimizing plane directions
    pair: MinimizingPair
    step: float


def hess_v(body: Body, point: np.ndarray,
           step_scale: float = DEFAULT_FD_HESS,
           tol: float = DEFAULT_SOLVER_TOL,
           rule: SphereRule | None = None) -> HessV:
    """Central finite differences of ``grad_v`` with warm-started solves."""
    p = np.asarray(point, dtype=float)
    if rule is None:
        rule = sphere_rule(body.section_dim, DEFAULT_CIRCLE_NODES)
    center = minimize_direction(body, p, tol=tol, rule=rule)
    h = step_scale * body.diameter
    dim = body.dim
    cols = np.empty((dim, dim))
    for i in range(dim):
        grads = []
        for sign in (1.0, -1.0):
            shifted = p.copy()
            shifted[i] += sign * h
            try:
                pr = minimize_direction(body, shifted,
                                        seed_normal=center.frame.normal,
                                        tol=tol, rule=rule)
            except (NotInside, NoIntersection, DomainExceeded) as exc:
                raise StepTooLarge(
                    f"finite-difference point left the admissible region: {exc}"
                ) from exc
            grads.append(pr.area * pr.frame.normal)
        cols[:, i] = (grads[0] - grads[1]) / (2.0 * h)
    full = 0.5 * (cols + cols.T)
    e = center.frame.basis
    return HessV(full, e.T @ full @ e, center, h)


@dataclass(frozen=True)
class IdentityCheck:
    """Comparison of the tangential Hessian identity at a minimizing pair."""

    lhs: np.ndarray   # -(1/area) * restricted Hessian of the distance
    rhs: np.ndarray   # inverse of the normalized section Hessian
    rel_err: float


def hessian_identity_check(body: Body, point: np.ndarray,
                           step_scale: float = DEFAULT_FD_HESS,
                           tol: float = DEFAULT_SOLVER_TOL,
                           rule: SphereRule | None = None) -> IdentityCheck:
    """Check -(1/b) D^2 v restricted to the plane equals the inverse normalized Hessian."""
    hv = hess_v(body, point, step_scale=step_scale, tol=tol, rule=rule)
    lhs = -hv.restricted / hv.pair.area
    rhs = np.linalg.inv(hv.pair.normalized)
    rel = float(np.linalg.norm(lhs - rhs) / np.linalg.norm(rhs))
    return IdentityCheck(lhs, rhs, rel)
