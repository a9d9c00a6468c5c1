"""Plane sections of a convex body: profiles and integral measures.

A section is the slice of the body by the plane of a :class:`PlaneFrame`.
Its polar profile (boundary radius and radial growth rate per direction
node) feeds the area, centroid and direction-Hessian integrals that drive
the volume-distance solver:

* area            ``b  = sum w r^N / N``
* centroid offset ``(1/b) sum w r^(N+1)/(N+1) eta``  (in-plane coordinates)
* Hessian         ``sum w r^(N+1) r_z eta eta^T``

where ``r_z`` is the growth rate of the boundary radius when the plane moves
along the frame normal. The normalized form is the Hessian divided by the
area.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (DegenerateSection, NoIntersection, NotInside,
                     NotTransversal)
from .geometry import Body, PlaneFrame
from .quadrature import DEFAULT_CIRCLE_NODES, SphereRule, sphere_rule

_TRANSVERSAL_MIN = 1e-8


@dataclass(frozen=True)
class SectionProfile:
    """Polar profile of one plane section.

    ``radii[j]`` is the distance from the frame point to the section boundary
    along the in-plane direction ``rule.nodes[j]``; ``slopes[j]`` is the rate
    of change of that radius as the plane moves along ``+normal``.
    """

    frame: PlaneFrame
    rule: SphereRule
    radii: np.ndarray
    slopes: np.ndarray

    @property
    def hit_points(self) -> np.ndarray:
        dirs = self.frame.embed_directions(self.rule.nodes)
        return self.frame.point + self.radii[:, None] * dirs


@dataclass(frozen=True)
class SectionMeasures:
    """Integral measures of one section."""

    frame: PlaneFrame
    area: float
    centroid_offset: np.ndarray   # in-plane coordinates of centroid - point
    centroid: np.ndarray          # ambient centroid
    hessian: np.ndarray           # direction Hessian of the cap volume
    normalized: np.ndarray        # hessian / area
    positive_definite: bool


def section_profile(body: Body, frame: PlaneFrame,
                    rule: SphereRule | None = None) -> SectionProfile:
    """Cast the polar profile of the section through ``frame``.

    The frame point must lie strictly inside the body; every boundary hit
    must be transversal to the plane directions.
    """
    if rule is None:
        rule = sphere_rule(frame.section_dim, DEFAULT_CIRCLE_NODES)
    if rule.section_dim != frame.section_dim:
        raise ValueError("rule dimension does not match the frame")
    if not body.contains(frame.point):
        raise NotInside("frame point is not strictly inside the body")
    dirs = frame.embed_directions(rule.nodes)
    radii = body.ray_cast_many(frame.point[None, :], dirs)
    hits = frame.point + radii[:, None] * dirs
    normals = body.outward_normals(hits)
    along = np.einsum("mk,mk->m", normals, dirs)
    if np.min(np.abs(along)) < _TRANSVERSAL_MIN:
        raise NotTransversal(
            "section ray meets the boundary almost tangentially")
    slopes = -(normals @ frame.normal) / along
    return SectionProfile(frame, rule, radii, slopes)


def section_measures(profile: SectionProfile) -> SectionMeasures:
    """Area, centroid and direction-Hessian of a profiled section."""
    n = profile.rule.section_dim
    w = profile.rule.weights
    r = profile.radii
    eta = profile.rule.nodes
    if np.min(r) <= 1e-13 * max(1.0, np.max(r)):
        raise DegenerateSection("section radius vanishes at a node")
    area = float(np.sum(w * r ** n) / n)
    if area <= 0.0:
        raise DegenerateSection("section area is not positive")
    moment = (w * r ** (n + 1) / (n + 1.0))[:, None] * eta
    offset = np.sum(moment, axis=0) / area
    centroid = profile.frame.point + profile.frame.basis @ offset
    core = w * r ** (n + 1) * profile.slopes
    hessian = np.einsum("m,mi,mj->ij", core, eta, eta)
    normalized = hessian / area
    try:
        np.linalg.cholesky(normalized)
        pd = True
    except np.linalg.LinAlgError:
        pd = False
    return SectionMeasures(profile.frame, area, offset, centroid,
                           hessian, normalized, pd)
