"""Equiaffine (Blaschke) normalization of a convex boundary point.

Near a boundary point the surface is the graph z = f(x) over its tangent
plane (graph axis to the convex side). A chain of maps puts the 4-jet into
the normal form

    z = |x|^2/2 + (c/6) r^3 cos(3 theta) + quartic + O(5),   c >= 0

via (a) x -> H^(-1/2) x with H the Hessian of f (makes the quadratic round),
(b) a shear along the axis killing the trace part of the cubic, (c) an
in-plane rotation aligning the harmonic cubic (two dimensions only), and
(d) the parabolic scaling x -> lambda x, z -> lambda^2 z with
lambda^(N+2) = sqrt(det H), which pins the unimodular volume condition
det(e_1, ..., e_N, axis_direction) = 1 for the transported tangent frame.

The chain yields the classical equiaffine data: the Blaschke metric
h = (det H)^(-1/(N+2)) H on the tangent plane, the affine normal (the last
column of the chain, an ambient vector transversal to the surface), and the
conormal (the unique covector vanishing on the tangent plane and pairing to
one with the affine normal). For two-dimensional sections the normalized
cubic/quartic coefficients determine the shape form, the expected first-order
rate of the normalized section Hessian along the affine normal (see
:mod:`voldist.asymptotics`).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._poly import Poly, symtensor_from_homogeneous
from .errors import (NotConvex, NotOnSurface, UnsupportedDimension,
                     VoldistError)
from .geometry import AffineMap, Body, Jet4, graph_jet4, solve_graph_jet

_CONSISTENCY_TOL = 1e-8


@dataclass(frozen=True)
class NormalForm:
    """Adapted frame, normalizing map and equiaffine data at a boundary point.

    ``to_normalized`` maps ambient coordinates to normalized coordinates in
    which the surface passes through the origin in the normal form above.
    ``metric`` is expressed against the columns of ``tangent_basis``;
    ``tangent_map`` sends those tangent coordinates to the normalized ones
    (its columns are h-orthonormal directions).
    """

    base_point: np.ndarray
    tangent_basis: np.ndarray     # (dim, N)
    axis: np.ndarray              # (dim,) graph axis (convex side)
    to_normalized: AffineMap
    metric: np.ndarray            # (N, N)
    affine_normal: np.ndarray     # (dim,)
    conormal: np.ndarray          # (dim,)
    tangent_map: np.ndarray       # (N, N)
    scaling: float                # lambda
    cubic_coeff: float            # c >= 0 (2-d only, else 0)
    quartic_coeffs: np.ndarray | None  # (5,) in normalized coordinates, 2-d only
    jet: Jet4

    @property
    def section_dim(self) -> int:
        return self.tangent_basis.shape[1]


@dataclass(frozen=True)
class ShapeForm:
    """Shape form of the normal form and the induced rate matrix.

    ``rate_matrix`` is the predicted first-order coefficient of the
    normalized section Hessian along the affine normal (normalized frame);
    the shape form is its negative. ``original`` expresses the shape form
    against the adapted tangent basis of the normal form.
    """

    rate_matrix: np.ndarray   # A
    normalized: np.ndarray    # shape form, normalized frame (= -A)
    original: np.ndarray      # shape form pulled back to the tangent basis


def _jet_polynomials(body: Body, point: np.ndarray):
    """Jet of the boundary as homogeneous polynomials plus the frame data."""
    jet = graph_jet4(body, point)
    frame = jet.frame_matrix()
    phi = body.implicit_poly().compose_affine(frame, jet.base_point)
    f2, f3, f4 = solve_graph_jet(phi, body.section_dim, body.diameter)
    return jet, frame, phi, f2, f3, f4


def _laplacian_linear(poly: Poly) -> np.ndarray:
    """Coefficient vector of the (linear) Laplacian of a cubic polynomial."""
    grads = poly.gradient()
    lap = None
    for k, g in enumerate(grads):
        second = g.gradient()[k]
        lap = second if lap is None else lap + second
    n = poly.nvars
    out = np.empty(n)
    for k in range(n):
        idx = [0] * n
        idx[k] = 1
        out[k] = lap.coeffs[tuple(idx)] if all(i < s for i, s in
                                               zip(idx, lap.coeffs.shape)) else 0.0
    return out


def _chain(body: Body, point: np.ndarray, with_rotation: bool):
    """Shared normalization chain; rotation only for 2-d sections."""
    n = body.section_dim
    jet, frame, phi, f2, f3, f4 = _jet_polynomials(body, point)
    hess = symtensor_from_homogeneous(f2, 2)
    evals, evecs = np.linalg.eigh(hess)
    if np.min(evals) <= 0.0:
        raise NotConvex("tangent Hessian is not positive definite")
    hs_inv = evecs @ np.diag(1.0 / np.sqrt(evals)) @ evecs.T
    hs = evecs @ np.diag(np.sqrt(evals)) @ evecs.T
    det_h = float(np.prod(evals))
    lam2 = det_h ** (1.0 / (n + 2.0))
    lam = np.sqrt(lam2)

    f3_round = f3.compose_affine(hs_inv, np.zeros(n))
    shear = -_laplacian_linear(f3_round) / (n + 2.0)

    rot = np.eye(n)
    if with_rotation:
        if n != 2:
            raise UnsupportedDimension(
                "cubic alignment is implemented for 2-d sections only")
        # harmonic part of the cubic: subtract |x|^2 * Laplacian/(2N+4)
        lap_vec = _laplacian_linear(f3_round)
        r2 = Poly.zero(2, 2)
        r2.coeffs[2, 0] = 1.0
        r2.coeffs[0, 2] = 1.0
        lin = Poly.zero(2, 1)
        lin.coeffs[1, 0] = lap_vec[0] / 8.0
        lin.coeffs[0, 1] = lap_vec[1] / 8.0
        harm = f3_round - r2 * lin
        a3 = harm.coeffs[3, 0]
        b3 = harm.coeffs[2, 1] / 3.0
        amp = float(np.hypot(a3, b3))
        if amp > 1e-12 * max(1.0, float(np.max(np.abs(f3_round.coeffs)))):
            theta = np.arctan2(b3, a3) / 3.0
            rot = np.array([[np.cos(theta), -np.sin(theta)],
                            [np.sin(theta), np.cos(theta)]])

    # graph-coordinate chain, z column last
    def block(mat, col=None, corner=1.0):
        out = np.zeros((n + 1, n + 1))
        out[:n, :n] = mat
        if col is not None:
            out[:n, n] = col
        out[n, n] = corner
        return out

    psi = block(hs_inv) @ block(np.eye(n), col=shear) @ block(rot) \
        @ block(lam * np.eye(n), corner=lam2)
    return jet, frame, phi, psi, hess, lam, lam2, det_h


def blaschke_metric(jet: Jet4) -> np.ndarray:
    """Blaschke metric on the tangent plane, against the jet's tangent basis."""
    hess = jet.quadratic
    det_h = float(np.linalg.det(hess))
    if det_h <= 0.0:
        raise NotConvex("tangent Hessian is not positive definite")
    n = hess.shape[0]
    return det_h ** (-1.0 / (n + 2.0)) * hess


def affine_normal(body: Body, point: np.ndarray) -> np.ndarray:
    """Affine normal vector at a boundary point (ambient coordinates)."""
    jet, frame, phi, psi, hess, lam, lam2, det_h = _chain(body, point, False)
    return frame @ psi[:, -1]


def conormal(body: Body, point: np.ndarray) -> np.ndarray:
    """Conormal at a boundary point: vanishes on the tangent plane, pairs to
    one with the affine normal."""
    jet, frame, phi, psi, hess, lam, lam2, det_h = _chain(body, point, False)
    return jet.axis / lam2


def normalize_at(body: Body, point: np.ndarray) -> NormalForm:
    """Full normal form at a boundary point of a 3-d body.

    Returns the adapted frame, the ambient-to-normalized affine map, the
    Blaschke metric, affine normal, conormal, the normalized cubic/quartic
    coefficients and the unimodular scaling.
    """
    if body.section_dim != 2:
        raise UnsupportedDimension(
            "the full normal form (cubic alignment) needs 2-d sections")
    jet, frame, phi, psi, hess, lam, lam2, det_h = _chain(body, point, True)
    n = 2

    phi_norm = phi.compose_affine(psi, np.zeros(n + 1))
    g2, g3, g4 = solve_graph_jet(phi_norm, n, body.diameter)

    round_err = np.max(np.abs(symtensor_from_homogeneous(g2, 2) - np.eye(n)))
    if round_err > _CONSISTENCY_TOL:
        raise VoldistError(
            f"normalization drift: quadratic part off round by {round_err:.2e}")
    cubic = symtensor_from_homogeneous(g3, 3)
    c = float(cubic[0, 0, 0])
    sin_part = max(abs(g3.coeffs[2, 1]), abs(g3.coeffs[0, 3]))
    trace_part = abs(g3.coeffs[1, 2] + 3.0 * g3.coeffs[3, 0])
    if sin_part > _CONSISTENCY_TOL or trace_part > _CONSISTENCY_TOL:
        raise VoldistError("normalization drift: cubic not in pure-cosine form")
    if c < 0.0:
        if c < -_CONSISTENCY_TOL:
            raise VoldistError("normalization drift: negative cubic amplitude")
        c = 0.0
    quartic = symtensor_from_homogeneous(g4, 4)
    quartic_coeffs = np.array([quartic[0, 0, 0, 0], quartic[0, 0, 0, 1],
                               quartic[0, 0, 1, 1], quartic[0, 1, 1, 1],
                               quartic[1, 1, 1, 1]])

    psi_inv = np.linalg.inv(psi)
    to_norm = AffineMap(psi_inv @ frame.T, -psi_inv @ frame.T @ jet.base_point)
    xi = frame @ psi[:, -1]
    nu = jet.axis / lam2
    metric = hess / lam2
    tangent_map = np.linalg.inv(psi[:n, :n])
    return NormalForm(jet.base_point, jet.tangent_basis, jet.axis, to_norm,
                      metric, xi, nu, tangent_map, lam, c, quartic_coeffs, jet)


def shape_form(nf: NormalForm) -> ShapeForm:
    """Shape form and rate matrix from the normalized cubic/quartic data.

    The rate matrix is the closed form from the model-surface expansion of
    the normalized section Hessian: for normal-form coefficients c and
    (a40, a31, a22, a13, a04),

        A = [[c^2/2 - (a40 + a22)/4,  -(a31 + a13)/4],
             [-(a31 + a13)/4,          c^2/2 - (a22 + a04)/4]].

    The shape form is -A in the normalized frame; ``original`` transports it
    back to the adapted tangent basis of the normal form.
    """
    if nf.quartic_coeffs is None or nf.section_dim != 2:
        raise UnsupportedDimension("shape form needs the 2-d normal form")
    c = nf.cubic_coeff
    a40, a31, a22, a13, a04 = nf.quartic_coeffs
    rate = np.array([
        [c * c / 2.0 - (a40 + a22) / 4.0, -(a31 + a13) / 4.0],
        [-(a31 + a13) / 4.0, c * c / 2.0 - (a22 + a04) / 4.0],
    ])
    normalized = -rate
    b = nf.tangent_map
    original = b.T @ normalized @ b
    return ShapeForm(rate, normalized, original)
