"""Quadrature rules: unit-sphere section rules and cap-depth rules.

Section integrals run over the unit sphere of directions inside the cutting
plane (a circle for 3-d bodies). Depth integrals carry an inverse square-root
substitution so the ``sqrt(depth)`` behaviour of section areas near the bottom
of a cap is integrated smoothly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NonpositiveDepth, UnsupportedDimension

DEFAULT_CIRCLE_NODES = 256
DEFAULT_DEPTH_NODES = 64


def sphere_measure(section_dim: int) -> float:
    """Surface measure of the unit sphere S^{N-1} in R^N."""
    if section_dim == 2:
        return 2.0 * np.pi
    if section_dim == 3:
        return 4.0 * np.pi
    raise UnsupportedDimension(f"section dimension {section_dim} not supported")


@dataclass(frozen=True)
class SphereRule:
    """Nodes (unit vectors) and weights integrating over S^{N-1}."""

    section_dim: int
    nodes: np.ndarray    # (M, N)
    weights: np.ndarray  # (M,)

    @property
    def total_measure(self) -> float:
        return float(np.sum(self.weights))


def sphere_rule(section_dim: int, node_count: int = DEFAULT_CIRCLE_NODES) -> SphereRule:
    """Quadrature over the unit sphere of in-plane directions.

    For ``section_dim == 2`` this is the uniform periodic trapezoid rule with
    ``node_count`` angles (spectrally accurate for smooth integrands). For
    ``section_dim == 3`` it is a tensor rule: Gauss-Legendre in the polar
    cosine times uniform angles in azimuth.
    """
    if node_count < 8:
        raise ValueError("node_count must be at least 8")
    if section_dim == 2:
        theta = 2.0 * np.pi * np.arange(node_count) / node_count
        nodes = np.column_stack([np.cos(theta), np.sin(theta)])
        weights = np.full(node_count, 2.0 * np.pi / node_count)
        return SphereRule(2, nodes, weights)
    if section_dim == 3:
        n_polar = max(4, node_count // 2)
        u, wu = np.polynomial.legendre.leggauss(n_polar)
        theta = 2.0 * np.pi * np.arange(node_count) / node_count
        wt = 2.0 * np.pi / node_count
        su = np.sqrt(1.0 - u ** 2)
        ct, st = np.cos(theta), np.sin(theta)
        nodes = np.empty((n_polar * node_count, 3))
        weights = np.empty(n_polar * node_count)
        k = 0
        for i in range(n_polar):
            nodes[k:k + node_count, 0] = su[i] * ct
            nodes[k:k + node_count, 1] = su[i] * st
            nodes[k:k + node_count, 2] = u[i]
            weights[k:k + node_count] = wu[i] * wt
            k += node_count
        return SphereRule(3, nodes, weights)
    raise UnsupportedDimension(f"section dimension {section_dim} not supported")


def depth_rule(depth: float, node_count: int = DEFAULT_DEPTH_NODES):
    """Nodes and weights for integrals over cap depth ``[0, depth]``.

    Substituting ``u = sqrt(depth - zeta)`` turns the half-power behaviour of
    section areas near the deepest point into a smooth integrand:
    ``int_0^D g(zeta) dzeta = int_0^sqrt(D) g(D - u^2) 2u du``, evaluated with
    Gauss-Legendre in ``u``.

    Returns
    -------
    (nodes, weights) : depth values in (0, depth) and positive weights.
    """
    if not depth > 0.0:
        raise NonpositiveDepth(f"depth must be positive, got {depth}")
    if node_count < 2:
        raise ValueError("node_count must be at least 2")
    x, w = np.polynomial.legendre.leggauss(node_count)
    root = np.sqrt(depth)
    u = 0.5 * root * (x + 1.0)
    wu = 0.5 * root * w
    nodes = depth - u ** 2
    weights = 2.0 * u * wu
    return nodes, weights
