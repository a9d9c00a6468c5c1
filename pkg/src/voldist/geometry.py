"""Convex bodies, affine maps, plane frames and boundary jets.

Bodies are smooth, strictly convex regions of R^3 or R^4 given by an implicit
polynomial F of total degree <= 4 with F < 0 inside. Three constructors are
provided: ellipsoids (affine images of the unit ball), convex quartic graphs
over a disc (model surfaces z = |x|^2/2 + cubic + quartic), and affine images
of either. Graph bodies are epigraphs: the region above the graph, bounded
laterally by the parameter domain.

Orientation conventions used throughout: the outward direction at a boundary
point is the implicit gradient; the graph axis of a jet points to the convex
side (the inner direction, opposite the outward gradient).
"""

from __future__ import annotations

import abc
from dataclasses import dataclass, field

import numpy as np

from ._poly import (Poly, line_coefficients, polyder_rows, polyval_batch,
                    symtensor_from_homogeneous)
from .errors import (ConfigInvalid, DomainExceeded, NoIntersection, NotConvex,
                     NotInside, NotOnSurface, NotTransversal, SingularMap,
                     UnboundedCap, UnsupportedDimension)

_RAY_REL_TOL = 1e-13
_FRAME_TOL = 1e-12
_ON_SURFACE_REL = 1e-9


# ---------------------------------------------------------------------------
# affine maps


@dataclass(frozen=True)
class AffineMap:
    """Invertible affine map y = linear @ x + translation."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        tr = np.asarray(self.translation, dtype=float).ravel()
        if lin.shape[0] != lin.shape[1] or lin.shape[0] != tr.size:
            raise SingularMap("linear part must be square and match translation")
        det = np.linalg.det(lin)
        if not np.isfinite(det) or abs(det) < 1e-300:
            raise SingularMap("linear part is singular")
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "translation", tr)

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(np.eye(dim), np.zeros(dim))

    @property
    def dim(self) -> int:
        return self.translation.size

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.linear))

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.linear.T + self.translation

    def apply_vector(self, vectors: np.ndarray) -> np.ndarray:
        return np.asarray(vectors, dtype=float) @ self.linear.T

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.translation)

    def compose(self, other: "AffineMap") -> "AffineMap":
        """Return self after other: x -> self(other(x))."""
        return AffineMap(self.linear @ other.linear,
                         self.linear @ other.translation + self.translation)


# ---------------------------------------------------------------------------
# plane frames


def orthonormal_complement(direction: np.ndarray) -> np.ndarray:
    """Deterministic orthonormal basis of the hyperplane normal to a vector."""
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    d = n.size
    cols = [n] + [np.eye(d)[:, j] for j in range(d) if j != int(np.argmax(np.abs(n)))]
    q, r = np.linalg.qr(np.column_stack(cols))
    q = q * np.sign(np.diag(r))
    return q[:, 1:]


@dataclass(frozen=True)
class PlaneFrame:
    """A cutting plane: base point, unit normal and in-plane basis.

    The normal points away from the cap (into the rest of the body at a
    minimizing pair). ``basis`` has the in-plane orthonormal vectors as
    columns.
    """

    point: np.ndarray
    normal: np.ndarray
    basis: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.point, dtype=float).ravel()
        n = np.asarray(self.normal, dtype=float).ravel()
        b = np.asarray(self.basis, dtype=float)
        if b.shape != (p.size, p.size - 1):
            raise ValueError("basis must be (dim, dim-1)")
        if abs(np.linalg.norm(n) - 1.0) > 1e-10:
            raise ValueError("normal must be a unit vector")
        gram = np.column_stack([b, n])
        if np.max(np.abs(gram.T @ gram - np.eye(p.size))) > _FRAME_TOL * 10:
            raise ValueError("basis must be orthonormal and orthogonal to normal")
        object.__setattr__(self, "point", p)
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "basis", b)

    @property
    def dim(self) -> int:
        return self.point.size

    @property
    def section_dim(self) -> int:
        return self.point.size - 1

    def embed_directions(self, eta: np.ndarray) -> np.ndarray:
        """Map in-plane unit vectors (M, N) to ambient vectors (M, dim)."""
        return np.asarray(eta, dtype=float) @ self.basis.T

    def shifted(self, offset_in_plane: np.ndarray, along_normal: float = 0.0) -> "PlaneFrame":
        p = self.point + self.basis @ np.asarray(offset_in_plane, float) \
            + along_normal * self.normal
        return PlaneFrame(p, self.normal, self.basis)


def make_frame(point: np.ndarray, normal: np.ndarray) -> PlaneFrame:
    """Frame through ``point`` with unit ``normal`` and a deterministic basis."""
    n = np.asarray(normal, dtype=float)
    n = n / np.linalg.norm(n)
    return PlaneFrame(np.asarray(point, dtype=float), n, orthonormal_complement(n))


# ---------------------------------------------------------------------------
# boundary jets


@dataclass(frozen=True)
class Jet4:
    """Fourth-order graph jet of the boundary over its tangent plane.

    The boundary near ``base_point`` is the graph z = f(x) over the tangent
    coordinates x (columns of ``tangent_basis``), with the graph axis
    ``axis`` pointing to the convex side. ``quadratic``, ``cubic`` and
    ``quartic`` are the symmetric derivative tensors of f at 0, so
    f(x) = x'Hx/2 + T3[x,x,x]/6 + T4[x,x,x,x]/24 + O(|x|^5).
    """

    base_point: np.ndarray
    tangent_basis: np.ndarray  # (dim, N) columns
    axis: np.ndarray           # (dim,)
    quadratic: np.ndarray      # (N, N)
    cubic: np.ndarray          # (N, N, N)
    quartic: np.ndarray        # (N, N, N, N)

    @property
    def section_dim(self) -> int:
        return self.quadratic.shape[0]

    def height(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the jet polynomial at tangent coordinates x (..., N)."""
        x = np.asarray(x, dtype=float)
        h = 0.5 * np.einsum("...i,ij,...j->...", x, self.quadratic, x)
        h = h + np.einsum("...i,...j,...k,ijk->...", x, x, x, self.cubic) / 6.0
        h = h + np.einsum("...i,...j,...k,...l,ijkl->...", x, x, x, x, self.quartic) / 24.0
        return h

    def frame_matrix(self) -> np.ndarray:
        return np.column_stack([self.tangent_basis, self.axis])


def solve_graph_jet(phi: Poly, section_dim: int, scale: float):
    """Graph jet pieces of an implicit polynomial in tangent coordinates.

    ``phi(x, z)`` vanishes on the surface, with x the tangent coordinates and
    z along the graph axis; the constant and linear parts in x must vanish and
    the z-derivative at 0 must be nonzero. Returns homogeneous polynomials
    (f2, f3, f4) in x with z = f2 + f3 + f4 + O(|x|^5) on the surface.
    """
    c = phi.coeffs
    n = section_dim
    if c.ndim != n + 1:
        raise ValueError("phi must have section_dim + 1 variables")
    zdeg = c.shape[-1] - 1

    def zslice(k: int) -> Poly:
        if k > zdeg:
            return Poly(np.zeros((1,) * n))
        return Poly(c[..., k])

    p0, p1, p2 = zslice(0), zslice(1), zslice(2)
    c1 = float(p1.coeffs[(0,) * n])
    if abs(c1) < 1e-10 * max(scale, 1.0):
        raise NotTransversal("graph axis is tangent to the surface")
    const = float(p0.coeffs[(0,) * n])
    lin = p0.homogeneous(1)
    if abs(const) > _ON_SURFACE_REL * max(scale, 1.0) ** 2 \
            or np.max(np.abs(lin.coeffs)) > 1e-8 * max(scale, 1.0):
        raise NotOnSurface("base point/frame is not adapted to the surface")

    c20 = float(p2.coeffs[(0,) * n])
    l11 = p1.homogeneous(1)
    q12 = p1.homogeneous(2)
    f2 = (-1.0 / c1) * p0.homogeneous(2)
    f3 = (-1.0 / c1) * (p0.homogeneous(3) + (f2 * l11).homogeneous(3))
    f4_raw = p0.homogeneous(4) + (f3 * l11) + (f2 * q12) + c20 * (f2 * f2)
    f4 = (-1.0 / c1) * f4_raw.homogeneous(4)
    return f2, f3, f4


# ---------------------------------------------------------------------------
# bodies


class Body(abc.ABC):
    """Smooth strictly convex body with a degree <= 4 implicit polynomial."""

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        """Ambient dimension."""

    @property
    def section_dim(self) -> int:
        return self.dim - 1

    @property
    @abc.abstractmethod
    def diameter(self) -> float:
        """Length scale used for relative tolerances."""

    @abc.abstractmethod
    def implicit_values(self, points: np.ndarray) -> np.ndarray:
        """F(points), negative inside."""

    @abc.abstractmethod
    def implicit_gradients(self, points: np.ndarray) -> np.ndarray:
        """Gradient of F (outward direction on the boundary)."""

    @abc.abstractmethod
    def implicit_poly(self) -> Poly:
        """F as a dense polynomial in the ambient coordinates."""

    @abc.abstractmethod
    def contains(self, point: np.ndarray) -> bool:
        """True when the point lies strictly inside."""

    @abc.abstractmethod
    def ray_cast_many(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        """Distances from interior origins to the boundary along unit rays."""

    @abc.abstractmethod
    def support_point(self, direction: np.ndarray) -> np.ndarray:
        """Boundary point maximizing <direction, y>."""

    @abc.abstractmethod
    def to_dict(self) -> dict:
        """JSON-serializable description."""

    def outward_normals(self, points: np.ndarray) -> np.ndarray:
        g = self.implicit_gradients(points)
        return g / np.linalg.norm(g, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Ellipsoid(Body):
    """Image of the closed unit ball under y = center + linear @ u."""

    center: np.ndarray
    linear: np.ndarray
    _inv: np.ndarray = field(init=False, repr=False, compare=False)
    _quad: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).ravel()
        lin = np.atleast_2d(np.asarray(self.linear, dtype=float))
        if c.size not in (3, 4):
            raise UnsupportedDimension("ellipsoid must live in R^3 or R^4")
        if lin.shape != (c.size, c.size):
            raise ConfigInvalid("ellipsoid linear part has the wrong shape")
        det = np.linalg.det(lin)
        if abs(det) < 1e-14:
            raise SingularMap("ellipsoid linear part is singular")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "_inv", np.linalg.inv(lin))
        object.__setattr__(self, "_quad", self._inv.T @ self._inv)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def diameter(self) -> float:
        return 2.0 * float(np.linalg.svd(self.linear, compute_uv=False)[0])

    def _pull(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - self.center) @ self._inv.T

    def implicit_values(self, points: np.ndarray) -> np.ndarray:
        u = self._pull(points)
        return np.sum(u * u, axis=-1) - 1.0

    def implicit_gradients(self, points: np.ndarray) -> np.ndarray:
        diff = np.asarray(points, dtype=float) - self.center
        return 2.0 * diff @ self._quad.T

    def implicit_poly(self) -> Poly:
        d = self.dim
        coeffs = np.zeros((3,) * d)
        coeffs[(0,) * d] = float(self.center @ self._quad @ self.center - 1.0)
        for i in range(d):
            idx = [0] * d
            idx[i] = 1
            coeffs[tuple(idx)] = float(-2.0 * (self._quad @ self.center)[i])
        for i in range(d):
            for j in range(d):
                idx = [0] * d
                idx[i] += 1
                idx[j] += 1
                coeffs[tuple(idx)] += float(self._quad[i, j])
        return Poly(coeffs)

    def contains(self, point: np.ndarray) -> bool:
        return bool(self.implicit_values(point) < 0.0)

    def ray_cast_many(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        o = self._pull(np.atleast_2d(origins))
        d = np.atleast_2d(directions) @ self._inv.T
        if o.shape[0] == 1 and d.shape[0] > 1:
            o = np.broadcast_to(o, d.shape)
        a = np.sum(d * d, axis=-1)
        b = 2.0 * np.sum(o * d, axis=-1)
        c = np.sum(o * o, axis=-1) - 1.0
        if np.any(c >= 0.0):
            raise NotInside("ray origin is not strictly inside the ellipsoid")
        disc = b * b - 4.0 * a * c
        return (-b + np.sqrt(disc)) / (2.0 * a)

    def support_point(self, direction: np.ndarray) -> np.ndarray:
        w = self.linear.T @ np.asarray(direction, dtype=float)
        norm = np.linalg.norm(w)
        if norm < 1e-300:
            raise UnboundedCap("zero support direction")
        return self.center + self.linear @ (w / norm)

    def to_dict(self) -> dict:
        return {"type": "ellipsoid", "center": self.center.tolist(),
                "linear": self.linear.tolist()}


def _quartic_height_poly(c: float, a: np.ndarray) -> Poly:
    """z = |x|^2/2 + (c/6)(x^3 - 3xy^2) + quartic as a 2-variable polynomial."""
    f = np.zeros((5, 5))
    f[2, 0] = 0.5
    f[0, 2] = 0.5
    f[3, 0] = c / 6.0
    f[1, 2] = -c / 2.0
    a40, a31, a22, a13, a04 = a
    f[4, 0] = a40 / 24.0
    f[3, 1] = a31 / 6.0
    f[2, 2] = a22 / 4.0
    f[1, 3] = a13 / 6.0
    f[0, 4] = a04 / 24.0
    return Poly(f)


@dataclass(frozen=True)
class QuarticGraph(Body):
    """Epigraph of a convex quartic model surface over a disc.

    The boundary is z = |x|^2/2 + (c/6)(x^3 - 3 x y^2) + quartic(a) for |x|
    up to ``domain_radius``; the body is the region above it. Construction
    verifies strict convexity of the height function on a polar grid.
    """

    cubic_coeff: float
    quartic_coeffs: np.ndarray
    domain_radius: float
    _height: Poly = field(init=False, repr=False, compare=False)
    _grad: tuple = field(init=False, repr=False, compare=False)
    _hess: tuple = field(init=False, repr=False, compare=False)
    _implicit: Poly = field(init=False, repr=False, compare=False)
    _rim_height: float = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        a = np.asarray(self.quartic_coeffs, dtype=float).ravel()
        if a.size != 5:
            raise ConfigInvalid("quartic_coeffs must have 5 entries")
        r = float(self.domain_radius)
        if not 0.0 < r:
            raise ConfigInvalid("domain_radius must be positive")
        object.__setattr__(self, "cubic_coeff", float(self.cubic_coeff))
        object.__setattr__(self, "quartic_coeffs", a)
        object.__setattr__(self, "domain_radius", r)
        height = _quartic_height_poly(self.cubic_coeff, a)
        gx, gy = height.gradient()
        hxx, hxy = gx.gradient()
        _, hyy = gy.gradient()
        object.__setattr__(self, "_height", height)
        object.__setattr__(self, "_grad", (gx, gy))
        object.__setattr__(self, "_hess", (hxx, hxy, hyy))
        # implicit F(x, y, z) = height(x, y) - z
        coeffs = np.zeros((5, 5, 2))
        coeffs[:, :, 0] = height.coeffs
        coeffs[0, 0, 1] = -1.0
        object.__setattr__(self, "_implicit", Poly(coeffs))
        self._check_convexity()
        rim = np.linspace(0.0, 2.0 * np.pi, 257)[:-1]
        rim_pts = r * np.column_stack([np.cos(rim), np.sin(rim)])
        object.__setattr__(self, "_rim_height", float(np.max(height(rim_pts))))

    def _check_convexity(self):
        radii = np.linspace(self.domain_radius / 64.0, self.domain_radius, 64)
        angles = np.linspace(0.0, 2.0 * np.pi, 65)[:-1]
        rr, tt = np.meshgrid(radii, angles)
        pts = np.column_stack([(rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()])
        pts = np.vstack([pts, [0.0, 0.0]])
        hxx, hxy, hyy = (p(pts) for p in self._hess)
        mean = 0.5 * (hxx + hyy)
        radius = np.sqrt(0.25 * (hxx - hyy) ** 2 + hxy ** 2)
        min_eig = np.min(mean - radius)
        if min_eig <= 1e-9:
            raise NotConvex(
                f"height Hessian not positive definite on the domain grid "
                f"(min eigenvalue {min_eig:.3e})")

    @property
    def dim(self) -> int:
        return 3

    @property
    def diameter(self) -> float:
        return 2.0 * self.domain_radius + self._rim_height

    def height(self, xy: np.ndarray) -> np.ndarray:
        return self._height(xy)

    def height_gradient(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return np.stack([self._grad[0](xy), self._grad[1](xy)], axis=-1)

    def height_hessian(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        hxx, hxy, hyy = (p(xy) for p in self._hess)
        out = np.empty(np.shape(hxx) + (2, 2))
        out[..., 0, 0] = hxx
        out[..., 0, 1] = hxy
        out[..., 1, 0] = hxy
        out[..., 1, 1] = hyy
        return out

    def implicit_values(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return self._height(pts[..., :2]) - pts[..., 2]

    def implicit_gradients(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        g = np.empty_like(pts)
        g[..., 0] = self._grad[0](pts[..., :2])
        g[..., 1] = self._grad[1](pts[..., :2])
        g[..., 2] = -1.0
        return g

    def implicit_poly(self) -> Poly:
        return self._implicit

    def contains(self, point: np.ndarray) -> bool:
        p = np.asarray(point, dtype=float)
        in_disc = np.hypot(p[0], p[1]) < self.domain_radius
        return bool(in_disc and self.implicit_values(p) < 0.0)

    def ray_cast_many(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        o = np.atleast_2d(np.asarray(origins, dtype=float))
        d = np.atleast_2d(np.asarray(directions, dtype=float))
        if o.shape[0] == 1 and d.shape[0] > 1:
            o = np.broadcast_to(o, d.shape).copy()
        m = d.shape[0]
        rad2 = o[:, 0] ** 2 + o[:, 1] ** 2
        r2 = self.domain_radius ** 2
        g0 = self.implicit_values(o)
        if np.any(g0 >= 0.0) or np.any(rad2 >= r2):
            raise NotInside("ray origin is not strictly inside the graph body")

        coeffs = line_coefficients(self._implicit.coeffs, o, d)
        # the restriction g(s) = height(x(s)) - z(s) is convex with g(0) < 0;
        # find a cap with g >= 0, then run Newton from the right (monotone)
        a = d[:, 0] ** 2 + d[:, 1] ** 2
        b = 2.0 * (o[:, 0] * d[:, 0] + o[:, 1] * d[:, 1])
        c = rad2 - r2
        planar = a > 1e-28
        s_cap = np.empty(m)
        if np.any(planar):
            disc = np.where(planar, b * b - 4.0 * a * c, 1.0)
            s_exit = ((-b + np.sqrt(disc)) / np.where(planar, 2.0 * a, 1.0))
            if np.any(polyval_batch(coeffs, s_exit)[planar] < 0.0):
                raise NoIntersection(
                    "ray exits the parameter domain before meeting the graph")
            s_cap[planar] = s_exit[planar]
        if np.any(~planar):
            dz = d[~planar, 2]
            if np.any(dz >= -1e-14):
                raise NoIntersection("vertical/degenerate ray never meets the graph")
            s_cap[~planar] = (-g0[~planar] / dz) * (1.0 + 1e-7)

        s_hi = np.minimum(s_cap, 1e-3 * self.domain_radius)
        for _ in range(80):
            low = polyval_batch(coeffs, s_hi) < 0.0
            if not np.any(low):
                break
            s_hi = np.where(low, np.minimum(2.0 * s_hi, s_cap), s_hi)

        dcoeffs = polyder_rows(coeffs)
        s = s_hi
        tol = _RAY_REL_TOL * np.maximum(s_hi, 1e-6 * self.domain_radius)
        for _ in range(80):
            g = polyval_batch(coeffs, s)
            gp = polyval_batch(dcoeffs, s)
            step = g / np.where(np.abs(gp) > 1e-300, gp, 1.0)
            step = np.clip(step, 0.0, s)  # iterates stay in [root, s_hi]
            s = s - step
            if np.all(step <= tol):
                break
        for _ in range(2):
            g = polyval_batch(coeffs, s)
            gp = polyval_batch(dcoeffs, s)
            s = s - g / np.where(np.abs(gp) > 1e-300, gp, 1.0)
        return s

    def support_point(self, direction: np.ndarray) -> np.ndarray:
        w = np.asarray(direction, dtype=float)
        if w[2] >= -1e-12 * np.linalg.norm(w):
            raise UnboundedCap("support direction does not point below the graph")
        target = -w[:2] / w[2]
        x = target.copy()
        if np.linalg.norm(x) > self.domain_radius:
            x = x * (0.9 * self.domain_radius / np.linalg.norm(x))
        for _ in range(60):
            g = self.height_gradient(x)
            h = self.height_hessian(x)
            step = np.linalg.solve(h, target - g)
            x_new = x + step
            if np.linalg.norm(x_new) > self.domain_radius:
                raise DomainExceeded("support point lies outside the parameter domain")
            x = x_new
            if np.linalg.norm(step) <= 1e-14 * max(1.0, self.domain_radius):
                break
        else:
            raise DomainExceeded("support solve did not converge")
        return np.array([x[0], x[1], float(self.height(x))])

    def to_dict(self) -> dict:
        return {"type": "quartic_graph", "c": self.cubic_coeff,
                "a": self.quartic_coeffs.tolist(),
                "domain_radius": self.domain_radius}


@dataclass(frozen=True)
class AffineImage(Body):
    """Affine image of a base body: y = map(x) for x in base."""

    base: Body
    map: AffineMap
    _inv: AffineMap = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.map.dim != self.base.dim:
            raise ConfigInvalid("affine map dimension does not match the base body")
        object.__setattr__(self, "_inv", self.map.inverse())

    @property
    def dim(self) -> int:
        return self.base.dim

    @property
    def diameter(self) -> float:
        s = float(np.linalg.svd(self.map.linear, compute_uv=False)[0])
        return s * self.base.diameter

    def implicit_values(self, points: np.ndarray) -> np.ndarray:
        return self.base.implicit_values(self._inv(points))

    def implicit_gradients(self, points: np.ndarray) -> np.ndarray:
        g = self.base.implicit_gradients(self._inv(points))
        return g @ self._inv.linear

    def implicit_poly(self) -> Poly:
        return self.base.implicit_poly().compose_affine(self._inv.linear,
                                                        self._inv.translation)

    def contains(self, point: np.ndarray) -> bool:
        return self.base.contains(self._inv(point))

    def ray_cast_many(self, origins: np.ndarray, directions: np.ndarray) -> np.ndarray:
        o = self._inv(np.atleast_2d(origins))
        d = self._inv.apply_vector(np.atleast_2d(directions))
        norms = np.linalg.norm(d, axis=-1)
        s_base = self.base.ray_cast_many(
            np.broadcast_to(o, d.shape) if o.shape[0] == 1 else o,
            d / norms[:, None])
        return s_base / norms

    def support_point(self, direction: np.ndarray) -> np.ndarray:
        w = self.map.linear.T @ np.asarray(direction, dtype=float)
        return self.map(self.base.support_point(w))

    def to_dict(self) -> dict:
        return {"type": "affine_image", "base": self.base.to_dict(),
                "map": {"linear": self.map.linear.tolist(),
                        "translation": self.map.translation.tolist()}}


# ---------------------------------------------------------------------------
# public operations


def ray_cast(body: Body, origin: np.ndarray, direction: np.ndarray) -> float:
    """Distance from an interior point to the boundary along a unit ray."""
    d = np.asarray(direction, dtype=float)
    d = d / np.linalg.norm(d)
    s = body.ray_cast_many(np.asarray(origin, dtype=float)[None, :], d[None, :])
    return float(s[0])


def surface_normal(body: Body, point: np.ndarray) -> np.ndarray:
    """Outward unit normal at a boundary point."""
    p = np.asarray(point, dtype=float)
    val = float(body.implicit_values(p))
    if abs(val) > _ON_SURFACE_REL * max(1.0, body.diameter ** 2):
        raise NotOnSurface(f"point is off the boundary (F = {val:.3e})")
    g = body.implicit_gradients(p)
    return g / np.linalg.norm(g)


def apply_affine(body: Body, amap: AffineMap) -> Body:
    """Affine image of a body; composes maps instead of nesting wrappers."""
    if isinstance(body, Ellipsoid):
        return Ellipsoid(amap(body.center), amap.linear @ body.linear)
    if isinstance(body, AffineImage):
        return AffineImage(body.base, amap.compose(body.map))
    return AffineImage(body, amap)


def graph_jet4(body: Body, point: np.ndarray) -> Jet4:
    """Fourth-order jet of the boundary over its tangent plane at a point.

    The graph axis points to the convex side (opposite the outward normal);
    the tangent basis is deterministic and right-handed together with the
    axis.
    """
    q = np.asarray(point, dtype=float)
    val = float(body.implicit_values(q))
    if abs(val) > _ON_SURFACE_REL * max(1.0, body.diameter ** 2):
        raise NotOnSurface(f"point is off the boundary (F = {val:.3e})")
    outward = body.outward_normals(q[None, :])[0]
    axis = -outward
    basis = orthonormal_complement(axis)
    frame = np.column_stack([basis, axis])
    if np.linalg.det(frame) < 0.0:
        basis = basis.copy()
        basis[:, 0] = -basis[:, 0]
        frame = np.column_stack([basis, axis])
    phi = body.implicit_poly().compose_affine(frame, q)
    f2, f3, f4 = solve_graph_jet(phi, body.section_dim, body.diameter)
    return Jet4(q, basis, axis,
                symtensor_from_homogeneous(f2, 2),
                symtensor_from_homogeneous(f3, 3),
                symtensor_from_homogeneous(f4, 4))


# ---------------------------------------------------------------------------
# serialization


def body_from_dict(data: dict) -> Body:
    """Build a body from its JSON description."""
    try:
        kind = data["type"]
        if kind == "ellipsoid":
            return Ellipsoid(np.asarray(data["center"], dtype=float),
                             np.asarray(data["linear"], dtype=float))
        if kind == "quartic_graph":
            return QuarticGraph(float(data["c"]),
                                np.asarray(data["a"], dtype=float),
                                float(data["domain_radius"]))
        if kind == "affine_image":
            base = body_from_dict(data["base"])
            m = data["map"]
            linear = np.asarray(m["linear"], dtype=float)
            shift = m.get("translation")
            shift = np.zeros(len(linear)) if shift is None \
                else np.asarray(shift, dtype=float)
            return AffineImage(base, AffineMap(linear, shift))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"malformed body description: {exc}") from exc
    raise ConfigInvalid(f"unknown body type {data.get('type')!r}")
