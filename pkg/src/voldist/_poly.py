"""Dense multivariate polynomial algebra for jet computations.

Everything here works on coefficient tensors: ``coeffs[i, j, ...]`` is the
coefficient of ``x0^i * x1^j * ...``. Degrees stay tiny (total degree <= 4 in
<= 4 variables), so products, affine substitutions and line restrictions are
carried out exactly by direct convolution; there is no truncation anywhere.
"""

from __future__ import annotations

import math

import numpy as np


def tensor_mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Full convolution of two coefficient tensors (polynomial product)."""
    out = np.zeros([sa + sb - 1 for sa, sb in zip(a.shape, b.shape)])
    for idx in zip(*np.nonzero(a)):
        block = tuple(slice(i, i + s) for i, s in zip(idx, b.shape))
        out[block] += a[idx] * b
    return out


class Poly:
    """Polynomial in ``nvars`` variables, dense coefficient tensor."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs: np.ndarray):
        self.coeffs = np.asarray(coeffs, dtype=float)

    @classmethod
    def zero(cls, nvars: int, degree: int) -> "Poly":
        return cls(np.zeros((degree + 1,) * nvars))

    @property
    def nvars(self) -> int:
        return self.coeffs.ndim

    def copy(self) -> "Poly":
        return Poly(self.coeffs.copy())

    def __add__(self, other: "Poly") -> "Poly":
        shape = [max(sa, sb) for sa, sb in zip(self.coeffs.shape, other.coeffs.shape)]
        out = np.zeros(shape)
        out[tuple(slice(0, s) for s in self.coeffs.shape)] += self.coeffs
        out[tuple(slice(0, s) for s in other.coeffs.shape)] += other.coeffs
        return Poly(out)

    def __sub__(self, other: "Poly") -> "Poly":
        return self + Poly(-other.coeffs)

    def __mul__(self, other) -> "Poly":
        if isinstance(other, Poly):
            return Poly(tensor_mul(self.coeffs, other.coeffs))
        return Poly(self.coeffs * float(other))

    __rmul__ = __mul__

    def __call__(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at ``points`` of shape (..., nvars)."""
        pts = np.asarray(points, dtype=float)
        scalar = pts.ndim == 1
        if scalar:
            pts = pts[None, :]
        powers = []
        for k in range(self.nvars):
            deg = self.coeffs.shape[k] - 1
            table = np.ones(pts.shape[:-1] + (deg + 1,))
            for d in range(1, deg + 1):
                table[..., d] = table[..., d - 1] * pts[..., k]
            powers.append(table)
        vals = np.zeros(pts.shape[:-1])
        for idx in zip(*np.nonzero(self.coeffs)):
            term = np.full(pts.shape[:-1], self.coeffs[idx])
            for k, e in enumerate(idx):
                if e:
                    term = term * powers[k][..., e]
            vals += term
        return vals[0] if scalar else vals

    def gradient(self) -> list["Poly"]:
        grads = []
        for k in range(self.nvars):
            c = self.coeffs
            deg = c.shape[k] - 1
            if deg == 0:
                grads.append(Poly(np.zeros_like(c)))
                continue
            sl = [slice(None)] * c.ndim
            sl[k] = slice(1, None)
            d = c[tuple(sl)].copy()
            shape = [1] * c.ndim
            shape[k] = deg
            d *= np.arange(1, deg + 1).reshape(shape)
            grads.append(Poly(d))
        return grads

    def compose_affine(self, matrix: np.ndarray, shift: np.ndarray) -> "Poly":
        """Return q(y) = p(shift + matrix @ y)."""
        matrix = np.asarray(matrix, dtype=float)
        shift = np.asarray(shift, dtype=float)
        m = matrix.shape[1]
        total = sum(s - 1 for s in self.coeffs.shape)
        # degree-1 factor per old variable, written in the new variables
        factors = []
        for i in range(self.nvars):
            f = np.zeros((2,) * m)
            f[(0,) * m] = shift[i]
            for j in range(m):
                idx = [0] * m
                idx[j] = 1
                f[tuple(idx)] = matrix[i, j]
            factors.append(f)
        one = np.zeros((1,) * m)
        one[(0,) * m] = 1.0
        powers = []
        for i in range(self.nvars):
            deg = self.coeffs.shape[i] - 1
            cache = [one]
            for _ in range(deg):
                cache.append(tensor_mul(cache[-1], factors[i]))
            powers.append(cache)
        out = np.zeros((total + 1,) * m)
        for idx in zip(*np.nonzero(self.coeffs)):
            term = None
            for i, e in enumerate(idx):
                term = powers[i][e] if term is None else tensor_mul(term, powers[i][e])
            block = tuple(slice(0, s) for s in term.shape)
            out[block] += self.coeffs[idx] * term
        return Poly(out)

    def homogeneous(self, degree: int) -> "Poly":
        """Keep only terms of exact total degree ``degree``."""
        out = np.zeros_like(self.coeffs)
        for idx in zip(*np.nonzero(self.coeffs)):
            if sum(idx) == degree:
                out[idx] = self.coeffs[idx]
        return Poly(out)

    def max_total_degree(self) -> int:
        nz = np.nonzero(self.coeffs)
        if len(nz[0]) == 0:
            return 0
        return int(max(sum(idx) for idx in zip(*nz)))


def line_coefficients(coeffs: np.ndarray, origins: np.ndarray,
                      directions: np.ndarray) -> np.ndarray:
    """Coefficients of p(origin + s*direction) in s, batched over rays.

    Parameters
    ----------
    coeffs : dense coefficient tensor of the polynomial (nvars variables).
    origins, directions : arrays of shape (M, nvars).

    Returns
    -------
    (M, total_degree + 1) array, column k the coefficient of s^k.
    """
    origins = np.asarray(origins, dtype=float)
    directions = np.asarray(directions, dtype=float)
    nvars = coeffs.ndim
    total = sum(s - 1 for s in coeffs.shape)
    m = origins.shape[0]
    # binomial expansion per variable: (o + s d)^e
    out = np.zeros((m, total + 1))
    for idx in zip(*np.nonzero(coeffs)):
        term = np.zeros((m, total + 1))
        term[:, 0] = coeffs[idx]
        deg = 0
        for i, e in enumerate(idx):
            if e == 0:
                continue
            o = origins[:, i]
            d = directions[:, i]
            fac = np.zeros((m, e + 1))
            for k in range(e + 1):
                fac[:, k] = math.comb(e, k) * o ** (e - k) * d ** k
            new = np.zeros((m, total + 1))
            for k in range(deg + 1):
                for j in range(e + 1):
                    new[:, k + j] += term[:, k] * fac[:, j]
            term = new
            deg += e
        out += term
    return out


def polyval_batch(coeff_rows: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Evaluate per-row 1-D polynomials: rows of coefficients, one s per row."""
    vals = np.zeros_like(s)
    for k in range(coeff_rows.shape[1] - 1, -1, -1):
        vals = vals * s + coeff_rows[:, k]
    return vals


def polyder_rows(coeff_rows: np.ndarray) -> np.ndarray:
    """Differentiate per-row 1-D polynomial coefficient rows."""
    n = coeff_rows.shape[1]
    if n == 1:
        return np.zeros((coeff_rows.shape[0], 1))
    return coeff_rows[:, 1:] * np.arange(1, n)


def symtensor_from_homogeneous(poly: Poly, degree: int) -> np.ndarray:
    """Symmetric derivative tensor of a homogeneous polynomial.

    For p(x) = sum_a c_a x^a of total degree d, the d-th derivative tensor T
    satisfies T[i1..id] = c_a * prod(a_k!) where a is the multi-index counting
    the occurrences of each variable among i1..id.
    """
    n = poly.nvars
    out = np.zeros((n,) * degree)
    from itertools import product

    for indices in product(range(n), repeat=degree):
        alpha = [0] * n
        for i in indices:
            alpha[i] += 1
        if all(a < s for a, s in zip(alpha, poly.coeffs.shape)):
            c = poly.coeffs[tuple(alpha)]
            if c:
                out[indices] = c * math.prod(math.factorial(a) for a in alpha)
    return out
