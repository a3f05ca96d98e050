"""Hyperbolic geometry of the upper half-plane and the modular surface.

Points live in the upper half-plane with the Poincare metric
``ds^2 = (dx^2 + dy^2)/y^2``; the modular surface is the quotient by
SL(2, Z) acting through Mobius transformations.  This module provides the
distance, the point-pair invariant ``u = sinh^2(rho/2)``, reduction to the
standard fundamental domain, the quotient distance, cusp height, geodesic
polar coordinates, and an exact-in-measure quadrature grid over the
fundamental domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

# Points with smaller imaginary part are treated as numerically degenerate.
MIN_HEIGHT = 1e-12

# Tolerance for fundamental-domain boundary decisions inside reduce().
_BOUNDARY_EPS = 1e-15

_MAX_REDUCE_STEPS = 256


class DegeneratePointError(ValueError):
    """Raised when a point is too close to the real axis to reduce."""


@dataclass(frozen=True)
class Point:
    """A point x + iy of the upper half-plane."""

    x: float
    y: float

    def __post_init__(self):
        if not (self.y > 0.0) or not math.isfinite(self.x) or not math.isfinite(self.y):
            raise ValueError(f"point must have finite coordinates and y > 0, got {self}")

    @property
    def z(self) -> complex:
        return complex(self.x, self.y)

    @classmethod
    def from_complex(cls, z: complex) -> "Point":
        return cls(z.real, z.imag)


@dataclass(frozen=True)
class UnimodularMatrix:
    """An integer matrix (a, b; c, d) with ad - bc = 1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"matrix {self} has determinant != 1")

    def __matmul__(self, other: "UnimodularMatrix") -> "UnimodularMatrix":
        return UnimodularMatrix(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def inverse(self) -> "UnimodularMatrix":
        return UnimodularMatrix(self.d, -self.b, -self.c, self.a)


IDENTITY = UnimodularMatrix(1, 0, 0, 1)
GEN_S = UnimodularMatrix(0, -1, 1, 0)
GEN_T = UnimodularMatrix(1, 1, 0, 1)


@dataclass(frozen=True)
class SurfacePoint:
    """A point reduced to the standard SL(2, Z) fundamental domain.

    Invariants: -1/2 <= x < 1/2 and x^2 + y^2 >= 1, with x <= 0 on the
    unit-circle boundary arc.  ``reducing_matrix`` maps the original input
    point to ``point``.
    """

    point: Point
    reducing_matrix: UnimodularMatrix


def mobius_apply(g: UnimodularMatrix, z: Point) -> Point:
    """Apply the Mobius transformation z -> (az + b)/(cz + d)."""
    den = complex(g.c * z.x + g.d, g.c * z.y)
    num = complex(g.a * z.x + g.b, g.a * z.y)
    w = num / den
    return Point(w.real, w.imag)


def distance(z: Point, w: Point) -> float:
    """Hyperbolic distance rho(z, w) = 2 arsinh(|z - w| / (2 sqrt(Im z Im w)))."""
    dx = z.x - w.x
    dy = z.y - w.y
    return 2.0 * math.asinh(0.5 * math.hypot(dx, dy) / math.sqrt(z.y * w.y))


def point_pair_u(z: Point, w: Point) -> float:
    """Point-pair invariant u(z, w) = |z - w|^2 / (4 Im z Im w) = sinh^2(rho/2)."""
    dx = z.x - w.x
    dy = z.y - w.y
    return (dx * dx + dy * dy) / (4.0 * z.y * w.y)


def reduce(z: Point) -> SurfacePoint:
    """Reduce a point to the standard fundamental domain by Gauss's algorithm.

    Alternates the translation normalising x into [-1/2, 1/2) with the
    inversion z -> -1/z while |z| < 1.  The boundary tie-break sends x > 0
    on the unit circle to -x, so representatives are unique.

    Raises
    ------
    DegeneratePointError
        If y < 1e-12 or the iteration fails to settle (input numerically
        on the real axis).
    """
    x, y = z.x, z.y
    if y < MIN_HEIGHT:
        raise DegeneratePointError(f"point with y = {y} is numerically degenerate")
    a, b, c, d = 1, 0, 0, 1
    for _ in range(_MAX_REDUCE_STEPS):
        n = math.floor(x + 0.5)
        if n != 0:
            x -= n
            a -= n * c
            b -= n * d
        r2 = x * x + y * y
        if r2 < 1.0 - _BOUNDARY_EPS:
            x, y = -x / r2, y / r2
            a, b, c, d = -c, -d, a, b
            if y < MIN_HEIGHT:
                raise DegeneratePointError("point collapsed onto the real axis during reduction")
        else:
            if r2 <= 1.0 + _BOUNDARY_EPS and x > 0.0:
                x, y = -x / r2, y / r2
                a, b, c, d = -c, -d, a, b
                n = math.floor(x + 0.5)
                if n != 0:
                    x -= n
                    a -= n * c
                    b -= n * d
            return SurfacePoint(Point(x, y), UnimodularMatrix(a, b, c, d))
    raise DegeneratePointError(f"reduction of {z} did not terminate")


def _neighbor_tuples(bound: int = 2) -> list[tuple[int, int, int, int]]:
    """All unimodular matrices with entries in [-bound, bound], one per +-pair."""
    mats = set()
    rng = range(-bound, bound + 1)
    for a, b, c, d in product(rng, rng, rng, rng):
        if a * d - b * c != 1:
            continue
        if (a, b, c, d) < (-a, -b, -c, -d):
            a, b, c, d = -a, -b, -c, -d
        mats.add((a, b, c, d))
    return sorted(mats)


NEIGHBOR_MATS = _neighbor_tuples(2)
_NB = np.array(NEIGHBOR_MATS, dtype=float)  # shape (n, 4), columns a, b, c, d


def surface_distance(z: Point, w: Point) -> float:
    """Distance on the modular surface: min over gamma of rho(z, gamma w).

    Both points are reduced first; the minimum is then taken over the
    identity plus all unimodular matrices with entries bounded by 2, which
    suffices for fundamental-domain representatives.
    """
    rz = reduce(z).point
    rw = reduce(w).point
    best = math.inf
    for a, b, c, d in NEIGHBOR_MATS:
        den = complex(c * rw.x + d, c * rw.y)
        num = complex(a * rw.x + b, a * rw.y)
        g = num / den
        dx = rz.x - g.real
        dy = rz.y - g.imag
        s = 0.5 * math.hypot(dx, dy) / math.sqrt(rz.y * g.imag)
        if s < best:
            best = s
    return 2.0 * math.asinh(best)


def height(z: Point) -> float:
    """Cusp height Ht(z) = max over gamma of Im(gamma z); equals Im of reduce(z)."""
    return reduce(z).point.y


def geodesic_polar(u: float, theta: float) -> Point:
    """Point at invariant u from i in direction theta (geodesic polar coordinates)."""
    if u < 0.0:
        raise ValueError("u must be nonnegative")
    s = 2.0 * math.sqrt(u * (u + 1.0))
    den = 1.0 + 2.0 * u + s * math.cos(theta)
    return Point(s * math.sin(theta) / den, 1.0 / den)


# ---------------------------------------------------------------------------
# Vectorised variants used by the quadrature and transport layers.


def reduce_batch(xs: np.ndarray, ys: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised reduction to the fundamental domain.

    Returns new coordinate arrays; the reducing matrices are not tracked.
    """
    x = np.array(xs, dtype=float, copy=True)
    y = np.array(ys, dtype=float, copy=True)
    if np.any(y < MIN_HEIGHT):
        raise DegeneratePointError("batch contains points with y below 1e-12")
    for _ in range(_MAX_REDUCE_STEPS):
        x -= np.floor(x + 0.5)
        r2 = x * x + y * y
        inside = r2 < 1.0 - _BOUNDARY_EPS
        if not np.any(inside):
            break
        x = np.where(inside, -x / r2, x)
        y = np.where(inside, y / r2, y)
    else:
        raise DegeneratePointError("batch reduction did not terminate")
    # boundary tie-breaks, applied once the orbit representative is found
    r2 = x * x + y * y
    arc = (r2 <= 1.0 + _BOUNDARY_EPS) & (x > 0.0)
    x = np.where(arc, -x, x)
    x = np.where(x >= 0.5, x - 1.0, x)
    return x, y


def surface_distance_to_point(xs: np.ndarray, ys: np.ndarray, z0: Point) -> np.ndarray:
    """Vectorised surface distance from reduced points (xs, ys) to z0."""
    rz = reduce(z0).point
    a = _NB[:, 0][:, None]
    b = _NB[:, 1][:, None]
    c = _NB[:, 2][:, None]
    d = _NB[:, 3][:, None]
    den2 = (c * xs[None, :] + d) ** 2 + (c * ys[None, :]) ** 2
    gx = ((a * xs[None, :] + b) * (c * xs[None, :] + d) + a * c * ys[None, :] ** 2) / den2
    gy = ys[None, :] / den2
    s = 0.5 * np.hypot(gx - rz.x, gy - rz.y) / np.sqrt(gy * rz.y)
    return 2.0 * np.arcsinh(s.min(axis=0))


def surface_distance_matrix(
    xs1: np.ndarray, ys1: np.ndarray, xs2: np.ndarray, ys2: np.ndarray
) -> np.ndarray:
    """All pairwise surface distances between two reduced atom sets."""
    m, n = len(xs1), len(xs2)
    best = np.full((m, n), np.inf)
    for a, b, c, d in NEIGHBOR_MATS:
        den2 = (c * xs2 + d) ** 2 + (c * ys2) ** 2
        gx = ((a * xs2 + b) * (c * xs2 + d) + a * c * ys2**2) / den2
        gy = ys2 / den2
        s = 0.5 * np.hypot(xs1[:, None] - gx[None, :], ys1[:, None] - gy[None, :])
        s /= np.sqrt(ys1[:, None] * gy[None, :])
        np.minimum(best, s, out=best)
    return 2.0 * np.arcsinh(best)


def fundamental_domain_grid(
    n_x: int, n_levels: int, y_max: float
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Cell-centred quadrature grid for the measure dmu = y^-2 dx dy.

    The fundamental domain below height ``y_max`` is tiled column by column
    in the coordinates (x, v) with v = 1/y, where dmu = dx dv exactly.  Each
    of the ``n_x`` columns carries its exact mu-mass (the arcsin antiderivative
    of the circular floor), split evenly over ``n_levels`` cells.

    Returns
    -------
    xs, ys, weights : ndarray
        Atom positions and their mu-weights; weights sum to pi/3 - 1/y_max
        up to rounding.
    """
    if y_max < 2.0:
        raise ValueError("y_max must be at least 2")
    edges = np.linspace(-0.5, 0.5, n_x + 1)
    col_mass = (np.arcsin(edges[1:]) - np.arcsin(edges[:-1])) - (edges[1:] - edges[:-1]) / y_max
    x_c = 0.5 * (edges[1:] + edges[:-1])
    v_top = 1.0 / np.sqrt(1.0 - x_c * x_c)
    v_lo = 1.0 / y_max
    k = (np.arange(n_levels) + 0.5) / n_levels
    v = v_lo + k[:, None] * (v_top[None, :] - v_lo)  # (n_levels, n_x)
    xs = np.broadcast_to(x_c[None, :], v.shape).ravel()
    ys = (1.0 / v).ravel()
    weights = np.broadcast_to(col_mass[None, :] / n_levels, v.shape).ravel()
    return xs.copy(), ys, weights
