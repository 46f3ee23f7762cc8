"""Points of R^n (n = 2, 3), the one-point compactification, and its metric.

The compactified space R^n + {infinity} is treated as the round n-sphere of
diameter 1 via inverse stereographic projection; `chordal_distance` is the
straight-line distance between the projected points, so q(0, infinity) = 1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatch

# Norms beyond this count as the point at infinity; the chordal error made by
# that identification is < 1e-150, far below every tolerance used here.
_HUGE = 1e150


class _Infinity:
    """The distinguished point at infinity."""

    __slots__ = ()

    def __repr__(self) -> str:
        return "INFINITY"


INFINITY = _Infinity()

ExtendedPoint = Union[np.ndarray, Sequence[float], _Infinity]


def as_point(x, dim: int | None = None) -> np.ndarray:
    """Coerce to a finite float vector, optionally checking its dimension."""
    p = np.asarray(x, dtype=float)
    if p.ndim != 1 or p.size not in (2, 3):
        raise DimensionMismatch(f"expected a point of R^2 or R^3, got shape {p.shape}")
    if dim is not None and p.size != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {p.size}")
    return p


def norm(x) -> float:
    return float(np.linalg.norm(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class Box:
    """Axis-aligned box with low_i < high_i componentwise."""

    low: np.ndarray
    high: np.ndarray

    def __init__(self, low, high):
        lo = np.asarray(low, dtype=float)
        hi = np.asarray(high, dtype=float)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise DimensionMismatch("box corners must be vectors of equal length")
        if lo.size not in (2, 3):
            raise DimensionMismatch("only dimensions 2 and 3 are supported")
        if not np.all(lo < hi):
            raise ValueError("box requires low < high componentwise")
        object.__setattr__(self, "low", lo)
        object.__setattr__(self, "high", hi)

    @property
    def dim(self) -> int:
        return self.low.size

    @property
    def widths(self) -> np.ndarray:
        return self.high - self.low

    def contains(self, x) -> bool:
        p = np.asarray(x, dtype=float)
        return bool(np.all(p >= self.low) and np.all(p <= self.high))

    def contains_ball(self, radius: float) -> bool:
        """Whether the closed ball of `radius` about the origin fits inside."""
        return bool(np.all(self.low <= -radius) and np.all(self.high >= radius))

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        u = rng.random((count, self.dim))
        return self.low + u * self.widths

    def to_dict(self) -> dict:
        return {"low": [float(v) for v in self.low], "high": [float(v) for v in self.high]}


@dataclass(frozen=True)
class CylindricalPoint:
    """(r, phi, y) with r >= 0, phi in [0, 2*pi), y the remaining coordinates."""

    r: float
    phi: float
    y: tuple

    def __post_init__(self):
        if self.r < 0:
            raise ValueError("cylindrical radius must be non-negative")


def _is_infinite(x) -> bool:
    if isinstance(x, _Infinity):
        return True
    p = np.asarray(x, dtype=float)
    return not np.all(np.isfinite(p)) or float(np.linalg.norm(p)) > _HUGE


def chordal_distance(a: ExtendedPoint, b: ExtendedPoint) -> float:
    """Distance q(a, b) on the compactified n-sphere, normalized to diameter 1.

    q(a, b) = |a - b| / (sqrt(1 + |a|^2) * sqrt(1 + |b|^2)) for finite points,
    q(a, infinity) = 1 / sqrt(1 + |a|^2).
    """
    a_inf = _is_infinite(a)
    b_inf = _is_infinite(b)
    if a_inf and b_inf:
        return 0.0
    if a_inf or b_inf:
        p = as_point(b if a_inf else a)
        return float(1.0 / np.sqrt(1.0 + p @ p))
    pa = as_point(a)
    pb = as_point(b, dim=pa.size)
    diff = pa - pb
    return float(
        np.sqrt(diff @ diff) / (np.sqrt(1.0 + pa @ pa) * np.sqrt(1.0 + pb @ pb))
    )


def sphere_embedding(points: np.ndarray) -> np.ndarray:
    """Inverse stereographic projection of an (m, n) batch onto the sphere.

    Rows with non-finite or astronomically large coordinates are sent to the
    north pole (the image of infinity). Chordal distances equal Euclidean
    distances between embedded rows, which is what the oscillation checks use.
    """
    pts = np.asarray(points, dtype=float)
    m, n = pts.shape
    out = np.empty((m, n + 1))
    with np.errstate(over="ignore", invalid="ignore"):
        sq = np.einsum("ij,ij->i", pts, pts)
        far = ~np.isfinite(sq) | (sq > _HUGE)
        denom = 1.0 + sq
        out[:, :n] = pts / denom[:, None]
        out[:, n] = sq / denom
    out[far, :n] = 0.0
    out[far, n] = 1.0
    return out


def invert_sphere(x: ExtendedPoint):
    """Inversion A(x) = x / |x|^2 in the unit sphere; A(0) = infinity, A(infinity) = 0."""
    if isinstance(x, _Infinity):
        return np.zeros(2)
    p = as_point(x)
    sq = float(p @ p)
    if sq == 0.0:
        return INFINITY
    return p / sq


def cart_to_cyl(x) -> CylindricalPoint:
    """Cartesian to cylindrical; (x1, x2) is the polar plane, phi = 0 when r = 0."""
    p = as_point(x)
    r = float(np.hypot(p[0], p[1]))
    if r == 0.0:
        phi = 0.0
    else:
        phi = float(np.arctan2(p[1], p[0])) % (2.0 * np.pi)
    return CylindricalPoint(r=r, phi=phi, y=tuple(float(v) for v in p[2:]))


def cyl_to_cart(c: CylindricalPoint) -> np.ndarray:
    return np.array(
        [c.r * np.cos(c.phi), c.r * np.sin(c.phi), *c.y], dtype=float
    )
