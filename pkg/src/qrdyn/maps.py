"""Concrete quasiregular maps: evaluation rules, metadata, and exact oracles.

Every map evaluates on batches: an (m, n) array of row points goes in, an
(m, n) array comes out. Single points are accepted and returned as (n,) rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegreeOverflow, DimensionMismatch, MissingOracle
from .geometry import as_point

_MAX_DEGREE = 2**63 - 1
_PREIMAGE_DEDUP_TOL = 1e-9


@dataclass(frozen=True)
class MapMetadata:
    dimension: int
    degree: Optional[int]
    inner_dilatation: Optional[float]
    polynomial_type: bool
    description: str

    def __post_init__(self):
        if self.dimension not in (2, 3):
            raise DimensionMismatch("only dimensions 2 and 3 are supported")
        if self.polynomial_type and self.degree is None:
            raise ValueError("polynomial-type maps must carry a finite degree")
        if self.inner_dilatation is not None and self.inner_dilatation < 1.0:
            raise ValueError("inner dilatation must be >= 1")

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "degree": self.degree,
            "inner_dilatation": self.inner_dilatation,
            "polynomial_type": self.polynomial_type,
            "description": self.description,
        }


@dataclass(frozen=True)
class MapInstance:
    """An evaluatable map of R^n with metadata and optional exact oracles."""

    metadata: MapMetadata
    eval_batch: Callable[[np.ndarray], np.ndarray]
    preimage_rule: Optional[Callable[[np.ndarray], np.ndarray]] = None
    jacobian_rule: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def dim(self) -> int:
        return self.metadata.dimension

    def __call__(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        if pts.ndim == 1:
            return self.eval_batch(pts[None, :])[0]
        if pts.ndim != 2 or pts.shape[1] != self.dim:
            raise DimensionMismatch(
                f"expected points of R^{self.dim}, got shape {pts.shape}"
            )
        return self.eval_batch(pts)


def evaluate(f: MapInstance, x) -> np.ndarray:
    """Evaluate f at a single point."""
    return f(as_point(x, dim=f.dim))


def _dedup_rows(rows: np.ndarray, tol: float) -> np.ndarray:
    kept: list[np.ndarray] = []
    for row in rows:
        if not any(np.linalg.norm(row - k) <= tol for k in kept):
            kept.append(row)
    return np.array(kept) if kept else np.empty((0, rows.shape[1]))


def preimages_exact(f: MapInstance, y) -> np.ndarray:
    """All solutions of f(x) = y from the exact rule, deduplicated at 1e-9."""
    if f.preimage_rule is None:
        raise MissingOracle(f"map has no exact preimage rule: {f.metadata.description}")
    target = as_point(y, dim=f.dim)
    pre = np.asarray(f.preimage_rule(target), dtype=float)
    if pre.size == 0:
        return pre.reshape(0, f.dim)
    return _dedup_rows(pre.reshape(-1, f.dim), _PREIMAGE_DEDUP_TOL)


# ---------------------------------------------------------------------------
# winding maps (r, phi, y) -> (r, k*phi, y)
# ---------------------------------------------------------------------------

def make_winding(n: int, k: int) -> MapInstance:
    """Degree-k winding of the polar plane; norm-preserving, K_I = k.

    The branch set is {r = 0}. k = 1 would be injective and is rejected.
    """
    if n not in (2, 3):
        raise DimensionMismatch("winding map needs n in {2, 3}")
    if k < 2:
        raise ValueError("winding parameter k must be >= 2 (k = 1 is injective)")

    def ev(pts: np.ndarray) -> np.ndarray:
        r = np.hypot(pts[:, 0], pts[:, 1])
        phi = np.arctan2(pts[:, 1], pts[:, 0])
        out = np.empty_like(pts)
        out[:, 0] = r * np.cos(k * phi)
        out[:, 1] = r * np.sin(k * phi)
        if pts.shape[1] == 3:
            out[:, 2] = pts[:, 2]
        return out

    def pre(y: np.ndarray) -> np.ndarray:
        rho = float(np.hypot(y[0], y[1]))
        if rho == 0.0:
            p = np.zeros((1, n))
            p[0, 2:] = y[2:]
            return p
        psi = float(np.arctan2(y[1], y[0]))
        angles = (psi + 2.0 * np.pi * np.arange(k)) / k
        pts = np.zeros((k, n))
        pts[:, 0] = rho * np.cos(angles)
        pts[:, 1] = rho * np.sin(angles)
        pts[:, 2:] = y[2:]
        return pts

    meta = MapMetadata(
        dimension=n,
        degree=k,
        inner_dilatation=float(k),
        polynomial_type=True,
        description=f"winding map, k={k}, n={n}",
    )
    return MapInstance(metadata=meta, eval_batch=ev, preimage_rule=pre)


# ---------------------------------------------------------------------------
# planar complex polynomials (1-quasiregular ground truth)
# ---------------------------------------------------------------------------

def make_complex_poly(coeffs) -> MapInstance:
    """Complex polynomial as a map of R^2; coeffs highest-degree first.

    Each coefficient may be a real number, a complex number, or an (re, im)
    pair. Exact preimages come from polynomial root finding.
    """
    cl = []
    for c in coeffs:
        if isinstance(c, (tuple, list)):
            re, im = c
            cl.append(complex(re, im))
        else:
            cl.append(complex(c))
    ca = np.asarray(cl, dtype=complex)
    if ca.size < 3:
        raise ValueError("polynomial degree must be >= 2")
    if ca[0] == 0:
        raise ValueError("leading coefficient must be nonzero")
    deg = ca.size - 1

    def ev(pts: np.ndarray) -> np.ndarray:
        z = pts[:, 0] + 1j * pts[:, 1]
        w = np.polyval(ca, z)
        return np.column_stack([w.real, w.imag])

    def pre(y: np.ndarray) -> np.ndarray:
        shifted = ca.copy()
        shifted[-1] -= complex(y[0], y[1])
        roots = np.roots(shifted)
        return np.column_stack([roots.real, roots.imag])

    dca = ca[:-1] * np.arange(deg, 0, -1)

    def jac(pts: np.ndarray) -> np.ndarray:
        z = pts[:, 0] + 1j * pts[:, 1]
        d = np.polyval(dca, z)
        out = np.empty((pts.shape[0], 2, 2))
        out[:, 0, 0] = d.real
        out[:, 0, 1] = -d.imag
        out[:, 1, 0] = d.imag
        out[:, 1, 1] = d.real
        return out

    meta = MapMetadata(
        dimension=2,
        degree=deg,
        inner_dilatation=1.0,
        polynomial_type=True,
        description=f"complex polynomial, degree {deg}",
    )
    return MapInstance(metadata=meta, eval_batch=ev, preimage_rule=pre, jacobian_rule=jac)


def make_zsquared() -> MapInstance:
    return make_complex_poly([1.0, 0.0, 0.0])


# ---------------------------------------------------------------------------
# quasiconformally conjugated quadratic (planar uqr example)
# ---------------------------------------------------------------------------

def make_conjugated_quadratic(stretch: float) -> MapInstance:
    """Squaring map conjugated by the stretch diag(lambda, 1), lambda > 1.

    Closed form f(x, y) = ((lambda^2 x^2 - y^2)/lambda, 2 lambda x y). This is
    uniformly quasiregular; its inner dilatation is left unset and estimated
    numerically where needed.
    """
    lam = float(stretch)
    if not lam > 1.0:
        raise ValueError("stretch must be > 1")

    def ev(pts: np.ndarray) -> np.ndarray:
        x, y = pts[:, 0], pts[:, 1]
        return np.column_stack([(lam * lam * x * x - y * y) / lam, 2.0 * lam * x * y])

    meta = MapMetadata(
        dimension=2,
        degree=2,
        inner_dilatation=None,
        polynomial_type=True,
        description=f"uqr conjugated quadratic, stretch={lam}",
    )
    return MapInstance(metadata=meta, eval_batch=ev)


# ---------------------------------------------------------------------------
# Zorich map: quasiregular exponential analogue in R^3
# ---------------------------------------------------------------------------

def _fold(t: np.ndarray) -> np.ndarray:
    # tent wave of period 4 through (0,0), (1,1), (2,0), (3,-1)
    return 1.0 - np.abs(np.mod(t + 1.0, 4.0) - 2.0)


def _fold_parity(t: np.ndarray) -> np.ndarray:
    return np.mod(np.floor((t + 1.0) * 0.5), 2.0)


def make_zorich() -> MapInstance:
    """Exponential-like map of R^3 with |Z(x)| = e^{x3} exactly.

    The first two coordinates select a direction on the unit sphere through a
    folded square-pyramid parametrization; the third coordinate sets the norm.
    Not of polynomial type: there is an essential singularity at infinity.
    """

    def ev(pts: np.ndarray) -> np.ndarray:
        u = _fold(pts[:, 0])
        v = _fold(pts[:, 1])
        w = 1.0 - np.maximum(np.abs(u), np.abs(v))
        flip = np.mod(_fold_parity(pts[:, 0]) + _fold_parity(pts[:, 1]), 2.0)
        w = np.where(flip == 1.0, -w, w)
        scale = np.exp(pts[:, 2]) / np.sqrt(u * u + v * v + w * w)
        return np.column_stack([u * scale, v * scale, w * scale])

    meta = MapMetadata(
        dimension=3,
        degree=None,
        inner_dilatation=None,
        polynomial_type=False,
        description="Zorich exponential analogue in R^3",
    )
    return MapInstance(metadata=meta, eval_batch=ev)


# ---------------------------------------------------------------------------
# iteration
# ---------------------------------------------------------------------------

def make_iterate(f: MapInstance, k: int) -> MapInstance:
    """The k-fold composition f^k; degree multiplies to d^k."""
    if k < 1:
        raise ValueError("iteration count must be >= 1")
    if k == 1:
        return f

    def ev(pts: np.ndarray) -> np.ndarray:
        out = pts
        for _ in range(k):
            out = f.eval_batch(out)
        return out

    meta = f.metadata
    degree = None
    if meta.degree is not None:
        degree = meta.degree**k
        if degree > _MAX_DEGREE:
            raise DegreeOverflow(f"degree {meta.degree}^{k} exceeds representable range")
    ki = None
    if meta.inner_dilatation is not None:
        # submultiplicative bound; exact for winding maps and 1-qr maps
        ki = meta.inner_dilatation**k
    meta_k = MapMetadata(
        dimension=meta.dimension,
        degree=degree,
        inner_dilatation=ki,
        polynomial_type=meta.polynomial_type,
        description=f"iterate^{k} of ({meta.description})",
    )
    return MapInstance(metadata=meta_k, eval_batch=ev)


def build_named_map(name: str, *, dim: int | None = None, k: int | None = None,
                    lam: float | None = None, coeffs=None) -> MapInstance:
    """Construct one of the bundled maps from its configuration name."""
    if name == "winding":
        if k is None:
            raise ValueError("winding map requires parameter k")
        return make_winding(dim if dim is not None else 3, k)
    if name == "zsquared":
        return make_zsquared()
    if name == "complex_poly":
        if not coeffs:
            raise ValueError("complex_poly requires parameter coeffs")
        return make_complex_poly(coeffs)
    if name == "conjugated_quadratic":
        return make_conjugated_quadratic(lam if lam is not None else 2.0)
    if name == "zorich":
        return make_zorich()
    raise ValueError(f"unknown map name: {name!r}")


MAP_NAMES = ("winding", "zsquared", "complex_poly", "conjugated_quadratic", "zorich")
