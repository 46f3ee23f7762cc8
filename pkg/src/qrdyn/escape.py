"""Escape-radius certificates, orbit classification, and grid classification.

A certificate pins a radius R' with the doubling property |f(x)| > 2|x| for
|x| > R'. Once an orbit passes R' it doubles forever, so "first time the orbit
norm exceeds R'" is a sound escape time. Maps with an essential singularity at
infinity get no certificate; for them escape is declared heuristically at a
large norm threshold and all such outcomes are flagged uncertified.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    DegreeNotAboveDilatation,
    DimensionMismatch,
    NotPolynomialType,
    ValidationFailed,
)
from .geometry import Box, as_point
from .maps import MapInstance

SENTINEL = 0xFFFF
MAX_HORIZON = 0xFFFE
DEFAULT_M_BIG = 1e10

# statuses of a classified point
ESCAPING_CERTIFIED = "certified-escaping"
ESCAPING_UNCERTIFIED = "escaping-uncertified"
HORIZON_BOUNDED = "horizon-bounded"
OVERFLOWED = "overflowed"

# validation probes sit strictly outside the certified sphere: the doubling
# property is an open condition and maps like z^2 attain ratio exactly 2 at R'
_VALIDATION_INFLATION = 1.0 + 1e-6


@dataclass(frozen=True)
class EscapeCertificate:
    """Certified escape radius R': |f(x)| > 2|x| whenever |x| > R'.

    alpha and C are the growth-law parameters |f(x)| >= C^{-1} |x|^alpha used
    by the "holder" method and are None for "doubling-search" certificates.
    validation holds (point, |f(point)|/|point|) evidence from the spheres of
    radius (just above) R' and 2 R'.
    """

    alpha: Optional[float]
    C: Optional[float]
    R: float
    r_prime: float
    method: str
    validation: tuple

    def __post_init__(self):
        if self.method not in ("holder", "doubling-search"):
            raise ValueError(f"unknown certificate method {self.method!r}")
        if self.method == "holder" and not (self.alpha is not None and self.alpha > 1.0):
            raise ValueError("holder certificates require alpha > 1")
        if self.r_prime < self.R:
            raise ValueError("certificate requires R' >= R")
        for _, ratio in self.validation:
            if not ratio > 2.0:
                raise ValueError("certificate validation ratio must exceed 2")

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "C": self.C,
            "R": self.R,
            "r_prime": self.r_prime,
            "method": self.method,
            "validation": [
                {"point": [float(v) for v in p], "ratio": float(r)}
                for p, r in self.validation
            ],
        }


@dataclass(frozen=True)
class PointClass:
    """Outcome of classifying a single starting point."""

    status: str
    time: Optional[int]

    @property
    def escaping(self) -> bool:
        return self.status in (ESCAPING_CERTIFIED, ESCAPING_UNCERTIFIED, OVERFLOWED)

    @property
    def certified(self) -> bool:
        return self.status == ESCAPING_CERTIFIED


@dataclass(frozen=True)
class OrbitRecord:
    start: np.ndarray
    points: np.ndarray
    outcome: PointClass


def _unit_directions(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    u = rng.standard_normal((count, dim))
    return u / np.maximum(np.linalg.norm(u, axis=1), 1e-300)[:, None]


def _sphere_min_ratio(f: MapInstance, radius: float, dirs: np.ndarray) -> float:
    pts = radius * dirs
    img = f.eval_batch(pts)
    return float(np.min(np.linalg.norm(img, axis=1) / np.linalg.norm(pts, axis=1)))


def _validate_doubling(
    f: MapInstance, r_prime: float, rng: np.random.Generator, directions: int
) -> Optional[tuple]:
    """Fresh-sample check of |f(x)| > 2|x| on the spheres at R' and 2R'."""
    evidence = []
    for radius in (r_prime * _VALIDATION_INFLATION, 2.0 * r_prime):
        dirs = _unit_directions(rng, directions, f.dim)
        pts = radius * dirs
        ratios = np.linalg.norm(f.eval_batch(pts), axis=1) / np.linalg.norm(pts, axis=1)
        if not np.all(ratios > 2.0):
            return None
        evidence.extend(
            (tuple(float(v) for v in p), float(r)) for p, r in zip(pts, ratios)
        )
    return tuple(evidence)


def estimate_certificate(
    f: MapInstance,
    method: str = "holder",
    *,
    base_radius: float = 1.0,
    spheres: int = 24,
    directions: int = 64,
    rho_min: float = 1.0 / 16.0,
    rho_max: float = 256.0,
    seed: int = 0,
    k_i_fallback_region: Optional[Box] = None,
    k_i_fallback_samples: int = 400,
) -> EscapeCertificate:
    """Estimate and validate an escape-radius certificate.

    holder: alpha = (d / K_I)^{1/(n-1)}; C is the sampled sup of
    |x|^alpha / |f(x)| on spheres with radii geometric in [R, 64R]; then
    R' = max(R, (2C)^{1/(alpha-1)}). Requires alpha > 1, i.e. degree above
    the inner dilatation.

    doubling-search: the smallest sampled radius rho whose whole sampled
    range [rho, 64 rho] already satisfies |f(x)| > 2|x|.

    Both methods are validated on fresh samples; on failure R' inflates by
    1.5x and is revalidated, at most 10 times.
    """
    if not f.metadata.polynomial_type:
        raise NotPolynomialType(
            "certificates need |f(x)| -> infinity as |x| -> infinity"
        )
    rng = np.random.default_rng(seed)
    n = f.dim

    if method == "holder":
        d = f.metadata.degree
        k_i = f.metadata.inner_dilatation
        if k_i is None:
            from .calculus import estimate_dilatation

            region = k_i_fallback_region or Box([-2.0] * n, [2.0] * n)
            k_i = estimate_dilatation(
                f, region, k_i_fallback_samples, seed=seed
            ).K_I_est
        alpha = (d / k_i) ** (1.0 / (n - 1))
        if alpha <= 1.0 + 1e-12:
            raise DegreeNotAboveDilatation(
                f"degree {d} does not exceed inner dilatation {k_i:.6g} (alpha={alpha:.6g})"
            )
        R = float(base_radius)
        radii = R * np.geomspace(1.0, 64.0, spheres)
        c_est = 0.0
        for radius in radii:
            dirs = _unit_directions(rng, directions, n)
            pts = radius * dirs
            norms = np.linalg.norm(pts, axis=1)
            img_norms = np.linalg.norm(f.eval_batch(pts), axis=1)
            with np.errstate(divide="ignore"):
                c_est = max(c_est, float(np.max(norms**alpha / img_norms)))
        if not np.isfinite(c_est) or c_est <= 0.0:
            raise ValidationFailed("growth-constant estimate degenerate (f vanishes on a sampled sphere)")
        r_prime = max(R, (2.0 * c_est) ** (1.0 / (alpha - 1.0)))
        cert_alpha, cert_c = float(alpha), float(c_est)
    elif method == "doubling-search":
        count = max(2, int(np.ceil(np.log2(64.0 * rho_max / rho_min) * 8)) + 1)
        ladder = np.geomspace(rho_min, 64.0 * rho_max, count)
        min_ratio = np.array(
            [_sphere_min_ratio(f, rad, _unit_directions(rng, directions, n)) for rad in ladder]
        )
        r_prime = None
        for i, rho in enumerate(ladder):
            if rho > rho_max:
                break
            window = (ladder >= rho) & (ladder <= 64.0 * rho)
            if np.all(min_ratio[window] > 2.0):
                r_prime = float(rho)
                break
        if r_prime is None:
            raise ValidationFailed("no sampled radius has the doubling property")
        R = r_prime
        cert_alpha, cert_c = None, None
    else:
        raise ValueError(f"unknown certificate method {method!r}")

    for _attempt in range(10):
        evidence = _validate_doubling(f, r_prime, rng, max(directions, 64))
        if evidence is not None:
            return EscapeCertificate(
                alpha=cert_alpha, C=cert_c, R=float(R), r_prime=float(r_prime),
                method=method, validation=evidence,
            )
        r_prime *= 1.5
    raise ValidationFailed("doubling validation failed after 10 radius inflations")


# ---------------------------------------------------------------------------
# orbit classification
# ---------------------------------------------------------------------------

def classify_points(
    f: MapInstance,
    points: np.ndarray,
    certificate: Optional[EscapeCertificate],
    horizon: int,
    *,
    m_big: float = DEFAULT_M_BIG,
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized classification of an (m, n) batch of starting points.

    Returns (times, overflowed): times[i] is the first t < horizon with
    |f^t(x_i)| above the escape threshold (R' when certified, m_big when not),
    or -1 if the orbit stayed at or below it through the horizon. overflowed
    marks rows whose coordinates left the floating-point range at that step.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != f.dim:
        raise DimensionMismatch(f"expected (m, {f.dim}) points, got {pts.shape}")
    thresh = certificate.r_prime if certificate is not None else m_big
    thresh_sq = thresh * thresh

    m = pts.shape[0]
    times = np.full(m, -1, dtype=np.int32)
    overflowed = np.zeros(m, dtype=bool)
    idx = np.arange(m)
    x = pts.copy()
    for t in range(horizon):
        with np.errstate(over="ignore", invalid="ignore"):
            sq = np.einsum("ij,ij->i", x, x)
        bad = ~np.isfinite(sq)
        esc = bad | (sq > thresh_sq)
        if np.any(esc):
            times[idx[esc]] = t
            overflowed[idx[esc]] = bad[esc]
            keep = ~esc
            x = x[keep]
            idx = idx[keep]
            if x.shape[0] == 0:
                break
        if t < horizon - 1:
            with np.errstate(over="ignore", invalid="ignore"):
                x = f.eval_batch(x)
    return times, overflowed


def classify_point(
    f: MapInstance,
    x,
    certificate: Optional[EscapeCertificate],
    horizon: int,
    *,
    m_big: float = DEFAULT_M_BIG,
) -> PointClass:
    """Classify one starting point; see classify_points for the semantics."""
    p = as_point(x, dim=f.dim)
    times, overflowed = classify_points(f, p[None, :], certificate, horizon, m_big=m_big)
    t = int(times[0])
    if t < 0:
        return PointClass(status=HORIZON_BOUNDED, time=None)
    if overflowed[0]:
        return PointClass(status=OVERFLOWED, time=t)
    if certificate is not None:
        return PointClass(status=ESCAPING_CERTIFIED, time=t)
    return PointClass(status=ESCAPING_UNCERTIFIED, time=t)


def orbit_trace(
    f: MapInstance,
    x,
    steps: int,
    certificate: Optional[EscapeCertificate] = None,
    *,
    m_big: float = DEFAULT_M_BIG,
) -> OrbitRecord:
    """Forward orbit x, f(x), ..., f^steps(x) with its classification."""
    if steps > 10**6:
        raise ValueError("orbit length capped at 1e6 steps")
    p = as_point(x, dim=f.dim)
    pts = [p]
    cur = p
    for _ in range(steps):
        with np.errstate(over="ignore", invalid="ignore"):
            cur = f(cur)
        if not np.all(np.isfinite(cur)):
            break  # trace stops at the last finite point
        pts.append(cur)
    # classification stops at the first threshold crossing, so an orbit that
    # certifies before leaving the float range is still certified-escaping
    outcome = classify_point(f, p, certificate, steps + 1, m_big=m_big)
    return OrbitRecord(start=p, points=np.array(pts), outcome=outcome)


# ---------------------------------------------------------------------------
# grid classification
# ---------------------------------------------------------------------------

@dataclass
class EscapeGrid:
    """Per-cell escape times over an axis-aligned lattice.

    cells has shape resolution[::-1] (axis 0 of the array is the *last*
    coordinate axis), so the C-order flattening runs x fastest. Entries are
    escape times < horizon, or SENTINEL (0xFFFF) for cells whose center did
    not pass the threshold within the horizon.
    """

    box: Box
    resolution: tuple
    horizon: int
    cells: np.ndarray
    certificate: Optional[EscapeCertificate]
    m_big: float = DEFAULT_M_BIG

    @property
    def dim(self) -> int:
        return self.box.dim

    @property
    def cell_widths(self) -> np.ndarray:
        return self.box.widths / np.asarray(self.resolution, dtype=float)

    def axis_centers(self, axis: int) -> np.ndarray:
        w = self.cell_widths[axis]
        return self.box.low[axis] + (np.arange(self.resolution[axis]) + 0.5) * w

    def centers(self) -> np.ndarray:
        """All cell centers, (m, n), x fastest."""
        axes = [self.axis_centers(i) for i in range(self.dim)]
        grids = np.meshgrid(*axes[::-1], indexing="ij")
        return np.stack([grids[self.dim - 1 - i] for i in range(self.dim)], axis=-1).reshape(
            -1, self.dim
        )

    def escaping_mask(self) -> np.ndarray:
        return self.cells != SENTINEL

    def flat_to_center(self, flat_index: int) -> np.ndarray:
        coords = np.unravel_index(int(flat_index), self.cells.shape)
        # array index order is reversed relative to coordinate axes
        out = np.empty(self.dim)
        for axis in range(self.dim):
            out[axis] = self.axis_centers(axis)[coords[self.dim - 1 - axis]]
        return out

    def parameters(self) -> dict:
        return {
            "box": self.box.to_dict(),
            "resolution": list(self.resolution),
            "horizon": self.horizon,
            "certified": self.certificate is not None,
            "m_big": self.m_big,
            "escaping_cells": int(np.count_nonzero(self.escaping_mask())),
            "sentinel_cells": int(np.count_nonzero(~self.escaping_mask())),
        }


def classify_grid(
    f: MapInstance,
    box: Box,
    resolution,
    certificate: Optional[EscapeCertificate],
    horizon: int,
    *,
    threads: int = 1,
    m_big: float = DEFAULT_M_BIG,
) -> EscapeGrid:
    """Classify every cell center; deterministic for any thread count.

    Cells are independent, so the grid is partitioned into disjoint index
    ranges and each range is classified by the same elementwise kernel; the
    merge is a plain concatenation. Identical inputs give bitwise-identical
    cell arrays regardless of `threads`.
    """
    if box.dim != f.dim:
        raise DimensionMismatch("box dimension does not match the map")
    res = tuple(int(r) for r in (resolution if np.iterable(resolution) else [resolution] * box.dim))
    if len(res) != box.dim or any(r < 1 for r in res):
        raise ValueError("resolution must give a positive cell count per axis")
    total = int(np.prod(res))
    if total > 2**30:
        raise ValueError("grid exceeds the 2^30 cell cap")
    if not 1 <= horizon <= MAX_HORIZON:
        raise ValueError(f"horizon must be in [1, {MAX_HORIZON}] (16-bit escape times)")

    shell = EscapeGrid(
        box=box, resolution=res, horizon=horizon,
        cells=np.empty(res[::-1], dtype=np.uint16),
        certificate=certificate, m_big=m_big,
    )
    pts = shell.centers()

    def work(chunk: np.ndarray) -> np.ndarray:
        times, _ = classify_points(f, chunk, certificate, horizon, m_big=m_big)
        return times

    threads = max(1, int(threads))
    if threads == 1 or total < 4096:
        times = work(pts)
    else:
        bounds = np.linspace(0, total, threads + 1, dtype=int)
        chunks = [pts[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, chunks))
        times = np.concatenate(parts)

    cells = np.where(times < 0, SENTINEL, times).astype(np.uint16)
    shell.cells = cells.reshape(res[::-1])
    return shell
