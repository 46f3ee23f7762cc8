"""Numeric differentiation, dilatation quotients, and degree/index estimation.

Pointwise dilatation quotients are K_O = sigma_1^n / det and
K_I = det / sigma_n^n, where sigma_1 >= ... >= sigma_n are the singular values
of the (numeric) Jacobian. Sampled suprema are lower bounds of the essential
sup; points suspected to sit on the branch set are excluded, not interpolated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.stats import qmc

from .errors import (
    AllSamplesRejected,
    BranchPointSuspected,
    DimensionMismatch,
    NotPolynomialType,
    RadiusTooLarge,
    SearchBoxTooSmall,
)
from .geometry import Box, as_point
from .maps import MapInstance, make_iterate, preimages_exact

_DET_FLOOR_FACTOR = 1e-12
_DEFAULT_FD_STEP = 1e-5


@dataclass(frozen=True)
class DilatationEstimate:
    K_O_est: float
    K_I_est: float
    samples_used: int
    argmax_point: np.ndarray
    rejected_near_branch: int

    def to_dict(self) -> dict:
        return {
            "K_O_est": self.K_O_est,
            "K_I_est": self.K_I_est,
            "samples_used": self.samples_used,
            "argmax_point": [float(v) for v in self.argmax_point],
            "rejected_near_branch": self.rejected_near_branch,
        }


@dataclass(frozen=True)
class DegreeEstimate:
    count: int
    method: str  # "exact-oracle" | "subdivision"
    target_points: tuple

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "method": self.method,
            "target_points": [[float(v) for v in t] for t in self.target_points],
        }


def _fd_step(x: np.ndarray) -> float:
    return _DEFAULT_FD_STEP * max(1.0, float(np.linalg.norm(x)))


def numeric_jacobian(f: MapInstance, x, h: float | None = None) -> np.ndarray:
    """Central-difference Jacobian at x; column i is the partial in direction i."""
    p = as_point(x, dim=f.dim)
    step = _fd_step(p) if h is None else float(h)
    n = p.size
    probes = np.repeat(p[None, :], 2 * n, axis=0)
    for i in range(n):
        probes[2 * i, i] += step
        probes[2 * i + 1, i] -= step
    vals = f.eval_batch(probes)
    jac = np.empty((n, n))
    for i in range(n):
        jac[:, i] = (vals[2 * i] - vals[2 * i + 1]) / (2.0 * step)
    return jac


def _batched_jacobians(f: MapInstance, pts: np.ndarray) -> np.ndarray:
    """Central differences for a whole (m, n) batch at once; returns (m, n, n)."""
    m, n = pts.shape
    steps = _DEFAULT_FD_STEP * np.maximum(1.0, np.linalg.norm(pts, axis=1))
    jac = np.empty((m, n, n))
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        plus = f.eval_batch(pts + steps[:, None] * e)
        minus = f.eval_batch(pts - steps[:, None] * e)
        jac[:, :, i] = (plus - minus) / (2.0 * steps[:, None])
    return jac


def singular_values(M) -> np.ndarray:
    """Singular values of an n x n matrix, sorted descending."""
    A = np.asarray(M, dtype=float)
    if A.shape not in ((2, 2), (3, 3)):
        raise DimensionMismatch(f"expected a 2x2 or 3x3 matrix, got {A.shape}")
    return np.linalg.svd(A, compute_uv=False)


def _quotients(jac: np.ndarray) -> tuple[float, float]:
    n = jac.shape[0]
    sv = np.linalg.svd(jac, compute_uv=False)
    det = float(np.linalg.det(jac))
    floor = _DET_FLOOR_FACTOR * float(sv[0]) ** n
    if det <= floor:
        raise BranchPointSuspected(
            f"Jacobian determinant {det:.3e} at or below branch floor {floor:.3e}"
        )
    return float(sv[0] ** n / det), float(det / sv[-1] ** n)


def dilatation_at(f: MapInstance, x) -> tuple[float, float]:
    """Pointwise (K_O, K_I) quotient pair from the numeric Jacobian."""
    return _quotients(numeric_jacobian(f, as_point(x, dim=f.dim)))


def estimate_dilatation(
    f: MapInstance, region: Box, samples: int, *, seed: int = 0
) -> DilatationEstimate:
    """Sup of pointwise quotients over quasi-random sample points in region."""
    if samples < 100:
        raise ValueError("dilatation estimation needs at least 100 samples")
    if region.dim != f.dim:
        raise DimensionMismatch("region dimension does not match the map")
    sampler = qmc.Halton(d=region.dim, scramble=True, seed=seed)
    pts = region.low + sampler.random(samples) * region.widths

    jacs = _batched_jacobians(f, pts)
    sv = np.linalg.svd(jacs, compute_uv=False)
    det = np.linalg.det(jacs)
    n = f.dim
    floor = _DET_FLOOR_FACTOR * sv[:, 0] ** n
    good = det > floor
    rejected = int(np.count_nonzero(~good))
    if not np.any(good):
        raise AllSamplesRejected("every sample sits near the branch set")
    ko = sv[good, 0] ** n / det[good]
    ki = det[good] / sv[good, -1] ** n
    worst = int(np.argmax(np.maximum(ko, ki)))
    return DilatationEstimate(
        K_O_est=float(np.max(ko)),
        K_I_est=float(np.max(ki)),
        samples_used=int(np.count_nonzero(good)),
        argmax_point=pts[good][worst],
        rejected_near_branch=rejected,
    )


# ---------------------------------------------------------------------------
# degree estimation
# ---------------------------------------------------------------------------

def branch_and_bound_zeros(
    residual_fn, search: Box, *, initial_per_axis: int = 8,
    final_diam: float = 1e-6, max_cells: int = 200_000,
) -> tuple[np.ndarray, float, bool]:
    """Keep cells that may contain a zero of residual_fn, subdividing to
    final_diam.

    A cell may contain a zero only if |residual(center)| <= L_box * diam/2,
    where L_box is a sampled per-cell Lipschitz bound (corner-to-center
    slopes, doubled for safety). Returns (surviving centers, cell diameter,
    tripped): `tripped` is set when the surviving-cell count blows past
    max_cells, the signature of a non-isolated zero set.
    """
    n = search.dim
    widths = search.widths / initial_per_axis
    grids = np.meshgrid(*[np.arange(initial_per_axis)] * n, indexing="ij")
    offs = np.stack([g.ravel() for g in grids], axis=1)
    lows = search.low[None, :] + offs * widths[None, :]
    corner_offs = np.stack(
        [g.ravel() for g in np.meshgrid(*[np.array([0.0, 1.0])] * n, indexing="ij")],
        axis=1,
    )
    while True:
        centers = lows + 0.5 * widths[None, :]
        diam = float(np.linalg.norm(widths))
        rc = residual_fn(centers)
        resid = np.linalg.norm(rc, axis=1)
        half = 0.5 * diam
        slopes = np.zeros(len(lows))
        for co in corner_offs:
            corners = lows + co[None, :] * widths[None, :]
            dv = np.linalg.norm(residual_fn(corners) - rc, axis=1)
            slopes = np.maximum(slopes, dv / half)
        l_box = 2.0 * np.maximum(slopes, 1e-12)
        keep = resid <= l_box * half
        lows = lows[keep]
        centers = lows + 0.5 * widths[None, :]
        if lows.shape[0] == 0:
            return np.empty((0, n)), diam, False
        if lows.shape[0] > max_cells:
            return centers, diam, True
        if diam <= final_diam:
            return centers, diam, False
        children = lows[:, None, :] + corner_offs[None, :, :] * (widths / 2.0)[None, None, :]
        lows = children.reshape(-1, n)
        widths = widths / 2.0


def _subdivision_solve(
    f: MapInstance, target: np.ndarray, search: Box, *, final_diam: float = 1e-6,
) -> np.ndarray:
    centers, _, tripped = branch_and_bound_zeros(
        lambda pts: f.eval_batch(pts) - target[None, :], search, final_diam=final_diam
    )
    if tripped:
        raise SearchBoxTooSmall(
            "subdivision exploded; the target may have non-isolated preimages"
        )
    return centers


def _cluster_count(points: np.ndarray, tol: float) -> np.ndarray:
    if points.shape[0] == 0:
        return points
    reps: list[np.ndarray] = []
    for p in points:
        if not any(np.linalg.norm(p - r) <= tol for r in reps):
            reps.append(p)
    return np.array(reps)


def estimate_degree(
    f: MapInstance, targets: Sequence, search: Box, *, final_diam: float = 1e-6
) -> DegreeEstimate:
    """Maximal preimage count over the given targets.

    Uses the exact preimage oracle when the map has one; otherwise subdivision
    inside `search`, which must safely contain all preimages (checked by the
    boundary growth condition below).
    """
    if not f.metadata.polynomial_type:
        raise NotPolynomialType("degree estimation requires a polynomial-type map")
    tgts = [as_point(t, dim=f.dim) for t in targets]
    if not tgts:
        raise ValueError("at least one target point is required")

    if f.preimage_rule is not None:
        count = max(preimages_exact(f, t).shape[0] for t in tgts)
        return DegreeEstimate(count=count, method="exact-oracle",
                              target_points=tuple(tuple(t) for t in tgts))

    # boundary growth check: boundary cells of the search box must map well
    # beyond the target norms, otherwise preimages may sit outside the box
    max_norm = max(float(np.linalg.norm(t)) for t in tgts)
    rng = np.random.default_rng(12345)
    n = f.dim
    per_face = 64
    faces = []
    for axis in range(n):
        for side in (0, 1):
            u = rng.random((per_face, n))
            pts = search.low + u * search.widths
            pts[:, axis] = search.low[axis] + side * search.widths[axis]
            faces.append(pts)
    boundary_pts = np.concatenate(faces, axis=0)
    bvals = np.linalg.norm(f.eval_batch(boundary_pts), axis=1)
    if np.min(bvals) <= 2.0 * max(max_norm, 1.0):
        raise SearchBoxTooSmall(
            "search box boundary maps within 2x the target norm; enlarge the box"
        )

    best = 0
    for t in tgts:
        sols = _subdivision_solve(f, t, search, final_diam=final_diam)
        reps = _cluster_count(sols, tol=10.0 * final_diam)
        best = max(best, reps.shape[0])
    return DegreeEstimate(count=best, method="subdivision",
                          target_points=tuple(tuple(t) for t in tgts))


def estimate_local_index(f: MapInstance, x, radius: float) -> int:
    """Preimage multiplicity of f at x: count preimages of a generic nearby
    value inside B(x, radius)."""
    p = as_point(x, dim=f.dim)
    if radius <= 0:
        raise ValueError("radius must be positive")
    fx = f(p)

    if f.preimage_rule is not None:
        # the ball must isolate the preimage cluster at x
        own = preimages_exact(f, fx)
        inside = own[np.linalg.norm(own - p[None, :], axis=1) < radius]
        clusters = _cluster_count(inside, tol=1e-6)
        if clusters.shape[0] > 1:
            raise RadiusTooLarge(
                f"{clusters.shape[0]} preimage clusters of f(x) inside the ball"
            )

    # smallest image displacement over the sphere bounds how far we may perturb
    rng = np.random.default_rng(99)
    dirs = rng.standard_normal((256, f.dim))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    sphere_vals = f.eval_batch(p[None, :] + radius * dirs)
    m = float(np.min(np.linalg.norm(sphere_vals - fx[None, :], axis=1)))
    eps = 0.25 * m
    offset = rng.standard_normal(f.dim)
    offset *= eps / np.linalg.norm(offset)
    y = fx + offset

    if f.preimage_rule is not None:
        pre = preimages_exact(f, y)
    else:
        ball_box = Box(p - radius, p + radius)
        pre = _cluster_count(_subdivision_solve(f, y, ball_box), tol=1e-5)
    if pre.shape[0] == 0:
        return 0
    return int(np.count_nonzero(np.linalg.norm(pre - p[None, :], axis=1) < radius))


def uqr_probe(
    f: MapInstance, max_k: int, region: Box, samples: int, *, seed: int = 0
) -> list[DilatationEstimate]:
    """Dilatation estimates of f^1 ... f^max_k.

    A bounded sequence is consistent with a uniform dilatation bound across
    iterates; monotone growth is a non-uniformity signal.
    """
    if max_k > 8:
        raise ValueError("max_k is capped at 8 (composition cost)")
    out = []
    for k in range(1, max_k + 1):
        out.append(estimate_dilatation(make_iterate(f, k), region, samples, seed=seed))
    return out
