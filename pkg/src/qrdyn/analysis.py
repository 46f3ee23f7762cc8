"""Boundary extraction and property checks over classified escape grids.

All topological statements are made at cell granularity. Horizon-bounded
cells of uncertified grids are treated as "unknown", never as non-escaping,
in every pass/fail rule.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    BoxTooSmall,
    NoFixedPointFound,
    NotApplicable,
    NotPolynomialType,
)
from .geometry import Box, sphere_embedding
from .maps import MapInstance, make_iterate
from .escape import (
    DEFAULT_M_BIG,
    EscapeCertificate,
    EscapeGrid,
    classify_grid,
    classify_points,
    estimate_certificate,
)


@dataclass
class CheckReport:
    """Structured pass/fail record; a failed check always carries witnesses."""

    name: str
    passed: bool
    witnesses: list
    parameters: dict
    notes: str = ""

    def __post_init__(self):
        if not self.passed and not self.witnesses:
            raise ValueError("a failing check must record at least one witness")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "witnesses": self.witnesses,
            "parameters": self.parameters,
            "notes": self.notes,
        }


# ---------------------------------------------------------------------------
# mask helpers
# ---------------------------------------------------------------------------

def _shift(mask: np.ndarray, offsets) -> np.ndarray:
    """Zero-filled shift of a boolean array by per-axis offsets."""
    out = np.zeros_like(mask)
    src = []
    dst = []
    for size, o in zip(mask.shape, offsets):
        src.append(slice(max(0, -o), size - max(0, o)))
        dst.append(slice(max(0, o), size - max(0, -o)))
    out[tuple(dst)] = mask[tuple(src)]
    return out


def _open_neighborhood_any(mask: np.ndarray) -> np.ndarray:
    """True where any of the 3^n - 1 neighbors (inside the box) is set."""
    out = np.zeros_like(mask)
    for offs in itertools.product((-1, 0, 1), repeat=mask.ndim):
        if all(o == 0 for o in offs):
            continue
        out |= _shift(mask, offs)
    return out


@dataclass
class BoundarySet:
    """Cells whose 3^n - 1 neighborhood contains both an escaping and a
    sentinel cell; the grid-scale stand-in for the escaping-set boundary."""

    grid: EscapeGrid
    cell_indices: np.ndarray  # sorted flat indices, x fastest

    def mask(self) -> np.ndarray:
        m = np.zeros(self.grid.cells.size, dtype=bool)
        m[self.cell_indices] = True
        return m.reshape(self.grid.cells.shape)

    def centers(self) -> np.ndarray:
        if self.cell_indices.size == 0:
            return np.empty((0, self.grid.dim))
        return self.grid.centers()[self.cell_indices]


def extract_boundary(grid: EscapeGrid) -> BoundarySet:
    esc = grid.escaping_mask()
    near_esc = _open_neighborhood_any(esc)
    near_sent = _open_neighborhood_any(~esc)
    boundary = near_esc & near_sent
    return BoundarySet(grid=grid, cell_indices=np.flatnonzero(boundary.ravel()))


def isolated_boundary_cells(boundary: BoundarySet) -> np.ndarray:
    """Boundary cells with no other boundary cell among their 3^n - 1 neighbors."""
    mask = boundary.mask()
    has_neighbor = _open_neighborhood_any(mask)
    return np.flatnonzero((mask & ~has_neighbor).ravel())


# ---------------------------------------------------------------------------
# connectivity
# ---------------------------------------------------------------------------

class UnionFind:
    """Array union-find with path halving; single-threaded by contract."""

    def __init__(self, size: int):
        self.parent = np.arange(size, dtype=np.int64)

    def find(self, a: int) -> int:
        p = self.parent
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


def connectivity_check(grid: EscapeGrid) -> CheckReport:
    """Single escaping component attached to infinity.

    Face-adjacent escaping cells are joined; a virtual infinity node is joined
    to every escaping cell on the box boundary (the exterior beyond the box is
    escaping because the box contains the certified ball). Passes iff no
    escaping component is disconnected from the infinity node.
    """
    cert = grid.certificate
    if cert is None:
        raise NotPolynomialType("connectivity needs a certified grid")
    if not grid.box.contains_ball(cert.r_prime):
        raise BoxTooSmall(
            f"grid box must contain the closed ball of radius R'={cert.r_prime:.6g}"
        )
    esc = grid.escaping_mask()
    size = esc.size
    inf_node = size
    uf = UnionFind(size + 1)

    flat = esc.ravel()
    shape = esc.shape
    strides = [int(np.prod(shape[d + 1:], dtype=int)) for d in range(len(shape))]
    for d in range(len(shape)):
        sl_a = [slice(None)] * len(shape)
        sl_b = [slice(None)] * len(shape)
        sl_a[d] = slice(0, shape[d] - 1)
        sl_b[d] = slice(1, shape[d])
        both = esc[tuple(sl_a)] & esc[tuple(sl_b)]
        idx = np.flatnonzero(_expand(both, d, shape).ravel())
        stride = strides[d]
        for a in idx:
            uf.union(int(a), int(a) + stride)

    edge = np.zeros(shape, dtype=bool)
    for d in range(len(shape)):
        sl = [slice(None)] * len(shape)
        sl[d] = 0
        edge[tuple(sl)] = True
        sl[d] = shape[d] - 1
        edge[tuple(sl)] = True
    for a in np.flatnonzero((esc & edge).ravel()):
        uf.union(inf_node, int(a))

    esc_idx = np.flatnonzero(flat)
    root_inf = uf.find(inf_node)
    stranded = [int(i) for i in esc_idx if uf.find(int(i)) != root_inf]
    components = {uf.find(i) for i in stranded}
    passed = len(stranded) == 0
    witnesses = []
    if not passed:
        for i in stranded[:5]:
            witnesses.append({"cell": i, "center": [float(v) for v in grid.flat_to_center(i)]})
    return CheckReport(
        name="connectivity",
        passed=passed,
        witnesses=witnesses,
        parameters={
            "escaping_cells": int(esc_idx.size),
            "stranded_cells": len(stranded),
            "stranded_components": len(components),
            "r_prime": cert.r_prime,
        },
        notes="all escaping cells connect to the infinity node"
        if passed
        else "escaping component(s) not attached to infinity",
    )


def _expand(sub: np.ndarray, axis: int, shape) -> np.ndarray:
    out = np.zeros(shape, dtype=bool)
    sl = [slice(None)] * len(shape)
    sl[axis] = slice(0, shape[axis] - 1)
    out[tuple(sl)] = sub
    return out


def escaping_set_difference(a: EscapeGrid, b: EscapeGrid) -> np.ndarray:
    """Flat indices where exactly one of the two grids marks the cell escaping."""
    if a.cells.shape != b.cells.shape:
        raise ValueError("grids must share a resolution")
    return np.flatnonzero((a.escaping_mask() ^ b.escaping_mask()).ravel())


# ---------------------------------------------------------------------------
# invariance
# ---------------------------------------------------------------------------

def invariance_check(
    f: MapInstance, grid: EscapeGrid, samples: int, *, seed: int = 0
) -> CheckReport:
    """Compare the grid's class at x with the class of f(x) at matched horizons.

    Samples are centers of certified-escaping cells (the grid records
    classify_point of each center at horizon N); f(x) is classified fresh at
    horizon N - 1, so for an honest map the image must again be certified
    escaping. A certified-vs-horizon-bounded pair is a failure; pairs whose
    image outcome is uncertified (overflow) are listed as indeterminate. On an
    uncertified grid every outcome is indeterminate and the check passes
    vacuously.
    """
    rng = np.random.default_rng(seed)
    esc_idx = np.flatnonzero(grid.escaping_mask().ravel())
    if grid.certificate is None or esc_idx.size == 0:
        return CheckReport(
            name="invariance",
            passed=True,
            witnesses=[],
            parameters={"n_sampled": 0, "certified_agreements": 0,
                        "certified_mismatches": 0, "indeterminate": 0},
            notes="no certified escaping cells; all outcomes indeterminate",
        )
    take = min(samples, esc_idx.size)
    chosen = np.sort(rng.choice(esc_idx, size=take, replace=False))
    centers = grid.centers()[chosen]
    with np.errstate(over="ignore", invalid="ignore"):
        images = f.eval_batch(centers)
    finite = np.all(np.isfinite(images), axis=1)
    times = np.full(take, -2, dtype=np.int64)
    if np.any(finite):
        t_fin, over = classify_points(
            f, images[finite], grid.certificate, max(1, grid.horizon - 1), m_big=grid.m_big
        )
        t_fin = np.where(over, -2, t_fin)  # overflow -> indeterminate
        times[finite] = t_fin

    agree = times >= 0
    indeterminate = times == -2
    mismatch = times == -1
    witnesses = [
        {"point": [float(v) for v in centers[i]],
         "grid_time": int(grid.cells.ravel()[chosen[i]])}
        for i in np.flatnonzero(mismatch)[:5]
    ]
    n_mismatch = int(np.count_nonzero(mismatch))
    return CheckReport(
        name="invariance",
        passed=n_mismatch == 0,
        witnesses=witnesses,
        parameters={
            "n_sampled": int(take),
            "certified_agreements": int(np.count_nonzero(agree)),
            "certified_mismatches": n_mismatch,
            "indeterminate": int(np.count_nonzero(indeterminate)),
        },
        notes="class(x) vs class(f(x)) at horizons N and N-1",
    )


# ---------------------------------------------------------------------------
# iterate consistency
# ---------------------------------------------------------------------------

def iterate_consistency_check(
    f: MapInstance,
    k: int,
    box: Box,
    resolution,
    horizon: int,
    *,
    certificate_method: str = "auto",
    threads: int = 1,
    seed: int = 0,
    iterate_map: Optional[MapInstance] = None,
) -> CheckReport:
    """Certified-escaping cell sets of f (horizon N*k) vs f^k (horizon N).

    iterate_map overrides the composed iterate (diagnostic hook; the default
    composes f with itself k times).
    """
    if k not in (2, 3):
        raise ValueError("iterate consistency is defined for k in {2, 3}")
    if not f.metadata.polynomial_type:
        raise NotPolynomialType("iterate consistency needs polynomial-type maps")
    fk = iterate_map if iterate_map is not None else make_iterate(f, k)
    cert_f = auto_certificate(f, certificate_method, seed=seed)
    cert_fk = auto_certificate(fk, certificate_method, seed=seed)
    grid_f = classify_grid(f, box, resolution, cert_f, horizon * k, threads=threads)
    grid_fk = classify_grid(fk, box, resolution, cert_fk, horizon, threads=threads)
    diff = escaping_set_difference(grid_f, grid_fk)
    witnesses = [
        {"cell": int(i), "center": [float(v) for v in grid_f.flat_to_center(int(i))]}
        for i in diff[:5]
    ]
    return CheckReport(
        name=f"iterate-consistency-k{k}",
        passed=diff.size == 0,
        witnesses=witnesses,
        parameters={
            "k": k,
            "horizon_base": horizon,
            "resolution": list(grid_f.resolution),
            "symmetric_difference": int(diff.size),
            "escaping_under_f": int(np.count_nonzero(grid_f.escaping_mask())),
            "escaping_under_fk": int(np.count_nonzero(grid_fk.escaping_mask())),
        },
    )


def auto_certificate(f: MapInstance, method: str = "auto", *, seed: int = 0) -> EscapeCertificate:
    """Certificate with the requested method; "auto" prefers the growth-law
    route when the inner dilatation is known and falls back to radius search."""
    if method == "auto":
        method = "holder" if f.metadata.inner_dilatation is not None else "doubling-search"
    return estimate_certificate(f, method, seed=seed)


# ---------------------------------------------------------------------------
# equicontinuity dichotomy
# ---------------------------------------------------------------------------

def _cell_corner_center(grid: EscapeGrid, flat_idx: np.ndarray,
                        bank: Optional[np.ndarray] = None) -> np.ndarray:
    """(m, 2^n + 1, n) corner-plus-center sets of the given cells."""
    n = grid.dim
    centers = (grid.centers() if bank is None else bank)[flat_idx]
    half = 0.5 * grid.cell_widths
    signs = np.array(list(itertools.product((-1.0, 1.0), repeat=n)))
    corners = centers[:, None, :] + signs[None, :, :] * half[None, None, :]
    return np.concatenate([centers[:, None, :], corners], axis=1)


def _neighbor_centers(grid: EscapeGrid, flat_idx: np.ndarray,
                      bank: Optional[np.ndarray] = None) -> np.ndarray:
    """(m, 3^n - 1, n) neighbor cell centers, cell center padded outside the box."""
    shape = grid.cells.shape
    n = grid.dim
    if bank is None:
        bank = grid.centers()
    coords = np.stack(np.unravel_index(flat_idx, shape), axis=1)
    offsets = [o for o in itertools.product((-1, 0, 1), repeat=n) if any(o)]
    out = np.empty((flat_idx.size, len(offsets), n))
    for j, offs in enumerate(offsets):
        nb = coords + np.asarray(offs)
        ok = np.all((nb >= 0) & (nb < np.asarray(shape)), axis=1)
        nb_clamped = np.clip(nb, 0, np.asarray(shape) - 1)
        flat_nb = np.ravel_multi_index(tuple(nb_clamped.T), shape)
        use = np.where(ok, flat_nb, flat_idx)
        out[:, j, :] = bank[use]
    return out


def _oscillation_history(
    f: MapInstance, point_sets: np.ndarray, horizon: int, r_prime: float
) -> tuple[np.ndarray, np.ndarray]:
    """Iterate (C, P, n) point sets and record chordal oscillation per step.

    Returns (osc, escape_time): osc has shape (C, horizon) with the maximal
    pairwise chordal distance of each set's image under f^k (k = 1..horizon);
    escape_time has shape (C, P) with the first k >= 0 where |f^k| > R'
    (-1 if never within the horizon).
    """
    c, p, n = point_sets.shape
    x = point_sets.reshape(-1, n).copy()
    escape = np.full(c * p, -1, dtype=np.int64)
    sq0 = np.einsum("ij,ij->i", x, x)
    escape[sq0 > r_prime * r_prime] = 0
    osc = np.empty((c, horizon))
    for k in range(1, horizon + 1):
        with np.errstate(over="ignore", invalid="ignore"):
            x = f.eval_batch(x)
            sq = np.einsum("ij,ij->i", x, x)
        crossed = (escape < 0) & (~np.isfinite(sq) | (sq > r_prime * r_prime))
        escape[crossed] = k
        emb = sphere_embedding(x).reshape(c, p, n + 1)
        diff = emb[:, :, None, :] - emb[:, None, :, :]
        osc[:, k - 1] = np.sqrt(np.einsum("cpqe,cpqe->cpq", diff, diff)).max(axis=(1, 2))
    return osc, escape.reshape(c, p)


def equicontinuity_probe(
    f: MapInstance,
    grid: EscapeGrid,
    boundary: BoundarySet,
    *,
    eps_eq: float = 1e-3,
    delta_eq: float = 0.5,
    interior_samples: int = 64,
    seed: int = 0,
) -> CheckReport:
    """Uniform-escape oscillation decay inside, oscillation blow-up on the boundary.

    Interior: for cells whose whole closed neighborhood is certified escaping,
    the chordal oscillation of the corner-plus-center set under f^k must drop
    below eps_eq for every k past the set's largest escape time + 3 and stay
    below. Boundary: for every boundary cell, the oscillation of its corners,
    center, and neighbor centers must reach delta_eq at some k <= horizon (the
    neighbor centers guarantee both classes are represented in the set).
    """
    cert = grid.certificate
    if cert is None:
        raise NotPolynomialType("equicontinuity probe needs a certified grid")
    horizon = grid.horizon
    esc = grid.escaping_mask()
    witnesses: list = []
    params: dict = {"eps_eq": eps_eq, "delta_eq": delta_eq, "horizon": horizon}

    # interior test
    deep = esc & ~_open_neighborhood_any(~esc)
    for d in range(deep.ndim):  # drop box-edge cells: their neighborhood is cut off
        sl = [slice(None)] * deep.ndim
        sl[d] = 0
        deep[tuple(sl)] = False
        sl[d] = deep.shape[d] - 1
        deep[tuple(sl)] = False
    deep_idx = np.flatnonzero(deep.ravel())
    interior_ok = True
    worst_tail = 0.0
    if deep_idx.size:
        stride = max(1, deep_idx.size // interior_samples)
        sel = deep_idx[::stride][:interior_samples]
        sets = _cell_corner_center(grid, sel)
        osc, escape = _oscillation_history(f, sets, horizon, cert.r_prime)
        for i, flat in enumerate(sel):
            if np.any(escape[i] < 0):
                interior_ok = False
                witnesses.append({
                    "test": "interior", "cell": int(flat),
                    "center": [float(v) for v in grid.flat_to_center(int(flat))],
                    "detail": "a corner failed to escape within the horizon",
                })
                continue
            start = int(escape[i].max()) + 3
            tail = osc[i, start:] if start < horizon else osc[i, -1:]
            worst_tail = max(worst_tail, float(tail.max()))
            if np.any(tail >= eps_eq):
                interior_ok = False
                witnesses.append({
                    "test": "interior", "cell": int(flat),
                    "center": [float(v) for v in grid.flat_to_center(int(flat))],
                    "max_tail_oscillation": float(tail.max()),
                })
        params["interior_cells_tested"] = int(sel.size)
        params["interior_worst_tail_oscillation"] = worst_tail
    else:
        params["interior_cells_tested"] = 0

    # boundary test
    boundary_ok = True
    b_idx = boundary.cell_indices
    if b_idx.size:
        bank = grid.centers()
        sets = np.concatenate(
            [_cell_corner_center(grid, b_idx, bank), _neighbor_centers(grid, b_idx, bank)],
            axis=1,
        )
        osc, _ = _oscillation_history(f, sets, horizon, cert.r_prime)
        max_osc = osc.max(axis=1)
        params["boundary_cells_tested"] = int(b_idx.size)
        params["boundary_min_max_oscillation"] = float(max_osc.min())
        for i in np.flatnonzero(max_osc < delta_eq)[:5]:
            boundary_ok = False
            witnesses.append({
                "test": "boundary", "cell": int(b_idx[i]),
                "center": [float(v) for v in grid.flat_to_center(int(b_idx[i]))],
                "max_oscillation": float(max_osc[i]),
            })
        boundary_ok = bool(np.all(max_osc >= delta_eq))
    else:
        params["boundary_cells_tested"] = 0

    return CheckReport(
        name="equicontinuity-dichotomy",
        passed=interior_ok and boundary_ok,
        witnesses=witnesses,
        parameters=params,
    )


# ---------------------------------------------------------------------------
# fixed points
# ---------------------------------------------------------------------------

@dataclass
class FixedPointResult:
    points: np.ndarray
    residuals: np.ndarray
    continuum_warning: bool

    def to_dict(self) -> dict:
        return {
            "points": [[float(v) for v in p] for p in self.points],
            "residuals": [float(r) for r in self.residuals],
            "continuum_warning": self.continuum_warning,
        }


def _pattern_refine(f: MapInstance, center: np.ndarray, width: float,
                    residual_tol: float) -> np.ndarray:
    """Shrinking local-grid argmin of |f(x) - x| around a seed cell."""
    n = center.size
    offsets = np.array(list(itertools.product((-1.0, -0.5, 0.0, 0.5, 1.0), repeat=n)))
    x = center.copy()
    w = float(width)
    for _ in range(80):
        probes = x[None, :] + w * offsets
        resid = np.linalg.norm(f.eval_batch(probes) - probes, axis=1)
        j = int(np.argmin(resid))
        x = probes[j].copy()
        if resid[j] <= 0.25 * residual_tol or w < 1e-14:
            break
        w *= 0.5
    return x


def fixed_point_search(
    f: MapInstance,
    region: Box,
    *,
    residual_tol: float = 1e-9,
    survivor_cap: int = 20_000,
    seed: int = 0,
) -> FixedPointResult:
    """Find the fixed points of f in region by coarse grid + subdivision.

    Branch-and-bound on the residual f(x) - x: a cell can contain a fixed
    point only if its center residual is below a per-cell Lipschitz multiple
    of its diameter. Isolated fixed points keep the surviving-cell count
    bounded; a continuum makes it blow up, which is reported as a warning
    with deduplicated representatives instead of a point list.
    """
    if not f.metadata.polynomial_type:
        raise NotPolynomialType("fixed-point search is for polynomial-type maps")
    from .calculus import branch_and_bound_zeros

    centers, diam, continuum = branch_and_bound_zeros(
        lambda pts: f.eval_batch(pts) - pts,
        region,
        initial_per_axis=16,
        final_diam=0.2 * residual_tol,
        max_cells=survivor_cap,
    )
    if centers.shape[0] == 0:
        raise NoFixedPointFound(
            "no residual below tolerance in the region; enlarge it or check parameters"
        )

    resid = np.linalg.norm(f.eval_batch(centers) - centers, axis=1)
    order = np.argsort(resid, kind="stable")
    dedupe_tol = max(1e-6, 4.0 * diam) if continuum else 1e-6
    reps: list[np.ndarray] = []
    for i in order:
        c = centers[i]
        if all(np.linalg.norm(c - r) > dedupe_tol for r in reps):
            reps.append(c)
        if continuum and len(reps) >= 16:
            break

    points = []
    residuals = []
    for c in reps:
        p = _pattern_refine(f, c, diam, residual_tol)
        r = float(np.linalg.norm(f(p) - p))
        if r <= residual_tol and region.contains(p):
            if all(np.linalg.norm(p - q) > 1e-6 for q in points):
                points.append(p)
                residuals.append(r)
    if not points:
        raise NoFixedPointFound("refinement did not reach the residual tolerance")
    return FixedPointResult(
        points=np.array(points), residuals=np.array(residuals), continuum_warning=continuum
    )


# ---------------------------------------------------------------------------
# unbounded boundary probe (essential singularity)
# ---------------------------------------------------------------------------

def unbounded_boundary_probe(
    f: MapInstance,
    radii: Sequence[float],
    *,
    directions: int = 256,
    max_directions: int = 8192,
    horizon: int = 60,
    m_big: float = DEFAULT_M_BIG,
    seed: int = 0,
) -> CheckReport:
    """On each sphere |x| = rho, look for one heuristically escaping and one
    horizon-bounded point: sampled evidence that both the escaping set and its
    complement are unbounded. Bounded directions get sparse at large radii, so
    sampling escalates in batches up to max_directions per sphere. All escape
    labels here are uncertified."""
    if f.metadata.polynomial_type:
        raise NotApplicable("probe applies to essential-singularity maps only")
    rng = np.random.default_rng(seed)
    n = f.dim
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    witnesses = []
    passed = True
    per_radius = {}
    for rho in radii:
        esc_pt = None
        bnd_pt = None
        n_esc = n_bnd = sampled = 0
        first = True
        while sampled < max_directions and (esc_pt is None or bnd_pt is None):
            dirs = rng.standard_normal((directions, n))
            dirs /= np.linalg.norm(dirs, axis=1)[:, None]
            if first:
                dirs = np.concatenate([axes, dirs])
                first = False
            pts = float(rho) * dirs
            times, _ = classify_points(f, pts, None, horizon, m_big=m_big)
            esc = np.flatnonzero(times >= 0)
            bnd = np.flatnonzero(times < 0)
            n_esc += esc.size
            n_bnd += bnd.size
            sampled += dirs.shape[0]
            if esc_pt is None and esc.size:
                esc_pt = pts[esc[0]]
            if bnd_pt is None and bnd.size:
                bnd_pt = pts[bnd[0]]
        per_radius[f"{float(rho):g}"] = {
            "escaping": n_esc, "bounded": n_bnd, "sampled": sampled,
        }
        if esc_pt is None or bnd_pt is None:
            passed = False
            witnesses.append({"radius": float(rho),
                              "detail": "missing escaping witness" if esc_pt is None
                              else "missing bounded witness"})
        else:
            witnesses.append({
                "radius": float(rho),
                "escaping_point": [float(v) for v in esc_pt],
                "bounded_point": [float(v) for v in bnd_pt],
            })
    return CheckReport(
        name="unbounded-boundary",
        passed=passed,
        witnesses=witnesses,
        parameters={"radii": [float(r) for r in radii], "horizon": horizon,
                    "m_big": m_big, "per_radius": per_radius,
                    "certified": False},
        notes="escape labels are heuristic (norm threshold) and uncertified",
    )


# ---------------------------------------------------------------------------
# certificate-derived spot checks
# ---------------------------------------------------------------------------

def _annulus_points(rng, cert, dim, count, outer=4.0):
    dirs = rng.standard_normal((count, dim))
    dirs /= np.linalg.norm(dirs, axis=1)[:, None]
    radii = cert.r_prime * (1.0 + 1e-6) + rng.random(count) * (outer - 1.0) * cert.r_prime
    return radii[:, None] * dirs


def certificate_soundness_check(
    f: MapInstance, cert: EscapeCertificate, *, samples: int = 1000, seed: int = 0
) -> CheckReport:
    """Fresh samples at radii in [R', 4R'] must satisfy |f(x)| > 2|x|."""
    rng = np.random.default_rng(seed)
    pts = _annulus_points(rng, cert, f.dim, samples)
    ratios = np.linalg.norm(f.eval_batch(pts), axis=1) / np.linalg.norm(pts, axis=1)
    bad = np.flatnonzero(~(ratios > 2.0))
    return CheckReport(
        name="certificate-soundness",
        passed=bad.size == 0,
        witnesses=[{"point": [float(v) for v in pts[i]], "ratio": float(ratios[i])}
                   for i in bad[:5]],
        parameters={"samples": samples, "r_prime": cert.r_prime,
                    "min_ratio": float(ratios.min())},
    )


def infinity_neighborhood_check(
    f: MapInstance, cert: EscapeCertificate, *, samples: int = 1000, seed: int = 0
) -> CheckReport:
    """Every tested point with |x| > R' is certified escaping at time 0."""
    rng = np.random.default_rng(seed)
    pts = _annulus_points(rng, cert, f.dim, samples)
    times, _ = classify_points(f, pts, cert, 1)
    bad = np.flatnonzero(times != 0)
    return CheckReport(
        name="infinity-neighborhood",
        passed=bad.size == 0,
        witnesses=[{"point": [float(v) for v in pts[i]]} for i in bad[:5]],
        parameters={"samples": samples, "r_prime": cert.r_prime},
    )


def openness_probe(
    f: MapInstance,
    cert: EscapeCertificate,
    box: Box,
    *,
    samples: int = 100,
    horizon: int = 100,
    seed: int = 0,
) -> CheckReport:
    """For certified-escaping samples, find delta > 0 whose 2n axis
    perturbations are all certified escaping as well."""
    rng = np.random.default_rng(seed)
    collected = []
    for _ in range(200):
        batch = box.sample(4 * samples, rng)
        times, over = classify_points(f, batch, cert, horizon)
        good = (times >= 0) & ~over
        collected.extend(batch[good])
        if len(collected) >= samples:
            break
    pts = np.array(collected[:samples])
    if pts.shape[0] < samples:
        raise ValueError("not enough certified-escaping samples in the box")
    n = f.dim
    axes = np.concatenate([np.eye(n), -np.eye(n)])
    witnesses = []
    deltas = []
    for x in pts:
        delta = 0.05 * (1.0 + float(np.linalg.norm(x)))
        found = None
        for _ in range(45):
            probes = x[None, :] + delta * axes
            times, over = classify_points(f, probes, cert, horizon)
            if np.all((times >= 0) & ~over):
                found = delta
                break
            delta *= 0.5
        if found is None:
            witnesses.append({"point": [float(v) for v in x]})
        else:
            deltas.append(found)
    passed = len(witnesses) == 0
    return CheckReport(
        name="openness",
        passed=passed,
        witnesses=witnesses,
        parameters={
            "samples": samples,
            "min_delta": float(min(deltas)) if deltas else None,
            "horizon": horizon,
        },
    )


# ---------------------------------------------------------------------------
# boundary vs reference comparison
# ---------------------------------------------------------------------------

def boundary_distance_check(
    boundary: BoundarySet, reference: np.ndarray, max_dist: float, name: str = "boundary-distance"
) -> CheckReport:
    """Two-sided Hausdorff comparison of boundary cell centers to a dense
    sample of a reference set, at tolerance max_dist."""
    centers = boundary.centers()
    ref = np.asarray(reference, dtype=float)
    if centers.shape[0] == 0:
        return CheckReport(
            name=name, passed=False,
            witnesses=[{"detail": "empty boundary"}],
            parameters={"max_dist": max_dist},
        )
    d_b_to_r = _min_dists(centers, ref)
    d_r_to_b = _min_dists(ref, centers)
    h = max(float(d_b_to_r.max()), float(d_r_to_b.max()))
    passed = h <= max_dist
    witnesses = []
    if not passed:
        i = int(np.argmax(d_b_to_r))
        j = int(np.argmax(d_r_to_b))
        witnesses = [
            {"boundary_center": [float(v) for v in centers[i]], "dist": float(d_b_to_r[i])},
            {"reference_point": [float(v) for v in ref[j]], "dist": float(d_r_to_b[j])},
        ]
    return CheckReport(
        name=name,
        passed=passed,
        witnesses=witnesses,
        parameters={
            "max_dist": max_dist,
            "hausdorff": h,
            "boundary_cells": int(centers.shape[0]),
            "reference_points": int(ref.shape[0]),
        },
    )


def _min_dists(a: np.ndarray, b: np.ndarray, chunk: int = 2048) -> np.ndarray:
    out = np.empty(a.shape[0])
    for s in range(0, a.shape[0], chunk):
        blk = a[s:s + chunk]
        d = np.linalg.norm(blk[:, None, :] - b[None, :, :], axis=2)
        out[s:s + chunk] = d.min(axis=1)
    return out
