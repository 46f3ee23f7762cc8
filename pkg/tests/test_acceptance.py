"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`.
"""

import hashlib
import re
import subprocess
import sys
import time

import numpy as np
import pytest

import qrdyn
from qrdyn import analysis, calculus
from qrdyn.errors import DegreeNotAboveDilatation
from qrdyn.geometry import Box

BOX25 = Box([-2.5, -2.5], [2.5, 2.5])
BOX5 = Box([-5.0, -5.0], [5.0, 5.0])
ZORICH_BOX = Box([-2.0, -2.0, 0.0], [2.0, 2.0, 3.0])

# frozen reference outputs (box [-2.5,2.5]^2, 512^2, horizon 100, holder cert;
# zorich box [-2,2]^2 x [0,3], 64^3, horizon 32, no certificate)
GOLDEN_Z2_PGM = "74a46b9234e280b67c01b9d7d3684d81b38e4dd8daf222cb414a1dd51bed3a2c"
GOLDEN_ZORICH_QRV = "42f553e1ad71ccfc98b5a7475c2902796c1cbe3144da0cb5ecb72f9413581b98"


def _line(num: int, ok: bool, detail: str) -> None:
    print(f"\nACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'}: {detail}", flush=True)
    assert ok, detail


@pytest.fixture(scope="module")
def z2():
    return qrdyn.make_zsquared()


@pytest.fixture(scope="module")
def cq():
    return qrdyn.make_conjugated_quadratic(2.0)


@pytest.fixture(scope="module")
def cert_z2(z2):
    return qrdyn.estimate_certificate(z2, "holder")


@pytest.fixture(scope="module")
def cert_cq(cq):
    return qrdyn.estimate_certificate(cq, "doubling-search")


@pytest.fixture(scope="module")
def grid_z2_512(z2, cert_z2):
    return qrdyn.classify_grid(z2, BOX25, 512, cert_z2, 100)


@pytest.fixture(scope="module")
def grid_z2_256(z2, cert_z2):
    return qrdyn.classify_grid(z2, BOX25, 256, cert_z2, 100)


@pytest.fixture(scope="module")
def grid_cq_512(cq, cert_cq):
    return qrdyn.classify_grid(cq, BOX25, 512, cert_cq, 100)


@pytest.fixture(scope="module")
def grid_cq_256(cq, cert_cq):
    return qrdyn.classify_grid(cq, BOX25, 256, cert_cq, 100)


@pytest.fixture(scope="module")
def grid_zorich_64():
    return qrdyn.classify_grid(qrdyn.make_zorich(), ZORICH_BOX, 64, None, 32)


def _circle(count=8192):
    t = np.linspace(0, 2 * np.pi, count, endpoint=False)
    return np.column_stack([np.cos(t), np.sin(t)])


def _ellipse(count=8192):
    # image of the unit circle under diag(1/2, 1): 4x^2 + y^2 = 1
    t = np.linspace(0, 2 * np.pi, count, endpoint=False)
    return np.column_stack([0.5 * np.cos(t), np.sin(t)])


def test_criterion_01_certificate(z2):
    t0 = time.perf_counter()
    cert = qrdyn.estimate_certificate(z2, "holder")
    elapsed = time.perf_counter() - t0
    ok = (
        cert.alpha == 2.0
        and 2.0 <= cert.r_prime <= 2.2
        and all(r > 2.0 for _, r in cert.validation)
        and elapsed < 1.0
    )
    _line(1, ok, f"alpha={cert.alpha}, R'={cert.r_prime:.6f}, "
                 f"min ratio={min(r for _, r in cert.validation):.4f}, {elapsed:.2f}s")


def test_criterion_02_sharpness():
    t0 = time.perf_counter()
    w3 = qrdyn.make_winding(3, 3)
    rejected = False
    try:
        qrdyn.estimate_certificate(w3, "holder")
    except DegreeNotAboveDilatation:
        rejected = True
    grid = qrdyn.classify_grid(w3, Box([-2, -2, -2], [2, 2, 2]), 64, None, 100)
    escaping = int(np.count_nonzero(grid.escaping_mask()))
    est = calculus.estimate_dilatation(w3, Box([0.25, 0.25, -1], [2, 2, 1]), 10_000)
    deg = calculus.estimate_degree(w3, [(0.4, 0.7, 0.2)], Box([-3, -3, -3], [3, 3, 3]))
    elapsed = time.perf_counter() - t0
    ok = (
        rejected
        and escaping == 0
        and 2.85 <= est.K_I_est <= 3.15
        and 8.1 <= est.K_O_est <= 9.9
        and deg.count == 3
        and elapsed < 30.0
    )
    _line(2, ok, f"rejected={rejected}, escaping={escaping}, "
                 f"K_I={est.K_I_est:.4f}, K_O={est.K_O_est:.4f}, degree={deg.count}, "
                 f"{elapsed:.1f}s")


def test_criterion_03_boundary_vs_julia(z2, cq, cert_z2, cert_cq):
    t0 = time.perf_counter()
    g1 = qrdyn.classify_grid(z2, BOX25, 512, cert_z2, 100)
    b1 = qrdyn.extract_boundary(g1)
    tol = 2.0 * float(g1.cell_widths.max())
    r1 = analysis.boundary_distance_check(b1, _circle(), tol)
    t1 = time.perf_counter() - t0

    t0 = time.perf_counter()
    g2 = qrdyn.classify_grid(cq, BOX25, 512, cert_cq, 100)
    b2 = qrdyn.extract_boundary(g2)
    r2 = analysis.boundary_distance_check(b2, _ellipse(), tol)
    t2 = time.perf_counter() - t0

    ok = r1.passed and r2.passed and t1 < 10.0 and t2 < 10.0
    _line(3, ok, f"z2 hausdorff={r1.parameters['hausdorff']:.5f} ({t1:.1f}s), "
                 f"cq hausdorff={r2.parameters['hausdorff']:.5f} ({t2:.1f}s), "
                 f"tol={tol:.5f}")


def test_criterion_04_perfectness(grid_z2_256, grid_z2_512, grid_cq_256, grid_cq_512):
    results = {}
    ok = True
    for name, coarse, fine in (
        ("z2", grid_z2_256, grid_z2_512),
        ("cq", grid_cq_256, grid_cq_512),
    ):
        bc = qrdyn.extract_boundary(coarse)
        bf = qrdyn.extract_boundary(fine)
        iso_c = qrdyn.isolated_boundary_cells(bc).size
        iso_f = qrdyn.isolated_boundary_cells(bf).size
        grows = bf.cell_indices.size > bc.cell_indices.size
        results[name] = (iso_c, iso_f, bc.cell_indices.size, bf.cell_indices.size)
        ok = ok and iso_c == 0 and iso_f == 0 and grows
    _line(4, ok, f"isolated/counts: {results}")


def test_criterion_05_iterate_consistency(z2, cq):
    r1 = analysis.iterate_consistency_check(z2, 2, BOX25, 256, 50)
    r2 = analysis.iterate_consistency_check(cq, 2, BOX25, 256, 50)
    ok = (r1.passed and r2.passed
          and r1.parameters["symmetric_difference"] == 0
          and r2.parameters["symmetric_difference"] == 0)
    _line(5, ok, f"z2 symdiff={r1.parameters['symmetric_difference']}, "
                 f"cq symdiff={r2.parameters['symmetric_difference']}")


def test_criterion_06_invariance(z2, grid_z2_256):
    rep = analysis.invariance_check(z2, grid_z2_256, 10_000)
    n = rep.parameters["n_sampled"]
    agree = rep.parameters["certified_agreements"]
    mismatch = rep.parameters["certified_mismatches"]
    indet = rep.parameters["indeterminate"]
    ok = (rep.passed and n == 10_000 and mismatch == 0
          and agree >= 0.99 * n and agree + indet == n)
    _line(6, ok, f"samples={n}, certified agreement={agree}, "
                 f"mismatches={mismatch}, indeterminate={indet}")


def test_criterion_07_connectivity(z2, cq, cert_cq, grid_z2_512):
    r1 = analysis.connectivity_check(grid_z2_512)
    # the conjugated quadratic needs a box containing the ball of radius R'=4
    grid_cq = qrdyn.classify_grid(cq, BOX5, 512, cert_cq, 100)
    r2 = analysis.connectivity_check(grid_cq)
    ok = r1.passed and r2.passed
    _line(7, ok, f"z2 stranded={r1.parameters['stranded_cells']}, "
                 f"cq stranded={r2.parameters['stranded_cells']}")


def test_criterion_08_equicontinuity(z2, grid_z2_256):
    boundary = qrdyn.extract_boundary(grid_z2_256)
    rep = qrdyn.equicontinuity_probe(z2, grid_z2_256, boundary)
    interior = rep.parameters["interior_worst_tail_oscillation"]
    bmin = rep.parameters["boundary_min_max_oscillation"]
    ok = rep.passed and interior < 1e-3 and bmin >= 0.5 \
        and rep.parameters["boundary_cells_tested"] == boundary.cell_indices.size
    _line(8, ok, f"interior tail osc={interior:.2e} (< 1e-3), "
                 f"boundary min osc={bmin:.3f} (>= 0.5), "
                 f"boundary cells={rep.parameters['boundary_cells_tested']}")


def test_criterion_09_fixed_points(z2, cq):
    r1 = qrdyn.fixed_point_search(z2, BOX25)
    r2 = qrdyn.fixed_point_search(cq, BOX25)
    p1 = np.array(sorted(r1.points.tolist()))
    p2 = np.array(sorted(r2.points.tolist()))
    ok = (
        np.allclose(p1, [[0.0, 0.0], [1.0, 0.0]], atol=1e-8)
        and np.allclose(p2, [[0.0, 0.0], [0.5, 0.0]], atol=1e-8)
        and np.all(r1.residuals <= 1e-9)
        and np.all(r2.residuals <= 1e-9)
    )
    _line(9, ok, f"z2 -> {p1.round(10).tolist()}, cq -> {p2.round(10).tolist()}, "
                 f"max residual={max(r1.residuals.max(), r2.residuals.max()):.2e}")


def test_criterion_10_uqr_probe(cq):
    ests_cq = calculus.uqr_probe(cq, 5, Box([-2, -2], [2, 2]), 2000)
    worst = max(max(e.K_O_est, e.K_I_est) for e in ests_cq)
    w3 = qrdyn.make_winding(3, 3)
    ests_w3 = calculus.uqr_probe(w3, 5, Box([0.25, 0.25, -1], [2, 2, 1]), 2000)
    growth_ok = all(
        abs(e.K_I_est - 3.0**k) <= 0.10 * 3.0**k
        for k, e in enumerate(ests_w3, start=1)
    )
    ok = worst <= 4.5 and growth_ok
    _line(10, ok, f"cq worst estimate={worst:.3f} (<= 4.5), "
                  f"w3 K_I by iterate={[round(e.K_I_est, 2) for e in ests_w3]}")


def test_criterion_11_unbounded_boundary():
    rep = qrdyn.unbounded_boundary_probe(qrdyn.make_zorich(), [10.0, 20.0, 40.0])
    flagged = rep.parameters["certified"] is False and "uncertified" in rep.notes
    ok = rep.passed and flagged
    _line(11, ok, f"per-radius witnesses={rep.parameters['per_radius']}, "
                  f"flagged uncertified={flagged}")


def test_criterion_12_determinism(tmp_path, grid_z2_512, grid_zorich_64):
    # frozen reference outputs
    pgm_path = tmp_path / "golden.pgm"
    qrdyn.write_escape_pgm(grid_z2_512, None, pgm_path)
    h_pgm = hashlib.sha256(pgm_path.read_bytes()).hexdigest()
    qrv_path = tmp_path / "golden.qrv"
    qrdyn.export_voxels(grid_zorich_64, qrv_path)
    h_qrv = hashlib.sha256(qrv_path.read_bytes()).hexdigest()

    # thread-count independence through the CLI
    args = ["classify", "--map", "zsquared", "--res", "128", "--horizon", "60"]
    for threads, out in (("1", "t1"), ("8", "t8")):
        res = subprocess.run(
            [sys.executable, "-m", "qrdyn", *args, "--threads", threads, "--out", out],
            cwd=tmp_path, capture_output=True, text=True,
        )
        assert res.returncode == 0, res.stderr
    same = all(
        (tmp_path / "t1" / name).read_bytes() == (tmp_path / "t8" / name).read_bytes()
        for name in ("grid.qrg", "escape.pgm", "class.ppm", "figures/escape_map.png")
    )
    strip = lambda s: re.sub(r'"wall_clock_seconds": [^,\n]+', "", s)
    reports_same = strip((tmp_path / "t1" / "report.json").read_text()) == \
        strip((tmp_path / "t8" / "report.json").read_text())

    ok = (h_pgm == GOLDEN_Z2_PGM and h_qrv == GOLDEN_ZORICH_QRV
          and same and reports_same)
    _line(12, ok, f"pgm golden match={h_pgm == GOLDEN_Z2_PGM}, "
                  f"voxel golden match={h_qrv == GOLDEN_ZORICH_QRV}, "
                  f"threads 1 vs 8 identical={same}, reports match={reports_same}")
