import numpy as np
import pytest

from qrdyn import INFINITY, cart_to_cyl, chordal_distance, cyl_to_cart, invert_sphere
from qrdyn.errors import DimensionMismatch
from qrdyn.geometry import Box, sphere_embedding


def test_chordal_identity_is_zero():
    for x in [(0.0, 0.0), (2.0, -3.0), (0.1, 0.2, 0.3)]:
        assert chordal_distance(x, x) == 0.0


def test_chordal_origin_to_infinity_is_one():
    assert chordal_distance((0.0, 0.0), INFINITY) == pytest.approx(1.0, abs=0)
    assert chordal_distance(INFINITY, (0.0, 0.0, 0.0)) == pytest.approx(1.0, abs=0)


def test_chordal_hand_value():
    # |a-b| = 1, sqrt(1+4) * sqrt(1+9) = sqrt(50)
    expected = 1.0 / np.sqrt(50.0)
    assert chordal_distance((2.0, 0.0), (3.0, 0.0)) == pytest.approx(expected, abs=1e-15)


def test_chordal_symmetric_and_bounded():
    rng = np.random.default_rng(1)
    for _ in range(200):
        a, b = rng.normal(size=(2, 3)) * 10
        q1, q2 = chordal_distance(a, b), chordal_distance(b, a)
        assert q1 == q2
        assert 0.0 <= q1 <= 1.0 + 1e-15


def test_chordal_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        chordal_distance((1.0, 2.0), (1.0, 2.0, 3.0))


def test_chordal_infinity_both():
    assert chordal_distance(INFINITY, INFINITY) == 0.0


def test_chordal_huge_point_treated_as_infinity():
    assert chordal_distance((1e300, 0.0), INFINITY) < 1e-12


def test_triangle_inequality():
    rng = np.random.default_rng(2)
    pts = rng.normal(size=(10_000, 3, 2)) * 5
    for a, b, c in pts:
        assert chordal_distance(a, c) <= chordal_distance(a, b) + chordal_distance(b, c) + 1e-12


def test_inversion_examples():
    assert np.allclose(invert_sphere((2.0, 0.0)), (0.5, 0.0))
    x = np.array([0.3, -1.2, 7.0])
    assert np.allclose(invert_sphere(invert_sphere(x)), x, atol=1e-15)
    assert np.linalg.norm(invert_sphere((3.0, 4.0))) == pytest.approx(0.2, abs=1e-15)


def test_inversion_exchanges_zero_and_infinity():
    assert invert_sphere((0.0, 0.0)) is INFINITY
    assert np.allclose(invert_sphere(INFINITY), (0.0, 0.0))


def test_inversion_norm_product():
    rng = np.random.default_rng(3)
    ys = rng.normal(size=(12_000, 2)) * 4
    ys = ys[np.linalg.norm(ys, axis=1) > 1e-6]
    assert ys.shape[0] >= 10_000
    for y in ys[:10_000]:
        assert np.linalg.norm(invert_sphere(y)) * np.linalg.norm(y) == pytest.approx(1.0, abs=1e-12)


def test_inversion_is_chordal_isometry():
    rng = np.random.default_rng(4)
    a = rng.normal(size=(12_000, 2)) * 3
    b = rng.normal(size=(12_000, 2)) * 3
    keep = (np.linalg.norm(a, axis=1) > 1e-3) & (np.linalg.norm(b, axis=1) > 1e-3)
    assert np.count_nonzero(keep) >= 10_000
    for x, y in zip(a[keep][:10_000], b[keep][:10_000]):
        q = chordal_distance(x, y)
        qi = chordal_distance(invert_sphere(x), invert_sphere(y))
        assert qi == pytest.approx(q, abs=1e-12)


def test_sphere_embedding_matches_chordal():
    rng = np.random.default_rng(5)
    pts = rng.normal(size=(64, 2)) * 4
    emb = sphere_embedding(pts)
    for i in range(0, 64, 7):
        for j in range(0, 64, 11):
            assert np.linalg.norm(emb[i] - emb[j]) == pytest.approx(
                chordal_distance(pts[i], pts[j]), abs=1e-12
            )
    bad = sphere_embedding(np.array([[np.inf, 1.0], [0.0, 0.0]]))
    assert np.allclose(bad[0], [0.0, 0.0, 1.0])


def test_cylindrical_axis_point():
    c = cart_to_cyl((0.0, 1.0, 5.0))
    assert c.r == pytest.approx(1.0)
    assert c.phi == pytest.approx(np.pi / 2)
    assert c.y == (5.0,)


def test_cylindrical_round_trip():
    x = np.array([-1.5, 2.5, 0.0])
    assert np.allclose(cyl_to_cart(cart_to_cyl(x)), x, atol=1e-12)
    x2 = np.array([0.7, -0.2])
    assert np.allclose(cyl_to_cart(cart_to_cyl(x2)), x2, atol=1e-12)


def test_cylindrical_canonical_phi_on_axis():
    c = cart_to_cyl((0.0, 0.0, 3.0))
    assert c.r == 0.0 and c.phi == 0.0 and c.y == (3.0,)


def test_cylindrical_phi_range():
    rng = np.random.default_rng(6)
    for x in rng.normal(size=(500, 2)):
        phi = cart_to_cyl(x).phi
        assert 0.0 <= phi < 2.0 * np.pi


def test_box_validation():
    with pytest.raises(ValueError):
        Box([0.0, 0.0], [1.0, -1.0])
    with pytest.raises(DimensionMismatch):
        Box([0.0], [1.0])
    b = Box([-2.0, -2.0], [2.0, 2.0])
    assert b.contains_ball(2.0)
    assert not b.contains_ball(2.1)
    assert b.contains((1.0, 1.0)) and not b.contains((3.0, 0.0))
