import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from widthlab.frame import (
    PHI,
    AmbiguityError,
    DegenerateError,
    hyperplane_through,
    perpendicular_bisector,
    permutation_of,
)

S2 = math.sqrt(2.0)


def test_concrete_coordinates(frame):
    for k, e in zip("ABCD", np.eye(4)):
        np.testing.assert_array_equal(frame[k], e / S2)
    np.testing.assert_allclose(frame["E"], PHI / (2 * S2) * np.ones(4), atol=1e-15)
    np.testing.assert_array_equal(frame["O"], np.zeros(4))


def test_ten_unit_distances(frame):
    for x, y in itertools.combinations("ABCDE", 2):
        assert abs(np.linalg.norm(frame[x] - frame[y]) - 1.0) <= 1e-12


def test_e_to_a_expansion(frame):
    # (phi/2 - 1)^2 / 2 + 3 phi^2 / 8 = 1
    assert abs((PHI / 2 - 1) ** 2 / 2 + 3 * PHI ** 2 / 8 - 1) < 1e-15
    assert abs(np.linalg.norm(frame["E"] - frame["A"]) - 1) < 1e-15


def test_base_orthogonal_half_norm(frame):
    V = np.stack([frame[k] for k in "ABCD"])
    np.testing.assert_allclose(V @ V.T, 0.5 * np.eye(4), atol=1e-15)


def test_centroid(frame):
    expect = (2 + PHI) / 10 * sum(frame[k] for k in "ABCD")
    np.testing.assert_allclose(frame["G"], expect, atol=1e-15)
    g, e = frame["G"], frame["E"]
    assert abs(g @ e / (np.linalg.norm(g) * np.linalg.norm(e)) - 1) < 1e-15


def test_midpoint_sphere(frame):
    mcd = frame.mid("C", "D")
    assert abs(mcd @ mcd - 0.25) < 1e-15
    for k in "ABE":
        assert abs(np.linalg.norm(frame[k] - mcd) - math.sqrt(3) / 2) < 1e-15


def test_symmetries_preserve_frame(frame):
    syms = frame.symmetries()
    assert len(syms) == 24
    V = frame.vertices
    for s in syms:
        img = V @ s.T
        mapping = permutation_of(s)
        for i, k in enumerate("ABCDE"):
            np.testing.assert_array_equal(img[i], frame[mapping[k]])


def test_hyperplane_base_facet(frame):
    h = hyperplane_through([frame[k] for k in "ABCD"], -frame["E"])
    assert abs(abs(h.normal @ np.ones(4) / 2) - 1) < 1e-12
    assert not h.keeps(frame["E"][None])[0]
    for k in "ABCD":
        assert abs(h.signed(frame[k][None])[0]) < 1e-10


def test_hyperplane_keeps_witness(frame):
    h = hyperplane_through([frame[k] for k in "BCDE"], frame["A"])
    assert h.signed(frame["A"][None])[0] > 0
    assert abs(np.linalg.norm(h.normal) - 1) < 1e-12


def test_hyperplane_through_origin(frame):
    bprime = -frame["B"]
    h = hyperplane_through([frame["A"], frame["C"], frame["D"], frame["O"]], bprime)
    assert abs(h.signed(np.zeros((1, 4)))[0]) < 1e-12
    assert h.signed(bprime[None])[0] > 0


def test_hyperplane_errors(frame):
    with pytest.raises(DegenerateError):
        hyperplane_through([frame["A"], frame["B"], frame["A"], frame["C"]], frame["E"])
    with pytest.raises(AmbiguityError):
        hyperplane_through([frame[k] for k in "ABCD"], frame.mid("A", "B"))


def test_bisectors(frame):
    h = perpendicular_bisector(frame["A"], frame["E"])
    for p in (frame.mid("A", "E"), frame["B"], frame["C"], frame["D"]):
        assert abs(h.signed(p[None])[0]) < 1e-10
    h = perpendicular_bisector(frame["A"], frame["B"])
    for k in "CDEO":
        assert abs(h.signed(frame[k][None])[0]) < 1e-10
    with pytest.raises(DegenerateError):
        perpendicular_bisector(frame["A"], frame["A"])


@given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.floats(0.01, 1.5))
def test_bisector_contains_equidistant_points(frame, coords, r):
    # any point of the form mid + w with w orthogonal to (A - E) is equidistant
    d = frame["A"] - frame["E"]
    w = np.array(coords)
    w = w - (w @ d) / (d @ d) * d
    p = frame.mid("A", "E") + r * w
    h = perpendicular_bisector(frame["A"], frame["E"])
    assert abs(h.signed(p[None])[0]) < 1e-10


def test_reflection_is_involution(frame):
    h = perpendicular_bisector(frame["A"], frame["B"])
    np.testing.assert_allclose(h.reflect(frame["A"]), frame["B"], atol=1e-15)
    np.testing.assert_allclose(h.reflect(h.reflect(frame["E"])), frame["E"], atol=1e-15)


def test_frame_json_roundtrip(frame):
    doc = frame.to_json()
    assert doc["phi"] == PHI
    assert set(doc["points"]) == set("ABCDEGO")
    np.testing.assert_array_equal(doc["points"]["E"], frame["E"])
