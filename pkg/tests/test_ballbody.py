import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import sphere_grid
from test_patches import cone_grid
from widthlab.ballbody import (
    build_ball,
    build_meissner2_3d,
    classify_pair,
    diameter_of_generators,
    ray_boundary,
    regular_tetrahedron,
    support,
    support_many,
    support_upper_bound,
    width,
)
from widthlab.frame import GeometryError
from widthlab.patches import PointPiece


@pytest.fixture(scope="module")
def grid_M0(frame):
    return np.concatenate([cone_grid(frame, x, y, 100) for x, y in
                           [("A", "B"), ("A", "C"), ("A", "D"), ("B", "C"), ("B", "D"), ("C", "D")]])


def brute_margin(grid, x):
    return 1.0 - np.max(np.linalg.norm(x[:, None] - grid[None], axis=2), axis=1)


def test_margin_matches_grid_oracle(M, grid_M0, frame, rng):
    X = np.vstack([frame["G"], frame["G"] + 0.3 * rng.normal(size=(30, 4))])
    exact = M.margin(X)
    brute = brute_margin(grid_M0, X)
    # the grid only sees part of each patch: exact margin can be smaller, by little
    assert np.all(exact <= brute + 1e-12)
    assert np.max(brute - exact) < 2e-4


def test_witness_margin(M, frame):
    assert M.margin(frame["G"])[0] >= 0.1
    assert abs(M.margin(frame["G"])[0] - 0.36754) < 1e-5


def test_vertices_on_boundary(M, frame):
    for k in "ABCDE":
        assert abs(M.margin(frame[k])[0]) <= 1e-12
    assert not M.contains(2 * frame["E"])[0]


def test_boundary_crossing_segment(M, frame):
    t = np.linspace(0, 1, 201)[:, None]
    seg = frame["G"] + t * (2 * frame["E"] - frame["G"])
    m = M.margin(seg)
    assert m[0] > 0 and m[-1] < 0
    assert np.sum(np.diff(np.sign(m)) != 0) == 1


def test_reuleaux(R, M, frame, rng):
    for k in "ABCDE":
        assert R.contains(frame[k], 1e-12)[0]
    mid = frame.mid("A", "E")
    assert abs(R.margin(mid)[0] - (1 - np.max(np.linalg.norm(frame.vertices - mid, axis=1)))) < 1e-15
    X = frame["G"] + rng.uniform(-0.6, 0.6, size=(4000, 4))
    inM = M.contains(X)
    assert inM.sum() > 200
    assert np.all(R.contains(X[inM]))


def test_symmetry_of_membership(M, frame, rng):
    X = frame["G"] + rng.uniform(-0.5, 0.5, size=(500, 4))
    base = M.margin(X)
    for s in frame.symmetries()[::5]:
        np.testing.assert_allclose(M.margin(X @ s.T), base, atol=1e-12)


def test_adding_generator_shrinks(M, frame, rng):
    extra = PointPiece(frame["G"] + np.array([0.4, -0.1, 0.0, 0.2]), "X")
    N = M.with_pieces([extra])
    X = frame["G"] + rng.uniform(-0.6, 0.6, size=(2000, 4))
    assert np.all(M.contains(X)[N.contains(X)])


def test_meissner_contains_tetrahedron():
    body = build_meissner2_3d()
    for v in regular_tetrahedron():
        assert body.margin(v)[0] >= -1e-12


def test_meissner_constant_width(rng):
    body = build_meissner2_3d()
    U = rng.normal(size=(20, 3))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    for u in U:
        assert abs(width(body, u) - 1) <= 1e-4


def test_support_examples(M, frame):
    e = frame["E"] / np.linalg.norm(frame["E"])
    r = support(M, e)
    np.testing.assert_allclose(r.argmax, frame["E"], atol=1e-8)
    assert abs(r.value - np.linalg.norm(frame["E"])) < 1e-9
    with pytest.raises(GeometryError):
        support(M, 2 * e)


def test_support_result_invariants(M, rng):
    U = rng.normal(size=(25, 4))
    U /= np.linalg.norm(U, axis=1, keepdims=True)
    for u, r in zip(U, support_many(M, U)):
        assert M.margin(r.argmax)[0] >= -1e-9
        assert abs(u @ r.argmax - r.value) <= r.precision + 1e-12
        assert r.value <= support_upper_bound(M, u) + 1e-12
        # each vertex ball bounds the support
        assert r.value <= min(v @ u for v in M.generators.vertices.values()) + 1 + 1e-12


def test_support_against_boundary_cloud():
    # independent lower envelope: dense boundary points from ray casting
    body = build_meissner2_3d()
    cloud = ray_boundary(body, body.witness, sphere_grid(20000))
    for u in sphere_grid(12):
        h = support(body, u).value
        approx = float(np.max(cloud @ u))
        assert approx <= h + 1e-9
        assert h - approx < 5e-3


def test_width_examples(R, M, frame, rng):
    u = frame["E"] - frame["A"]
    assert abs(width(R, u / np.linalg.norm(u)) - 1) < 1e-9
    ball = build_ball(3)
    for u in sphere_grid(10):
        assert abs(width(ball, u) - 1) < 1e-12
    U = rng.normal(size=(10, 4))
    for u in U / np.linalg.norm(U, axis=1, keepdims=True):
        assert abs(width(M, u) - 1) <= 1e-4


@given(st.lists(st.floats(-1, 1), min_size=4, max_size=4).filter(lambda v: np.linalg.norm(v) > 0.1))
def test_width_constant_property(M, v):
    u = np.array(v) / np.linalg.norm(v)
    assert abs(width(M, u) - 1) <= 1e-4


def test_ray_boundary(M, frame, rng):
    d = (frame["E"] - frame["G"]) / np.linalg.norm(frame["E"] - frame["G"])
    p = ray_boundary(M, frame["G"], d[None])[0]
    assert np.linalg.norm(p - frame["E"]) <= 1e-8
    D = rng.normal(size=(100, 4))
    D /= np.linalg.norm(D, axis=1, keepdims=True)
    P = ray_boundary(M, frame["G"], D)
    assert np.all(np.abs(M.margin(P)) <= 1e-10)
    Q = ray_boundary(M, frame["G"], -D)
    assert np.max(np.linalg.norm(P - Q, axis=1)) <= 1 + 1e-8


def test_strict_convexity_probe(M, frame, rng):
    D = rng.normal(size=(200, 4))
    P = ray_boundary(M, frame["G"], D / np.linalg.norm(D, axis=1, keepdims=True))
    i, j = rng.integers(0, 200, (2, 100))
    keep = np.linalg.norm(P[i] - P[j], axis=1) > 1e-3
    assert np.all(M.margin(0.5 * (P[i] + P[j])[keep]) > 0)


def test_pal_chords(M, frame, rng):
    D = rng.normal(size=(200, 4))
    P = ray_boundary(M, frame["G"], D / np.linalg.norm(D, axis=1, keepdims=True))
    Q, d, _ = M.farthest(P)
    assert np.all(d >= 1 - 1e-6)
    assert np.all(M.margin(Q) >= -1e-12)


def test_diameter_of_generators(M):
    res = diameter_of_generators(M, n_starts=200, seed=3)
    assert abs(res.dist - 1) <= 1e-9
    assert res.exact_inner_max <= 1 + 1e-9
    assert {"vertex-arc", "orthogonal-arcs", "vertex-interior"} <= set(res.families)
    assert abs(np.linalg.norm(res.P - res.Q) - res.dist) <= 1e-12


def test_classify_known_pairs(gens, frame):
    arc = gens.arc("F_BE")
    r = arc.point(0.5 * (arc.t0 + arc.t1))
    assert "vertex-arc" in classify_pair(gens, frame["A"], r)
    s = gens.arc("S_AB").point(0.3)
    t = gens.arc("S_CD").point(1.1)
    assert "orthogonal-arcs" in classify_pair(gens, s, t)


def test_ball_body_margin():
    ball = build_ball(3)
    assert abs(ball.margin(np.zeros(3))[0] - 0.5) < 1e-15
    assert math.isclose(ball.margin(np.array([0.5, 0, 0]))[0], 0.0, abs_tol=1e-15)
