"""Bodies defined as intersections of unit balls centred on generator pieces.

Membership is exact: each piece reports its farthest point from a query in
closed form (or by a certified 1-D solve for elliptical arcs), so the margin
``radius - max_g |x - g|`` carries no discretisation error.

Support values are computed by an exchange method.  A finite relaxation with
balls around a working set of generator points is solved with SLSQP, the
farthest generator from the relaxed optimum is added, and the loop stops once
the relaxed optimum is feasible to within tolerance.  Each relaxation bounds
the true optimum from above; shrinking the relaxed point towards the interior
witness gives a feasible point and hence a lower bound.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from .frame import GeometryError, SimplexFrame, build_frame
from .patches import (
    ArcSegment,
    GeneratorSet,
    PointPiece,
    SphericalPatch,
    _rows,
    arc_between,
    build_generator_set,
    full_sphere,
)
from .streams import stream


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class BallBody:
    pieces: tuple
    dim: int
    witness: np.ndarray
    radius: float = 1.0
    label: str = ""
    generators: GeneratorSet | None = field(default=None, repr=False)

    def farthest(self, x):
        """Farthest generator point from each row of ``x``.

        Returns ``(points, distances, piece_index)``."""
        x = _rows(x)
        best_q = best_d = best_i = None
        for i, piece in enumerate(self.pieces):
            q, d = piece.farthest(x)
            if best_q is None:
                best_q, best_d = q, d
                best_i = np.zeros(len(x), int)
            else:
                better = d > best_d
                best_q[better] = q[better]
                best_d = np.where(better, d, best_d)
                best_i[better] = i
        return best_q, best_d, best_i

    def margin(self, x) -> np.ndarray:
        """Signed margin ``radius - max_g |x - g|`` (positive inside)."""
        return self.radius - self.farthest(x)[1]

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        return self.margin(x) >= -tol

    def extreme(self, w):
        """Generator point maximising ``g . w`` and the maximum value."""
        w = _rows(w)
        best_q = best_v = None
        for piece in self.pieces:
            q, _ = piece.extreme(w)
            v = np.einsum("ij,ij->i", q, w)
            if best_q is None:
                best_q, best_v = q, v
            else:
                better = v > best_v
                best_q[better] = q[better]
                best_v = np.where(better, v, best_v)
        return best_q, best_v

    def with_pieces(self, extra, label: str | None = None) -> "BallBody":
        return BallBody(
            tuple(self.pieces) + tuple(extra),
            self.dim,
            self.witness,
            self.radius,
            label or self.label,
            self.generators,
        )

    def transformed(self, x, sigma) -> np.ndarray:
        return _rows(x) @ np.asarray(sigma).T


# ---------------------------------------------------------------------------
# constructors


def build_M(frame: SimplexFrame | None = None) -> BallBody:
    frame = frame or build_frame()
    gs = build_generator_set(frame)
    return BallBody(tuple(gs.patches), 4, frame["G"].copy(), 1.0, "M", gs)


def build_reuleaux(frame: SimplexFrame | None = None) -> BallBody:
    frame = frame or build_frame()
    pts = tuple(PointPiece(frame[k], k) for k in ("A", "B", "C", "D", "E"))
    return BallBody(pts, 4, frame["G"].copy(), 1.0, "reuleaux4")


def regular_tetrahedron() -> np.ndarray:
    """Unit-edge regular tetrahedron centred at the origin."""
    s = 1.0 / (2.0 * math.sqrt(2.0))
    return s * np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], float)


def reuleaux_edge(tet: np.ndarray, i: int, j: int, label: str = "") -> ArcSegment:
    k, l = [m for m in range(4) if m not in (i, j)]
    return arc_between((tet[k] + tet[l]) / 2.0, tet[i], tet[j], label)


def build_meissner2_3d(tet: np.ndarray | None = None, apex: int = 0) -> BallBody:
    """Intersection of unit balls centred on the three Reuleaux-tetrahedron
    edges meeting at ``apex``."""
    tet = regular_tetrahedron() if tet is None else np.asarray(tet, float)
    edges = np.linalg.norm(tet[:, None] - tet[None], axis=2)[np.triu_indices(4, 1)]
    if np.max(np.abs(edges - 1.0)) > 1e-9:
        raise GeometryError("meissner construction needs a unit regular tetrahedron")
    arcs = tuple(reuleaux_edge(tet, apex, j, f"edge_{apex}{j}") for j in range(4) if j != apex)
    return BallBody(arcs, 3, tet.mean(axis=0), 1.0, "meissner2")


def build_ball(dim: int = 3, width: float = 1.0) -> BallBody:
    """Ball of diameter ``width`` about the origin as a unit-ball intersection."""
    sphere = full_sphere(np.zeros(dim), 1.0 - width / 2.0, "sphere")
    return BallBody((sphere,), dim, np.zeros(dim), 1.0, f"ball{dim}")


# ---------------------------------------------------------------------------
# convex programs over the body


@dataclass
class SupportResult:
    direction: np.ndarray
    value: float
    argmax: np.ndarray
    precision: float
    upper: float = math.nan
    iterations: int = 0
    converged: bool = True


def _shrink(body: BallBody, x: np.ndarray, rho: float) -> np.ndarray:
    """Feasible point on the segment from the witness to ``x``.

    If ``B(w, rho)`` lies in the body and ``x`` violates every ball by at most
    ``delta``, then ``w + rho/(rho+delta) (x - w)`` is inside."""
    delta = max(0.0, -float(body.margin(x)[0]))
    if delta == 0.0:
        return x
    lam = rho / (rho + delta)
    return body.witness + lam * (x - body.witness)


def _solve_relaxation(z0, c, centers, radius, planes, depth, d):
    """SLSQP on ``max c.z`` subject to the finite ball and plane system."""
    centers = np.asarray(centers)

    def balls(z):
        x = z[:d]
        r = radius - (z[d] if depth else 0.0)
        return r * r - np.sum((x - centers) ** 2, axis=1)

    def balls_jac(z):
        x = z[:d]
        jac = np.zeros((len(centers), len(z)))
        jac[:, :d] = -2.0 * (x - centers)
        if depth:
            jac[:, d] = -2.0 * (radius - z[d])
        return jac

    cons = [{"type": "ineq", "fun": balls, "jac": balls_jac}]
    if depth:
        cons.append({
            "type": "ineq",
            "fun": lambda z: np.array([radius - z[d]]),
            "jac": lambda z: -np.eye(len(z))[d:d + 1],
        })
    if planes:
        normals = np.array([p.normal for p in planes])
        offsets = np.array([p.offset for p in planes])
        lin = np.zeros((len(planes), len(z0)))
        lin[:, :d] = normals
        if depth:
            lin[:, d] = -1.0

        cons.append({
            "type": "ineq",
            "fun": lambda z: lin @ z - offsets,
            "jac": lambda z: lin,
        })
    res = minimize(
        lambda z: -c @ z,
        z0,
        jac=lambda z: -c,
        constraints=cons,
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 500},
    )
    return res.x


def maximize_over_body(
    body: BallBody,
    c,
    planes=(),
    depth: bool = False,
    x0=None,
    seeds=(),
    tol: float = 1e-10,
    max_iter: int = 400,
):
    """Exchange method for ``max c . z`` over the body (and plane system).

    With ``depth=True`` the variable is ``z = (x, s)`` and the program is the
    deepest-point problem: every ball shrinks by ``s`` and every plane is
    offset by ``s``.  Returns ``(z, upper, iterations, violation)`` where
    ``upper`` is the optimum of the last relaxation."""
    d = body.dim
    c = np.asarray(c, dtype=float)
    x = body.witness.copy() if x0 is None else np.asarray(x0, float).copy()
    centers = [np.asarray(s, float) for s in seeds]
    q, _, _ = body.farthest(x)
    centers.append(q[0])
    z = np.append(x, 0.0) if depth else x
    violation = math.inf
    it = 0
    for it in range(1, max_iter + 1):
        z = _solve_relaxation(z, c, centers, body.radius, list(planes), depth, d)
        x = z[:d]
        s = z[d] if depth else 0.0
        cand = np.concatenate([p.farthest(x[None, :])[0] for p in body.pieces])
        dist = np.linalg.norm(cand - x, axis=1)
        excess = dist - (body.radius - s)
        violation = float(max(0.0, excess.max()))
        if violation <= tol:
            break
        known = np.asarray(centers)
        added = 0
        for k in np.flatnonzero(excess > tol):
            if np.min(np.linalg.norm(known - cand[k], axis=1)) > 1e-13:
                centers.append(cand[k])
                added += 1
        if not added:
            # the relaxation already holds every violated centre: SLSQP has
            # reached its own accuracy and further rounds cannot improve it
            break
    return z, float(c @ z), it, violation


def support_upper_bound(body: BallBody, u) -> float:
    """``min_g g.u + radius``: each generator ball bounds the support."""
    _, v = body.extreme(-np.asarray(u, float))
    return float(-v[0] + body.radius)


def support(body: BallBody, u, tol: float = 1e-9, max_iter: int = 10_000) -> SupportResult:
    """Support value ``h(u) = max_{x in body} u.x``."""
    u = np.asarray(u, dtype=float)
    if abs(np.linalg.norm(u) - 1.0) > 1e-9:
        raise GeometryError("support direction must be a unit vector")
    g, v = body.extreme(-u)
    upper = float(-v[0] + body.radius)
    x0 = g[0] + body.radius * u
    m0 = float(body.margin(x0)[0])
    if m0 >= -tol:
        # smooth support point: the generator bound is attained
        return SupportResult(u, upper, x0, max(0.0, -m0), upper, 0, True)
    rho = float(body.margin(body.witness)[0])
    top, _ = body.extreme(u)
    seeds = [g[0]] + [q for q in body.farthest(top)[0]]
    z, relaxed, it, viol = maximize_over_body(
        body, u, x0=top[0], seeds=seeds, tol=tol, max_iter=min(max_iter, 400)
    )
    y = _shrink(body, z, rho)
    lower = float(u @ y)
    # the generator point maximising u is feasible whenever it lies in the body
    if float(body.margin(top)[0]) >= 0.0 and float(u @ top[0]) > lower:
        y, lower = top[0], float(u @ top[0])
    hi = min(relaxed, upper)
    return SupportResult(u, lower, y, max(0.0, hi - lower), hi, it, viol <= tol)


def support_many(body: BallBody, U, tol: float = 1e-9) -> list[SupportResult]:
    """Support values for a batch of unit directions.

    The generator-bound fast path is evaluated for the whole batch at once;
    only directions where it fails go through the exchange solver."""
    U = _rows(U)
    g, v = body.extreme(-U)
    x0 = g + body.radius * U
    m0 = body.margin(x0)
    out = []
    for i, u in enumerate(U):
        if m0[i] >= -tol:
            upper = float(-v[i] + body.radius)
            out.append(SupportResult(u, upper, x0[i], max(0.0, -float(m0[i])), upper, 0, True))
        else:
            out.append(support(body, u, tol))
    return out


def width(body: BallBody, u, tol: float = 1e-9) -> float:
    u = np.asarray(u, float)
    return support(body, u, tol).value + support(body, -u, tol).value


def ray_boundary(body: BallBody, origin, directions, tol: float = 1e-13) -> np.ndarray:
    """Boundary points along rays from an interior point (bisection)."""
    origin = np.asarray(origin, dtype=float)
    dirs = _rows(directions)
    dirs = dirs / np.linalg.norm(dirs, axis=1, keepdims=True)
    if float(body.margin(origin)[0]) <= 0.0:
        raise GeometryError("ray origin must be strictly interior")
    lo = np.zeros(len(dirs))
    hi = np.full(len(dirs), 2.0 * body.radius + 1.0)
    while (hi - lo).max() > tol:
        mid = 0.5 * (lo + hi)
        inside = body.margin(origin + mid[:, None] * dirs) >= 0.0
        lo = np.where(inside, mid, lo)
        hi = np.where(inside, hi, mid)
    return origin + lo[:, None] * dirs


# ---------------------------------------------------------------------------
# diameter of the generating set


@dataclass
class DiameterResult:
    dist: float
    P: np.ndarray
    Q: np.ndarray
    families: list
    pairs: list = field(default_factory=list)
    starts: int = 0
    exact_inner_max: float = math.nan


def _locate(gs: GeneratorSet, p, tol: float = 1e-6):
    for k, v in gs.vertices.items():
        if np.linalg.norm(p - v) <= tol:
            return ("vertex", k)
    for arc in gs.arcs:
        if arc.nearest(p)[1][0] <= tol:
            return ("arc", arc.label)
    for patch in gs.patches:
        if patch.nearest(p)[1][0] <= tol:
            return ("interior", patch.label)
    return ("none", "")


def classify_pair(gs: GeneratorSet, p, q, tol: float = 1e-6) -> list:
    """Maximiser families matched by the pair (all that apply)."""
    lp, lq = _locate(gs, p, tol), _locate(gs, q, tol)
    kinds = {lp[0], lq[0]}
    fams = []
    if "vertex" in kinds:
        other = lq if lp[0] == "vertex" else lp
        if other[0] in ("arc", "vertex"):
            fams.append("vertex-arc")
        if other[0] == "interior":
            fams.append("vertex-interior")
    if lp[0] == "arc" and lq[0] == "arc" and lp[1][0] == lq[1][0] == "S":
        if not set(lp[1][2:]) & set(lq[1][2:]):
            fams.append("orthogonal-arcs")
    # arc points sitting at vertices are also arc points
    for a, b in ((p, q), (q, p)):
        la = _locate(gs, a, tol)
        if la[0] == "vertex":
            for arc in gs.arcs:
                if arc.nearest(b)[1][0] <= tol and "vertex-arc" not in fams:
                    fams.append("vertex-arc")
    return fams or ["other"]


def _random_on(piece, rng, n):
    if isinstance(piece, SphericalPatch):
        w = rng.random((n, 3))
        w = w / w.sum(axis=1, keepdims=True)
        x = w @ piece.cone
        return piece.nearest(x)[0]
    if isinstance(piece, ArcSegment):
        return piece.point(rng.uniform(piece.t0, piece.t1, n))
    return np.broadcast_to(piece.point, (n, piece.dim)).copy()


def _family_seeds(gs: GeneratorSet, rng, n):
    """Starts placed on the known maximiser families."""
    pairs = []
    f_ab = gs.patch("A", "B")
    f_cd = gs.patch("C", "D")
    a = gs.vertices["A"]
    arc_be = gs.arc("F_BE")
    s_ab, s_cd = gs.arc("S_AB"), gs.arc("S_CD")
    pairs.append((f_ab, f_ab, np.tile(a, (n, 1)), arc_be.point(rng.uniform(arc_be.t0, arc_be.t1, n))))
    pairs.append((f_ab, f_cd, s_ab.point(rng.uniform(0, math.pi / 2, n)), s_cd.point(rng.uniform(0, math.pi / 2, n))))
    pairs.append((f_ab, f_cd, np.tile(a, (n, 1)), _random_on(f_cd, rng, n)))
    return pairs


def _ascend(pi, pj, P, Q, iters: int, step: float = 0.5):
    d = np.linalg.norm(P - Q, axis=1)
    for _ in range(iters):
        P1 = pi.nearest(P + step * (P - Q))[0]
        Q1 = pj.nearest(Q + step * (Q - P1))[0]
        d1 = np.linalg.norm(P1 - Q1, axis=1)
        better = d1 >= d
        P[better], Q[better] = P1[better], Q1[better]
        d = np.where(better, d1, d)
    return P, Q, d


def diameter_of_generators(
    body: BallBody, n_starts: int = 1000, seed: int = 0, iters: int = 200, band: float = 1e-6
) -> DiameterResult:
    """Multistart projected-gradient ascent of ``|P - Q|`` over pairs of
    generator pieces, with extra starts on the known maximiser families."""
    gs = body.generators
    pieces = list(body.pieces)
    pair_idx = list(itertools.combinations_with_replacement(range(len(pieces)), 2))
    per = max(1, int(math.ceil(n_starts / len(pair_idx))))
    rng = stream(seed, "diameter")
    runs = []
    for i, j in pair_idx:
        P = _random_on(pieces[i], rng, per)
        Q = _random_on(pieces[j], rng, per)
        runs.append((pieces[i], pieces[j], P, Q))
    if gs is not None:
        runs.extend(_family_seeds(gs, rng, max(8, per)))
    all_p, all_q, all_d = [], [], []
    starts = 0
    for pi, pj, P, Q in runs:
        P, Q, d = _ascend(pi, pj, P.copy(), Q.copy(), iters)
        all_p.append(P)
        all_q.append(Q)
        all_d.append(d)
        starts += len(P)
    P = np.concatenate(all_p)
    Q = np.concatenate(all_q)
    d = np.concatenate(all_d)
    k = int(np.argmax(d))
    best = float(d[k])
    near = np.flatnonzero(d >= best - band)
    fams = set()
    pairs = []
    if gs is not None:
        # classify a bounded, deterministic subset of near-maximal pairs
        for idx in near[:: max(1, len(near) // 300)]:
            f = classify_pair(gs, P[idx], Q[idx], band)
            fams.update(f)
            pairs.append((P[idx], Q[idx], float(d[idx]), f))
    # independent check: exact inner maximum over a sampled outer point set
    outer = np.concatenate([p.sample(0.05)[0] if hasattr(p, "sample") else p.vertices for p in pieces])
    _, inner, _ = body.farthest(outer)
    return DiameterResult(best, P[k], Q[k], sorted(fams), pairs, starts, float(inner.max()))
