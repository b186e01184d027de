"""Numerical re-verification of the uniqueness case analysis on the boundary of M.

Each generator class induces a polyhedral region that must contain any
boundary point at unit distance from a generator of that class.  For a pair of
classes the two regions are intersected and checked against M:

1. linear feasibility of the region inside the bounding box of the Reuleaux
   simplex;
2. the deepest point of region ∩ M (maximise ``s`` with every plane offset by
   ``s`` and every ball shrunk by ``s``).  A negative optimum certifies that
   the region misses M;
3. if the optimum is zero the intersection is thin, and its extreme points in
   many directions are compared with the generating set;
4. otherwise region ∩ M has interior: it is rejection-sampled and its boundary
   points are located by ray casting from the deepest point.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import linprog, minimize

from .ballbody import BallBody, build_M, build_reuleaux, maximize_over_body, ray_boundary, support, support_many
from .frame import (
    BASE_LABELS,
    GeometryError,
    SimplexFrame,
    build_frame,
    halfspace_avoiding,
    hyperplane_through,
    perpendicular_bisector,
)
from .patches import GeneratorSet, PointPiece, _rows, build_generator_set
from .streams import stream, unit_vectors

PASS, FAIL, INCONCLUSIVE = "PASS", "FAIL", "INCONCLUSIVE"

CONFIGURATIONS = {
    "1a": ("A", "S_BC"),
    "1b": ("A", "F_BC"),
    "2a": ("F_AE", "S_BC"),
    "2b": ("F_AE", "F_BC"),
    "3a": ("S_AB", "S_BC"),
    "3b": ("S_AB", "S_CD"),
    "3c": ("S_AB", "F_BC"),
    "3d": ("S_AB", "F_CD"),
    "4a": ("F_AB", "F_BC"),
    "4b": ("F_AB", "F_CD"),
}

DEPTH_TOL = 1e-9


@dataclass(frozen=True)
class GeneratorClass:
    kind: str  # vertex | apex_arc | base_arc | patch
    labels: tuple

    @property
    def name(self) -> str:
        if self.kind == "vertex":
            return self.labels[0]
        if self.kind == "apex_arc":
            return f"F_{self.labels[0]}E"
        prefix = "S" if self.kind == "base_arc" else "F"
        return f"{prefix}_{''.join(self.labels)}"


def parse_class(label: str) -> GeneratorClass:
    """``"A"`` vertex, ``"F_AE"`` apex arc, ``"S_AB"`` base arc, ``"F_AB"`` patch."""
    if label in BASE_LABELS:
        return GeneratorClass("vertex", (label,))
    if len(label) == 4 and label[1] == "_":
        x, y = label[2], label[3]
        if label[0] == "F" and y == "E" and x in BASE_LABELS:
            return GeneratorClass("apex_arc", (x,))
        if x in BASE_LABELS and y in BASE_LABELS and x != y and label[0] in "SF":
            kind = "base_arc" if label[0] == "S" else "patch"
            return GeneratorClass(kind, tuple(sorted((x, y))))
    raise GeometryError(f"invalid generator class {label!r}")


@dataclass
class PolyRegion:
    halfspaces: list
    provenance: str = ""

    def slack(self, x) -> np.ndarray:
        """Minimum signed distance over the half-spaces (positive inside)."""
        x = _rows(x)
        if not self.halfspaces:
            return np.full(len(x), np.inf)
        return np.min([h.signed(x) for h in self.halfspaces], axis=0)

    def contains(self, x, tol: float = 0.0) -> np.ndarray:
        return self.slack(x) >= -tol

    def as_inequalities(self) -> tuple[np.ndarray, np.ndarray]:
        """``(A_ub, b_ub)`` with ``A_ub x <= b_ub``."""
        normals = np.array([h.normal for h in self.halfspaces])
        offsets = np.array([h.offset for h in self.halfspaces])
        return -normals, -offsets

    def without(self, index: int) -> "PolyRegion":
        hs = [h for i, h in enumerate(self.halfspaces) if i != index]
        return PolyRegion(hs, f"{self.provenance} minus #{index}")


def _others(frame: SimplexFrame, x: str) -> list[str]:
    return [k for k in BASE_LABELS if k != x]


def region_for_generator(label: str, frame: SimplexFrame | None = None) -> PolyRegion:
    frame = frame or build_frame()
    cls = parse_class(label)
    P = frame.point
    if cls.kind == "vertex":
        (x,) = cls.labels
        apex_pts = _others(frame, x) + ["E"]
        hs = []
        # simplicial cone at G: one facet per omitted generator
        for k in apex_pts:
            rest = [P(j) for j in apex_pts if j != k]
            hs.append(hyperplane_through([P("G")] + rest, P(k), f"cone {x}/{k}"))
        hs.append(halfspace_avoiding([P(j) for j in apex_pts], P(x), f"{''.join(apex_pts)} !{x}"))
        return PolyRegion(hs, cls.name)
    if cls.kind == "apex_arc":
        (x,) = cls.labels
        rest = _others(frame, x)
        return PolyRegion([
            halfspace_avoiding([P(k) for k in BASE_LABELS], P("E"), "ABCD !E"),
            halfspace_avoiding([P(k) for k in rest + ["E"]], P(x), f"{''.join(rest)}E !{x}"),
        ], cls.name)
    x, y = cls.labels
    z, w = [k for k in BASE_LABELS if k not in (x, y)]
    if cls.kind == "base_arc":
        return PolyRegion([
            halfspace_avoiding([P(x), P(z), P(w), P("O")], P(y), f"{x}{z}{w}O !{y}"),
            halfspace_avoiding([P(y), P(z), P(w), P("O")], P(x), f"{y}{z}{w}O !{x}"),
        ], cls.name)
    return PolyRegion([
        halfspace_avoiding([P(k) for k in BASE_LABELS], P("E"), "ABCD !E"),
        halfspace_avoiding([P(x), P(z), P(w), P("E")], P(y), f"{x}{z}{w}E !{y}"),
        halfspace_avoiding([P(y), P(z), P(w), P("E")], P(x), f"{y}{z}{w}E !{x}"),
    ], cls.name)


def config_region(q: str, r: str, frame: SimplexFrame | None = None) -> PolyRegion:
    """Conjunction of the two class regions with duplicate half-spaces removed."""
    if (q, r) not in CONFIGURATIONS.values():
        raise GeometryError(f"({q}, {r}) is not one of the representative configurations")
    seen, hs = set(), []
    for h in region_for_generator(q, frame).halfspaces + region_for_generator(r, frame).halfspaces:
        key = h.key()
        if key not in seen:
            seen.add(key)
            hs.append(h)
    return PolyRegion(hs, f"{q} & {r}")


def generator_piece(label: str, gs: GeneratorSet):
    cls = parse_class(label)
    if cls.kind == "vertex":
        return PointPiece(gs.vertices[cls.labels[0]], cls.name)
    if cls.kind == "patch":
        return gs.patch(*cls.labels)
    return gs.arc(cls.name)


# ---------------------------------------------------------------------------
# verification


@dataclass
class CaseReport:
    config: str
    q: str
    r: str
    n_halfspaces: int
    lp_feasible: bool
    depth_upper: float
    depth_lower: float
    nonempty: bool
    method: str
    samples: int = 0
    hits: int = 0
    boundary_points: int = 0
    max_distance_to_M0: float = 0.0
    witness: list | None = None
    refined_violations: int = 0
    verdict: str = INCONCLUSIVE
    note: str = ""

    def to_json(self) -> dict:
        return asdict(self)


def reuleaux_box(frame: SimplexFrame) -> tuple[np.ndarray, np.ndarray]:
    R = build_reuleaux(frame)
    eye = np.eye(4)
    hi = np.array([s.value for s in support_many(R, eye)])
    lo = -np.array([s.value for s in support_many(R, -eye)])
    return lo, hi


def lp_feasible(region: PolyRegion, lo, hi) -> bool:
    A, b = region.as_inequalities()
    res = linprog(np.zeros(len(lo)), A_ub=A, b_ub=b, bounds=list(zip(lo, hi)), method="highs")
    return res.status == 0


def lp_box(region: PolyRegion, lo, hi) -> tuple[np.ndarray, np.ndarray]:
    """Bounding box of the region clipped to ``[lo, hi]``."""
    A, b = region.as_inequalities()
    out_lo, out_hi = np.array(lo, float), np.array(hi, float)
    for i in range(len(lo)):
        c = np.eye(len(lo))[i]
        for sign in (1.0, -1.0):
            res = linprog(sign * c, A_ub=A, b_ub=b, bounds=list(zip(lo, hi)), method="highs")
            if res.status == 0:
                if sign > 0:
                    out_lo[i] = res.x[i]
                else:
                    out_hi[i] = res.x[i]
    return out_lo, out_hi


def region_depth(M: BallBody, region: PolyRegion, x0=None):
    """Deepest point of region ∩ M.

    Returns ``(x, upper, lower)``: ``upper`` is the optimum of the final
    relaxation and ``lower`` the exact depth ``min(margin, slack)`` at ``x``."""
    c = np.zeros(M.dim + 1)
    c[-1] = 1.0
    z, upper, _, _ = maximize_over_body(M, c, planes=region.halfspaces, depth=True, x0=x0, tol=1e-12)
    x = z[:-1]
    lower = float(min(M.margin(x)[0], region.slack(x)[0]))
    return x, float(upper), lower


def extreme_points(M: BallBody, region: PolyRegion, directions, x0) -> np.ndarray:
    """Maximisers of ``c . x`` over region ∩ M for each direction."""
    pts = []
    for c in directions:
        z, _, _, _ = maximize_over_body(M, c, planes=region.halfspaces, x0=x0, tol=1e-12)
        pts.append(z)
    return np.array(pts)


def _refined_count(P, pieces, dist_m0, tol_m0: float, unit_tol: float = 1e-7) -> int:
    """Boundary points off M0 at unit distance from both generator pieces."""
    if not len(P):
        return 0
    off = dist_m0 > tol_m0
    both = np.ones(len(P), bool)
    for piece in pieces:
        both &= piece.farthest(P)[1] >= 1.0 - unit_tol
    return int((off & both).sum())


def verify_configuration(
    cfg: str,
    budget: int = 100_000,
    seed: int = 0,
    tol: float = 1e-6,
    band: float = 1e-8,
    frame: SimplexFrame | None = None,
    region: PolyRegion | None = None,
) -> CaseReport:
    frame = frame or build_frame()
    if cfg not in CONFIGURATIONS:
        raise GeometryError(f"unknown configuration {cfg!r}")
    q, r = CONFIGURATIONS[cfg]
    region = region or config_region(q, r, frame)
    M = build_M(frame)
    gs = M.generators
    pieces = [generator_piece(q, gs), generator_piece(r, gs)]
    lo, hi = reuleaux_box(frame)
    report = CaseReport(cfg, q, r, len(region.halfspaces), True, math.nan, math.nan, False, "")

    if not lp_feasible(region, lo, hi):
        report.lp_feasible = False
        report.method = "lp-infeasible"
        report.verdict = PASS
        return report
    if budget <= 0:
        report.method = "no-budget"
        report.note = "zero sampling budget"
        return report

    x_deep, upper, lower = region_depth(M, region, x0=M.witness)
    report.depth_upper, report.depth_lower = upper, lower
    if upper < -DEPTH_TOL:
        report.method = "depth-certificate"
        report.verdict = PASS
        return report

    report.nonempty = True
    if lower <= DEPTH_TOL:
        # thin intersection: compare its extreme points with M0
        dirs = np.vstack([np.eye(4), -np.eye(4), unit_vectors(seed, 16, 4, f"case-{cfg}")])
        pts = extreme_points(M, region, dirs, x_deep)
        pts = np.vstack([pts, x_deep])
        dist = gs.distance(pts)
        k = int(np.argmax(dist))
        report.method = "extreme-points"
        report.samples = len(pts)
        report.boundary_points = len(pts)
        report.max_distance_to_M0 = float(dist[k])
        report.witness = pts[k].tolist()
        report.refined_violations = _refined_count(pts, pieces, dist, tol)
        report.verdict = PASS if dist[k] <= tol else FAIL
        return report

    # region ∩ M has interior
    # sampling box: coordinate extremes of region ∩ M itself
    axes = extreme_points(M, region, np.vstack([np.eye(4), -np.eye(4)]), x_deep)
    blo = np.maximum(np.diag(axes[4:]) - 1e-9, lo)
    bhi = np.minimum(np.diag(axes[:4]) + 1e-9, hi)
    rng = stream(seed, f"case-{cfg}")
    x = blo + rng.random((budget, 4)) * (bhi - blo)
    x = x[region.contains(x)]
    x = x[M.margin(x) >= 0.0] if len(x) else x
    report.method = "sampling"
    report.samples = budget
    report.hits = int(len(x))
    if not len(x):
        report.note = "deep point exists but no samples hit"
        return report
    # boundary points of M inside the region: rays from the deep point towards
    # the hits, plus extreme points of region ∩ M (the intersection can be a
    # sliver that rays leave through a region facet)
    dirs = x - x_deep
    keep = np.linalg.norm(dirs, axis=1) > 1e-12
    dirs = dirs[keep] / np.linalg.norm(dirs[keep], axis=1, keepdims=True)
    bpts = ray_boundary(M, x_deep, dirs)
    n_ext = int(min(256, max(16, budget // 400)))
    ext = extreme_points(M, region, unit_vectors(seed, n_ext, 4, f"case-{cfg}"), x_deep)
    ext = ext[np.abs(M.margin(ext)) <= band]
    bpts = np.vstack([bpts[region.contains(bpts, band)], ext[region.contains(ext, band)]])
    report.boundary_points = int(len(bpts))
    if not len(bpts):
        report.verdict = PASS
        report.note = "no boundary point of M inside the region"
        return report
    dist = gs.distance(bpts)
    k = int(np.argmax(dist))
    report.max_distance_to_M0 = float(dist[k])
    report.witness = bpts[k].tolist()
    report.refined_violations = _refined_count(bpts, pieces, dist, tol)
    report.verdict = PASS if dist[k] <= tol else FAIL
    return report


def negative_control_region(frame: SimplexFrame | None = None) -> PolyRegion:
    """The 4b region without the two half-spaces contributed by the sides of
    F_AB.  Removing a single half-space still leaves a region that meets M only
    at a base vertex, so two are dropped."""
    region = config_region("F_AB", "F_CD", frame)
    hs = [h for h in region.halfspaces if h.label not in ("ACDE !B", "BCDE !A")]
    return PolyRegion(hs, "4b without the F_AB side planes")


def verify_all(budget: int = 100_000, seed: int = 0, frame: SimplexFrame | None = None) -> list[CaseReport]:
    return [verify_configuration(cfg, budget, seed, frame=frame) for cfg in CONFIGURATIONS]


# ---------------------------------------------------------------------------
# equidistant-vertex cases


def fibonacci_sphere(n: int) -> np.ndarray:
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    rho = np.sqrt(1.0 - z * z)
    ang = math.pi * (1.0 + math.sqrt(5.0)) * i
    return np.column_stack([rho * np.cos(ang), rho * np.sin(ang), z])


def bisector_case_check(pair: tuple[str, str], n: int = 20_000, tol: float = 1e-6, refine: int = 8,
                        frame: SimplexFrame | None = None) -> dict:
    """Points of M at unit distance from both vertices of ``pair``.

    They lie on the 2-sphere cut from S(x, 1) by the bisector of the pair.
    The margin of M is sampled on that sphere and its local maxima refined;
    every point with non-negative margin (up to roundoff) must be near the
    expected set: the other base vertices for (A, E), the patch F_CD for (A, B)."""
    frame = frame or build_frame()
    a, b = pair
    if set(pair) not in ({"A", "E"}, {"A", "B"}):
        raise GeometryError(f"unsupported pair {pair}")
    M = build_M(frame)
    gs = M.generators
    plane = perpendicular_bisector(frame[a], frame[b])
    center = frame.mid(a, b)
    radius = math.sqrt(1.0 - 0.25)
    basis = np.linalg.svd(np.vstack([plane.normal, np.zeros((3, 4))]))[2][1:]
    sphere = lambda u: center + radius * (u @ basis)

    if set(pair) == {"A", "E"}:
        targets = np.stack([frame[k] for k in ("B", "C", "D")])
        dist_to_target = lambda p: np.min(np.linalg.norm(p[:, None] - targets[None], axis=2), axis=1)
        expected = "vertices B, C, D"
    else:
        patch = gs.patch("C", "D")
        dist_to_target = lambda p: patch.nearest(p)[1]
        expected = "patch F_CD"

    u = fibonacci_sphere(n)
    pts = sphere(u)
    margin = M.margin(pts)
    roundoff = 1e-13
    # local refinement of the margin on the sphere from the best samples
    refined = []
    for idx in np.argsort(-margin)[:refine]:
        def neg(z):
            v = z / max(np.linalg.norm(z), 1e-300)
            return -float(M.margin(sphere(v[None, :]))[0])

        res = minimize(neg, u[idx], method="Nelder-Mead",
                       options={"xatol": 1e-11, "fatol": 1e-16, "maxiter": 600})
        v = res.x / np.linalg.norm(res.x)
        refined.append(sphere(v[None, :])[0])
    refined = np.array(refined)
    cand = np.vstack([pts[margin >= -roundoff], refined[M.margin(refined) >= -roundoff]]) \
        if len(refined) else pts[margin >= -roundoff]
    dist = dist_to_target(cand) if len(cand) else np.zeros(0)
    # ball around the midpoint of the apex or base arc of the first vertex
    if set(pair) == {"A", "E"}:
        arc = gs.arc("F_AE")
    else:
        arc = gs.arc("S_AB")
    mid = arc.point(0.5 * (arc.t0 + arc.t1))
    mid_dists = np.linalg.norm(targets - mid, axis=1) if set(pair) == {"A", "E"} else \
        np.linalg.norm(np.stack([frame["C"], frame["D"]]) - mid, axis=1)
    worst = float(dist.max()) if len(dist) else 0.0
    return {
        "pair": list(pair),
        "expected": expected,
        "samples": n,
        "solutions": int(len(cand)),
        "max_distance_to_expected": worst,
        "midpoint_ball_distances": mid_dists.tolist(),
        "verdict": PASS if worst <= tol and len(cand) > 0 else FAIL,
    }


# ---------------------------------------------------------------------------
# smoothness scan


def _clusters(points: np.ndarray, tol: float) -> int:
    reps: list[np.ndarray] = []
    for p in points:
        if not any(np.linalg.norm(p - r) <= tol for r in reps):
            reps.append(p)
    return len(reps)


def uniqueness_scan(body: BallBody | None = None, n: int = 500, seed: int = 0,
                    skip: float = 0.01, unit_tol: float = 1e-9, cluster_tol: float = 1e-6,
                    frame: SimplexFrame | None = None) -> dict:
    """Count unit-distance generator clusters at boundary samples off M0."""
    body = body or build_M(frame)
    gs = body.generators
    dirs = unit_vectors(seed, n, body.dim, "uniqueness")
    P = ray_boundary(body, body.witness, dirs)
    d0 = gs.distance(P)
    scan = np.flatnonzero(d0 > skip)
    failures, alignment, endpoint = [], [], []
    for i in scan:
        p = P[i]
        cands = np.concatenate([piece.farthest_candidates(p[None, :])[0] for piece in body.pieces])
        cands = cands[~np.isnan(cands).any(axis=1)]
        near = cands[np.linalg.norm(cands - p, axis=1) >= 1.0 - unit_tol]
        k = _clusters(near, cluster_tol)
        if k != 1:
            failures.append({"point": p.tolist(), "clusters": k, "witnesses": near.tolist()})
            continue
        qpt = near[0]
        normal = (p - qpt) / np.linalg.norm(p - qpt)
        h = support(body, normal)
        alignment.append(abs(h.value - float(normal @ p)))
        endpoint.append(max(abs(np.linalg.norm(p - qpt) - 1.0), float(gs.distance(qpt)[0])))
    return {
        "samples": n,
        "scanned": int(len(scan)),
        "skipped": int(n - len(scan)),
        "failures": failures,
        "max_alignment_error": float(max(alignment, default=0.0)),
        "max_endpoint_error": float(max(endpoint, default=0.0)),
        "verdict": PASS if not failures and max(endpoint, default=0.0) <= 1e-6 else FAIL,
    }


def collinearity_check(n: int = 200, seed: int = 0, frame: SimplexFrame | None = None) -> dict:
    """Farthest points of F_AB from interior points of F_CD are A or B at distance 1."""
    frame = frame or build_frame()
    gs = build_generator_set(frame)
    src, dst = gs.patch("C", "D"), gs.patch("A", "B")
    rng = stream(seed, "collinearity")
    w = rng.random((n, 3)) + 1e-3
    Q = src.nearest(w @ src.cone)[0]
    P, d = dst.farthest(Q)
    ends = np.stack([frame["A"], frame["B"]])
    near_end = np.min(np.linalg.norm(P[:, None] - ends[None], axis=2), axis=1)
    return {"max_end_distance": float(near_end.max()), "max_dist_error": float(np.abs(d - 1).max())}



# ---------------------------------------------------------------------------
# algebraic identities used by the two-generator cases


def reflection_identity_check(n: int = 10_000, seed: int = 0, frame: SimplexFrame | None = None) -> dict:
    """``|P - Q'|^2 - |P - Q|^2 = a_B b_B`` where ``Q'`` swaps B for D in ``Q``.

    P = a_A A + a_B B + a_E E and Q = b_B B + b_C C + b_E E with nonnegative
    coefficients."""
    frame = frame or build_frame()
    rng = stream(seed, "reflection")
    a = rng.random((n, 3))
    b = rng.random((n, 3))
    A, B, C, D, E = (frame[k] for k in "ABCDE")
    P = a[:, :1] * A + a[:, 1:2] * B + a[:, 2:] * E
    Q = b[:, :1] * B + b[:, 1:2] * C + b[:, 2:] * E
    Q2 = b[:, :1] * D + b[:, 1:2] * C + b[:, 2:] * E
    lhs = np.sum((P - Q2) ** 2, axis=1) - np.sum((P - Q) ** 2, axis=1)
    err = np.abs(lhs - a[:, 1] * b[:, 0])
    return {"draws": n, "max_abs_error": float(err.max())}


def plane_projection_check(n: int = 1000, seed: int = 0, frame: SimplexFrame | None = None) -> dict:
    """Projection of ``P in pos(A, B, E)`` onto ``span(C, D, E)`` against
    ``(a_A + a_B + phi a_E) M_AB + phi a_E M_CD``."""
    frame = frame or build_frame()
    rng = stream(seed, "plane-projection")
    a = rng.random((n, 3))
    A, B, C, D, E = (frame[k] for k in "ABCDE")
    P = a[:, :1] * A + a[:, 1:2] * B + a[:, 2:] * E
    H = np.linalg.qr(np.stack([C, D, E]).T)[0].T
    PH = (P @ H.T) @ H
    phi = frame.phi
    expected = np.outer(a[:, 0] + a[:, 1] + phi * a[:, 2], frame.mid("A", "B")) \
        + np.outer(phi * a[:, 2], frame.mid("C", "D"))
    return {"samples": n, "max_abs_error": float(np.abs(PH - expected).max())}
