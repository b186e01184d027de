"""The orthogonal projection of M along E and the arc-generated 3-D body.

The six base arcs project to quarter-ellipse arcs ``gamma(t) = cos t u + sin t v``
with ``u, v`` projected base vertices.  The shadow body is the intersection of
unit balls centred on these arcs; the checks here compare it with the
projection of M itself.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .ballbody import BallBody, build_M, support_many
from .frame import BASE_LABELS, GeometryError, SimplexFrame, build_frame
from .patches import _rows, make_face_patch
from .streams import uniform_block, unit_vectors

HALF_PI = 0.5 * math.pi
N_SEEDS = 64


@dataclass(frozen=True)
class ProjectionMap:
    """Orthonormal rows spanning the complement of E in R^4."""

    basis: np.ndarray
    axis: np.ndarray

    def __call__(self, x) -> np.ndarray:
        return np.asarray(x, float) @ self.basis.T

    def lift(self, y) -> np.ndarray:
        return np.asarray(y, float) @ self.basis


def projection_map(frame: SimplexFrame | None = None) -> ProjectionMap:
    frame = frame or build_frame()
    basis = 0.5 * np.array(
        [[1.0, 1.0, -1.0, -1.0], [1.0, -1.0, 1.0, -1.0], [-1.0, 1.0, 1.0, -1.0]]
    )
    axis = frame["E"] / np.linalg.norm(frame["E"])
    if np.max(np.abs(basis @ axis)) > 1e-12:
        raise GeometryError("projection basis is not orthogonal to E")
    return ProjectionMap(basis, axis)


def project(x, frame: SimplexFrame | None = None) -> np.ndarray:
    return projection_map(frame)(x)


def _pair(x: str, y: str) -> tuple[str, str]:
    if x not in BASE_LABELS or y not in BASE_LABELS or x == y:
        raise GeometryError(f"invalid base pair ({x!r}, {y!r})")
    return tuple(sorted((x, y)))


def complement(x: str, y: str) -> tuple[str, str]:
    x, y = _pair(x, y)
    return tuple(k for k in BASE_LABELS if k not in (x, y))


@dataclass(frozen=True, eq=False)
class EllipticalArc:
    """``cos t u + sin t v`` for ``t in [0, pi/2]`` (centred at the origin)."""

    u: np.ndarray
    v: np.ndarray
    label: str = ""
    t0: float = 0.0
    t1: float = HALF_PI

    @property
    def dim(self) -> int:
        return self.u.shape[0]

    @property
    def center(self) -> np.ndarray:
        return np.zeros(self.dim)

    @property
    def vertices(self) -> np.ndarray:
        return np.stack([self.u, self.v])

    def point(self, t) -> np.ndarray:
        t = np.asarray(t, float)
        return np.multiply.outer(np.cos(t), self.u) + np.multiply.outer(np.sin(t), self.v)

    def extreme(self, w):
        w = _rows(w)
        a, b = w @ self.u, w @ self.v
        theta = np.arctan2(b, a)
        f0 = a * math.cos(self.t0) + b * math.sin(self.t0)
        f1 = a * math.cos(self.t1) + b * math.sin(self.t1)
        end = np.where(f1 > f0, self.t1, self.t0)
        t = np.where((theta >= self.t0) & (theta <= self.t1), theta, end)
        return self.point(t), np.hypot(a, b) <= 1e-14

    def _coeffs(self, x):
        # |x - gamma(t)|^2 = c0 - 2 p cos t - 2 q sin t + k sin 2t + m cos 2t
        x = _rows(x)
        uu, vv, uv = self.u @ self.u, self.v @ self.v, self.u @ self.v
        c0 = np.einsum("ij,ij->i", x, x) + 0.5 * (uu + vv)
        return c0, x @ self.u, x @ self.v, uv, 0.5 * (uu - vv)

    @staticmethod
    def _g(t, c0, p, q, k, m):
        return c0 - 2 * p * np.cos(t) - 2 * q * np.sin(t) + k * np.sin(2 * t) + m * np.cos(2 * t)

    @staticmethod
    def _dg(t, p, q, k, m):
        return 2 * p * np.sin(t) - 2 * q * np.cos(t) + 2 * k * np.cos(2 * t) - 2 * m * np.sin(2 * t)

    @staticmethod
    def _ddg(t, p, q, k, m):
        return 2 * p * np.cos(t) + 2 * q * np.sin(t) - 4 * k * np.sin(2 * t) - 4 * m * np.cos(2 * t)

    def _grid_values(self, c0, p, q, k, m, n_seeds):
        grid = np.linspace(self.t0, self.t1, n_seeds + 1)
        trig = np.stack([np.cos(grid), np.sin(grid)])
        const = k * np.sin(2 * grid) + m * np.cos(2 * grid)
        vals = np.column_stack([p, q]) @ (-2.0 * trig)
        vals += const
        vals += c0[:, None]
        return grid, grid[1] - grid[0], vals

    def optimize_param(self, x, sign: float = 1.0, n_seeds: int = N_SEEDS):
        """Parameter maximising ``sign * |x - gamma(t)|^2``.

        Seeds an equispaced grid, then refines the two best grid local
        maxima by bisection on the derivative plus Newton polishing."""
        c0, p, q, k, m = self._coeffs(x)
        n = len(c0)
        grid, h, vals = self._grid_values(c0, p, q, k, m, n_seeds)
        vals = sign * vals
        left = np.concatenate([np.full((n, 1), -np.inf), vals[:, :-1]], axis=1)
        right = np.concatenate([vals[:, 1:], np.full((n, 1), -np.inf)], axis=1)
        peaks = np.where((vals >= left) & (vals >= right), vals, -np.inf)
        order = np.argsort(-peaks, axis=1)[:, :2]
        best_t = np.where(vals[:, 0] >= vals[:, -1], self.t0, self.t1)
        best_v = np.maximum(vals[:, 0], vals[:, -1])
        rows = np.arange(n)
        for j in range(order.shape[1]):
            idx = order[:, j]
            valid = np.isfinite(peaks[rows, idx])
            lo = np.clip(grid[idx] - h, self.t0, self.t1)
            hi = np.clip(grid[idx] + h, self.t0, self.t1)
            t = self._refine(lo, hi, p, q, k, m, sign)
            v = sign * self._g(t, c0, p, q, k, m)
            better = valid & (v > best_v)
            best_t = np.where(better, t, best_t)
            best_v = np.where(better, v, best_v)
        return best_t, sign * best_v

    def _refine(self, lo, hi, p, q, k, m, sign):
        dlo = sign * self._dg(lo, p, q, k, m)
        dhi = sign * self._dg(hi, p, q, k, m)
        bracket = (dlo > 0) & (dhi < 0)
        a, b = lo.copy(), hi.copy()
        for _ in range(14):
            mid = 0.5 * (a + b)
            up = sign * self._dg(mid, p, q, k, m) > 0
            a = np.where(up, mid, a)
            b = np.where(up, b, mid)
        # Newton from a bracket of width ~1e-6 converges in a few steps;
        # clipping keeps it inside the bracket when curvature is tiny
        t = 0.5 * (a + b)
        for _ in range(4):
            dd = self._ddg(t, p, q, k, m)
            safe = np.abs(dd) > 1e-12
            step = np.where(safe, self._dg(t, p, q, k, m) / np.where(safe, dd, 1.0), 0.0)
            t = np.clip(t - step, a, b)
        # without a sign change the best of the bracket ends is the local max
        c = np.zeros_like(lo)
        g_lo = sign * self._g(lo, c, p, q, k, m)
        g_hi = sign * self._g(hi, c, p, q, k, m)
        return np.where(bracket, t, np.where(g_lo >= g_hi, lo, hi))

    def farthest(self, x):
        x = _rows(x)
        t, g = self.optimize_param(x, 1.0)
        return self.point(t), np.sqrt(np.maximum(g, 0.0))

    def farthest_param(self, x):
        return self.optimize_param(x, 1.0)[0]

    def nearest(self, x):
        x = _rows(x)
        t, g = self.optimize_param(x, -1.0)
        return self.point(t), np.sqrt(np.maximum(g, 0.0))

    def farthest_bounds(self, x, n_seeds: int = N_SEEDS):
        """Cheap lower and upper bounds on the squared farthest distance."""
        c0, p, q, k, m = self._coeffs(x)
        _, h, vals = self._grid_values(c0, p, q, k, m, n_seeds)
        lower = vals.max(axis=1)
        curv = 2 * np.abs(p) + 2 * np.abs(q) + 4 * abs(k) + 4 * abs(m)
        return lower, lower + curv * h * h / 8.0

    def sample(self, h: float):
        n = max(2, int(math.ceil(self.arc_length() / h)) + 1)
        t = np.linspace(self.t0, self.t1, n)
        return self.point(t), t[:, None]

    def arc_length(self, n: int = 2048) -> float:
        p = self.point(np.linspace(self.t0, self.t1, n))
        return float(np.linalg.norm(np.diff(p, axis=0), axis=1).sum())

    def contains(self, p, tol: float = 1e-9) -> bool:
        c, res, *_ = np.linalg.lstsq(np.stack([self.u, self.v]).T, np.asarray(p, float), rcond=None)
        if np.linalg.norm(np.stack([self.u, self.v]).T @ c - p) > tol:
            return False
        t = math.atan2(c[1], c[0])
        return abs(math.hypot(*c) - 1.0) <= tol and -tol <= t <= HALF_PI + tol


def make_arc(x: str, y: str, frame: SimplexFrame | None = None) -> EllipticalArc:
    frame = frame or build_frame()
    x, y = _pair(x, y)
    pm = projection_map(frame)
    return EllipticalArc(pm(frame[x]), pm(frame[y]), f"E_{x}{y}")


def arc_axes(arc: EllipticalArc) -> tuple[float, float, float]:
    """Semi-axes ``a >= b`` of the full ellipse and its eccentricity."""
    gram = np.array([[arc.u @ arc.u, arc.u @ arc.v], [arc.u @ arc.v, arc.v @ arc.v]])
    lo, hi = np.linalg.eigvalsh(gram)
    a, b = math.sqrt(hi), math.sqrt(lo)
    return a, b, math.sqrt(1.0 - (b * b) / (a * a))


def ellipse_area_family(arc: EllipticalArc, s) -> np.ndarray:
    """Areas of the origin-centred ellipses through ``u`` and ``v``.

    In the coordinates where ``u, v`` are the unit vectors these ellipses are
    ``x^2 + y^2 + 2 s x y = 1`` with ``|s| < 1``; ``s = 0`` is the arc's own
    ellipse."""
    det_m = math.sqrt(np.linalg.det(np.array([[arc.u @ arc.u, arc.u @ arc.v], [arc.u @ arc.v, arc.v @ arc.v]])))
    return math.pi * det_m / np.sqrt(1.0 - np.asarray(s, float) ** 2)


def lowner_john_area(arc: EllipticalArc) -> float:
    """Area of the minimal origin-centred ellipse containing ``+-u, +-v``."""
    m = np.stack([arc.u, arc.v]).T
    q_, _ = np.linalg.qr(m)
    pts = np.stack([arc.u, arc.v]) @ q_

    def neg_logdet(z):
        return -2.0 * (z[0] + z[2])

    def cons(z):
        L = np.array([[math.exp(z[0]), 0.0], [z[1], math.exp(z[2])]])
        return 1.0 - np.sum((pts @ L) ** 2, axis=1)

    res = minimize(neg_logdet, np.zeros(3), constraints=[{"type": "ineq", "fun": cons}],
                   method="SLSQP", options={"ftol": 1e-15, "maxiter": 500})
    return float(math.pi * math.exp(-(res.x[0] + res.x[2])))


def minimal_area_check(arc: EllipticalArc, n: int = 2001) -> dict:
    a, b, _ = arc_axes(arc)
    s = np.linspace(-0.999, 0.999, n)
    areas = ellipse_area_family(arc, s)
    return {
        "arc": arc.label,
        "area": math.pi * a * b,
        "through_points_min_area": float(areas.min()),
        "through_points_ok": bool(areas.min() >= math.pi * a * b - 1e-9),
        "lowner_john_area": lowner_john_area(arc),
    }


def all_arcs(frame: SimplexFrame | None = None) -> list[EllipticalArc]:
    frame = frame or build_frame()
    return [make_arc(x, y, frame) for x, y in itertools.combinations(BASE_LABELS, 2)]


def build_shadow(frame: SimplexFrame | None = None) -> BallBody:
    return BallBody(tuple(all_arcs(frame)), 3, np.zeros(3), 1.0, "shadow")


def opposite_point(x: str, y: str, t, frame: SimplexFrame | None = None) -> np.ndarray:
    """Point of the complementary arc with the same parameter."""
    z, w = complement(x, y)
    return make_arc(z, w, frame).point(t)


# ---------------------------------------------------------------------------
# checks against the 4-D body


def projected_patch(x: str, y: str, h: float = 0.05, frame: SimplexFrame | None = None) -> dict:
    """Check that the patch projects into the planar sector ``{l gamma(t)}``."""
    frame = frame or build_frame()
    pm = projection_map(frame)
    arc = make_arc(x, y, frame)
    pts, _ = make_face_patch(frame, *_pair(x, y)).sample(h)
    img = pm(pts)
    m = np.stack([arc.u, arc.v]).T
    coef, *_ = np.linalg.lstsq(m, img.T, rcond=None)
    coef = coef.T
    residual = float(np.max(np.linalg.norm(coef @ m.T - img, axis=1)))
    lam = np.linalg.norm(coef, axis=1)
    theta = np.arctan2(coef[:, 1], coef[:, 0])
    nonzero = lam > 1e-12
    in_sector = bool(
        np.all(lam <= 1 + 1e-8)
        and np.all(theta[nonzero] >= -1e-8)
        and np.all(theta[nonzero] <= HALF_PI + 1e-8)
    )
    shadow = build_shadow(frame)
    inner = lam < 1 - 1e-3
    margins = shadow.margin(img[inner]) if inner.any() else np.array([np.inf])
    return {
        "pair": arc.label,
        "samples": int(len(img)),
        "plane_residual": residual,
        "in_sector": in_sector and residual <= 1e-8,
        "interior_min_margin": float(margins.min()),
        "interior_ok": bool(margins.min() > 0),
    }


def fiber_margin(M: BallBody, pm: ProjectionMap, y, frame: SimplexFrame, tol: float = 1e-8):
    """Maximum of the M-margin along each fibre ``lift(y) + s E_hat``.

    The margin is concave along a line, so golden-section search over the
    slab containing the Reuleaux simplex finds the maximum."""
    y = _rows(y)
    base = pm.lift(y)
    e = pm.axis
    lo = np.full(len(y), float(frame["E"] @ e) - 1.0)
    hi = np.full(len(y), float(frame["A"] @ e) + 1.0)
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    a = hi - ratio * (hi - lo)
    b = lo + ratio * (hi - lo)
    fa = M.margin(base + a[:, None] * e)
    fb = M.margin(base + b[:, None] * e)
    while (hi - lo).max() > tol:
        left = fa >= fb
        hi = np.where(left, b, hi)
        lo = np.where(left, lo, a)
        new_b = np.where(left, a, lo + ratio * (hi - lo))
        new_a = np.where(left, hi - ratio * (hi - lo), b)
        fnew_b = np.where(left, fa, np.nan)
        fnew_a = np.where(left, np.nan, fb)
        a, b = new_a, new_b
        need_a, need_b = left, ~left
        if need_a.any():
            fnew_a[need_a] = M.margin(base[need_a] + a[need_a, None] * e)
        if need_b.any():
            fnew_b[need_b] = M.margin(base[need_b] + b[need_b, None] * e)
        fa, fb = fnew_a, fnew_b
    s = 0.5 * (lo + hi)
    return M.margin(base + s[:, None] * e), s


def equivalence_check(n: int, seed: int, band: float = 1e-4, frame: SimplexFrame | None = None,
                      chunk: int = 20_000) -> dict:
    """Compare shadow membership with the existence of a point of M in the fibre."""
    frame = frame or build_frame()
    pm = projection_map(frame)
    M = build_M(frame)
    shadow = build_shadow(frame)
    lo, hi = -0.65 * np.ones(3), 0.65 * np.ones(3)
    agree = considered = banded = 0
    disagreements = []
    for block, start in enumerate(range(0, n, chunk)):
        size = min(chunk, n - start)
        y = uniform_block(seed, "equivalence", block, size, lo, hi)
        ma = shadow.margin(y)
        mb, _ = fiber_margin(M, pm, y, frame)
        keep = (np.abs(ma) > band) & (np.abs(mb) > band)
        banded += int((~keep).sum())
        considered += int(keep.sum())
        same = (ma >= 0) == (mb >= 0)
        agree += int((same & keep).sum())
        for i in np.flatnonzero(keep & ~same)[:20]:
            disagreements.append({"y": y[i].tolist(), "shadow_margin": float(ma[i]), "fiber_margin": float(mb[i])})
    rate = agree / considered if considered else float("nan")
    return {
        "samples": n,
        "considered": considered,
        "in_band": banded,
        "agreement": rate,
        "disagreements": disagreements[:20],
        "pass": bool(considered and rate >= 0.999),
    }


# ---------------------------------------------------------------------------
# circular projections


def plane_basis(normal) -> np.ndarray:
    n = np.asarray(normal, float)
    n = n / np.linalg.norm(n)
    helper = np.eye(3)[int(np.argmin(np.abs(n)))]
    e1 = np.cross(n, helper)
    e1 /= np.linalg.norm(e1)
    return np.stack([e1, np.cross(n, e1)])


def circle_residual(body: BallBody, normal, n_dirs: int = 360) -> tuple[float, np.ndarray]:
    """Max deviation of the projected support function from its best circle.

    A planar support function ``h(theta)`` is a circle of radius ``r`` about
    ``c`` iff ``h(theta) = c . d(theta) + r``; fit ``(c, r)`` by least squares."""
    pb = plane_basis(normal)
    theta = np.arange(n_dirs) * (2.0 * math.pi / n_dirs)
    d2 = np.column_stack([np.cos(theta), np.sin(theta)])
    dirs = d2 @ pb
    h = np.array([r.value for r in support_many(body, dirs)])
    design = np.column_stack([d2, np.ones(n_dirs)])
    coef, *_ = np.linalg.lstsq(design, h, rcond=None)
    return float(np.max(np.abs(design @ coef - h))), h


def _fundamental_normals(resolution: int) -> np.ndarray:
    """Normals covering a fundamental region of the tetrahedral symmetry
    group acting on the shadow (up to sign), on a spherical grid."""
    out = []
    for i in range(resolution + 1):
        for j in range(resolution + 1):
            theta = HALF_PI * i / resolution
            phi = HALF_PI * j / resolution
            n = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
            # tetrahedral symmetries include coordinate permutations
            if n[0] >= n[1] - 1e-12 and n[1] >= n[2] - 1e-12:
                out.append(n)
    normals = np.unique(np.round(out, 12), axis=0)
    return normals


def circular_projection_search(resolution: int = 6, n_dirs: int = 360, screen_dirs: int = 48,
                               top: int = 3, frame: SimplexFrame | None = None) -> dict:
    """Sweep projection planes of the shadow for circular outlines.

    Every normal on the grid is screened with ``screen_dirs`` support
    directions; the best ``top`` are re-evaluated with ``n_dirs``."""
    shadow = build_shadow(frame)
    normals = _fundamental_normals(resolution)
    screened = []
    for n in normals:
        res, _ = circle_residual(shadow, n, screen_dirs)
        screened.append((res, n))
    screened.sort(key=lambda item: item[0])
    best = []
    for _, n in screened[:top]:
        res, h = circle_residual(shadow, n, n_dirs)
        widths = h[: n_dirs // 2] + h[n_dirs // 2:]
        best.append({
            "normal": n.tolist(),
            "residual": res,
            "min_width": float(widths.min()),
            "max_width": float(widths.max()),
        })
    best.sort(key=lambda item: item["residual"])
    return {
        "planes_screened": len(normals),
        "best": best,
        "worst_screened_residual": float(screened[-1][0]),
        "min_residual": best[0]["residual"],
        "pass": bool(best[0]["residual"] <= 1e-3),
    }


def random_plane_residual(seed: int, n_dirs: int = 360, frame: SimplexFrame | None = None) -> float:
    n = unit_vectors(seed, 1, 3, "plane")[0]
    return circle_residual(build_shadow(frame), n, n_dirs)[0]
