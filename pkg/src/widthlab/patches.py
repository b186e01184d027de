"""Generating pieces: cone-clipped spherical patches, circular arcs, points.

Every piece answers the same vectorised queries over a batch of inputs of
shape ``(n, d)``:

* ``extreme(w)``  -- maximiser of ``q . w`` over the piece,
* ``farthest(x)`` -- maximiser of ``|q - x|``,
* ``nearest(x)``  -- minimiser of ``|q - x|``.

For pieces of spheres all three reduce to maximising a linear functional on a
sphere, which is done in closed form and then clipped to the piece.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import nnls

from .frame import BASE_LABELS, HALF_SQRT3, GeometryError, SimplexFrame

TWO_PI = 2.0 * math.pi
_DEGENERATE = 1e-14


def _rows(x) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=float))


def _dist(a, b) -> np.ndarray:
    return np.linalg.norm(a - b, axis=-1)


class Piece:
    """Shared batch helpers; subclasses implement ``extreme`` or override."""

    label: str = ""
    center: np.ndarray

    def farthest(self, x):
        x = _rows(x)
        q, _ = self.extreme(self.center - x)
        return q, _dist(q, x)

    def nearest(self, x):
        x = _rows(x)
        q, _ = self.extreme(x - self.center)
        return q, _dist(q, x)

    def farthest_candidates(self, x):
        """Every local maximiser of the distance from ``x`` (one row each).

        Returns an array of shape ``(n, m, d)``."""
        q, _ = self.farthest(x)
        return q[:, None, :]


@dataclass(frozen=True, eq=False)
class PointPiece(Piece):
    point: np.ndarray
    label: str = ""

    @property
    def center(self):
        return self.point

    @property
    def dim(self) -> int:
        return self.point.shape[0]

    def extreme(self, w):
        w = _rows(w)
        return np.broadcast_to(self.point, w.shape).copy(), np.zeros(len(w), bool)

    def sample(self, h: float | None = None):
        return self.point[None, :], np.zeros((1, 0))

    def contains(self, p, tol: float = 1e-9) -> bool:
        return bool(np.linalg.norm(np.asarray(p, float) - self.point) <= tol)

    @property
    def vertices(self) -> np.ndarray:
        return self.point[None, :]


@dataclass(frozen=True, eq=False)
class ArcSegment(Piece):
    """Circular arc ``center + radius (cos t u + sin t v)``, ``t in [t0, t1]``."""

    center: np.ndarray
    radius: float
    u: np.ndarray
    v: np.ndarray
    t0: float
    t1: float
    label: str = ""

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def full(self) -> bool:
        return self.t1 - self.t0 >= TWO_PI - 1e-15

    def point(self, t) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return (
            self.center
            + self.radius * np.multiply.outer(np.cos(t), self.u)
            + self.radius * np.multiply.outer(np.sin(t), self.v)
        )

    @property
    def endpoints(self) -> np.ndarray:
        return self.point(np.array([self.t0, self.t1]))

    @property
    def vertices(self) -> np.ndarray:
        return np.empty((0, self.dim)) if self.full else self.endpoints

    def in_range(self, t) -> np.ndarray:
        if self.full:
            return np.ones(np.shape(t), bool)
        return np.mod(np.asarray(t) - self.t0, TWO_PI) <= (self.t1 - self.t0) + 1e-15

    def extreme_param(self, w):
        """Parameter of the maximiser of ``q . w`` and a degeneracy flag."""
        w = _rows(w)
        a = w @ self.u
        b = w @ self.v
        theta = np.arctan2(b, a)
        degenerate = np.hypot(a, b) <= _DEGENERATE
        if self.full:
            return np.where(degenerate, self.t0, theta), degenerate
        f0 = a * math.cos(self.t0) + b * math.sin(self.t0)
        f1 = a * math.cos(self.t1) + b * math.sin(self.t1)
        end = np.where(f1 > f0, self.t1, self.t0)
        inside = self.in_range(theta) & ~degenerate
        theta = self.t0 + np.mod(theta - self.t0, TWO_PI)
        return np.where(inside, theta, end), degenerate

    def extreme(self, w):
        t, degenerate = self.extreme_param(w)
        return self.point(t), degenerate

    def nearest_param(self, x):
        return self.extreme_param(_rows(x) - self.center)[0]

    def farthest_param(self, x):
        return self.extreme_param(self.center - _rows(x))[0]

    def farthest_candidates(self, x):
        x = _rows(x)
        q, _ = self.farthest(x)
        if self.full:
            return q[:, None, :]
        ends = np.broadcast_to(self.endpoints, (len(x), 2, self.dim))
        return np.concatenate([q[:, None, :], ends], axis=1)

    def arc_length(self) -> float:
        return self.radius * (self.t1 - self.t0)

    def sample(self, h: float):
        if not 0 < h:
            raise GeometryError("spacing must be positive")
        n = max(2, int(math.ceil(self.arc_length() / h)) + 1)
        t = np.linspace(self.t0, self.t1, n, endpoint=not self.full)
        return self.point(t), t[:, None]

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = np.asarray(p, dtype=float)
        rel = p - self.center
        a, b = rel @ self.u, rel @ self.v
        off_plane = np.linalg.norm(rel - a * self.u - b * self.v)
        if off_plane > tol or abs(math.hypot(a, b) - self.radius) > tol:
            return False
        if self.full:
            return True
        if bool(self.in_range(math.atan2(b, a))):
            return True
        return bool(np.min(_dist(self.endpoints, p)) <= tol)


def arc_between(center, p, q, label: str = "") -> ArcSegment:
    """Minor arc from ``p`` to ``q`` on the circle through both about ``center``.

    ``center`` must be equidistant from ``p`` and ``q`` and coplanar with them.
    """
    center = np.asarray(center, float)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    r = float(np.linalg.norm(p - center))
    u = (p - center) / r
    w = (q - center) - ((q - center) @ u) * u
    nw = np.linalg.norm(w)
    if nw <= 1e-14:
        raise GeometryError("arc endpoints are antipodal or coincident")
    v = w / nw
    t1 = math.atan2((q - center) @ v, (q - center) @ u)
    return ArcSegment(center, r, u, v, 0.0, t1, label)


def _orthonormal_rows(vectors) -> np.ndarray:
    q, r = np.linalg.qr(np.asarray(vectors, dtype=float).T)
    keep = np.abs(np.diag(r)) > 1e-12
    return q[:, keep].T


@dataclass(frozen=True, eq=False)
class SphericalPatch(Piece):
    """Piece of the sphere ``|q - center| = radius`` inside ``center + span(basis)``.

    When ``cone`` is given the piece is clipped to the positive cone (apex at
    the origin) of its rows, and ``arcs`` must list the clipped boundary.
    """

    center: np.ndarray
    radius: float
    basis: np.ndarray
    cone: np.ndarray | None = None
    arcs: tuple = ()
    label: str = ""
    _dual: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.cone is not None and self._dual is None:
            object.__setattr__(self, "_dual", np.linalg.pinv(self.cone.T))

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    @property
    def vertices(self) -> np.ndarray:
        if self.cone is None:
            return np.empty((0, self.dim))
        out: list[np.ndarray] = []
        for a in self.arcs:
            for e in a.endpoints:
                if all(np.linalg.norm(e - v) > 1e-12 for v in out):
                    out.append(e)
        return np.stack(out)

    def cone_coefficients(self, q) -> np.ndarray:
        return _rows(q) @ self._dual.T

    def in_cone(self, q, tol: float = 1e-12) -> np.ndarray:
        if self.cone is None:
            return np.ones(len(_rows(q)), bool)
        return np.all(self.cone_coefficients(q) >= -tol, axis=1)

    def _sphere_extreme(self, w):
        w = _rows(w)
        wh = (w @ self.basis.T) @ self.basis
        n = np.linalg.norm(wh, axis=1)
        degenerate = n <= _DEGENERATE
        safe = np.where(degenerate, 1.0, n)[:, None]
        q = self.center + self.radius * wh / safe
        if degenerate.any():
            q[degenerate] = self._anchor()
        return q, degenerate

    def _anchor(self):
        if self.cone is not None:
            return self.vertices[0]
        return self.center + self.radius * self.basis[0]

    def extreme(self, w):
        w = _rows(w)
        q, degenerate = self._sphere_extreme(w)
        if self.cone is None:
            return q, degenerate
        bad = ~self.in_cone(q) | degenerate
        if bad.any():
            wb = w[bad]
            best = None
            best_val = None
            for arc in self.arcs:
                qa, _ = arc.extreme(wb)
                val = np.einsum("ij,ij->i", qa, wb)
                if best is None:
                    best, best_val = qa, val
                else:
                    better = val > best_val
                    best[better] = qa[better]
                    best_val = np.where(better, val, best_val)
            if degenerate.any():
                # all of the sphere is equally good; keep the anchor vertex
                best[degenerate[bad]] = self._anchor()
            q[bad] = best
        return q, degenerate

    def farthest_candidates(self, x):
        x = _rows(x)
        w = self.center - x
        q, degenerate = self._sphere_extreme(w)
        inside = self.in_cone(q) & ~degenerate
        # unconstrained maximiser is a candidate only when it lies in the piece
        q = np.where(inside[:, None], q, np.nan)
        cands = [q[:, None, :]]
        for arc in self.arcs:
            cands.append(arc.farthest_candidates(x))
        return np.concatenate(cands, axis=1)

    def contains(self, p, tol: float = 1e-9) -> bool:
        p = np.asarray(p, dtype=float)
        if abs(np.linalg.norm(p - self.center) - self.radius) > tol:
            return False
        if self.cone is None:
            rel = p - self.center
            return bool(np.linalg.norm(rel - (rel @ self.basis.T) @ self.basis) <= tol)
        _, residual = nnls(self.cone.T, p)
        return bool(residual <= tol)

    def spherical_centroid(self) -> np.ndarray:
        if self.cone is None:
            return self.center + self.radius * self.basis[0]
        m = (self.vertices - self.center).sum(axis=0)
        m = (m @ self.basis.T) @ self.basis
        return self.center + self.radius * m / np.linalg.norm(m)

    def sample(self, h: float):
        """Geodesic-polar lattice about the spherical centroid, clipped to the
        piece, plus the boundary arcs at the same spacing.

        Returns ``(points, params)`` where params are the geodesic polar
        coordinates ``(rho, psi)`` (``nan`` for boundary samples)."""
        if not 0 < h < self.radius:
            raise GeometryError(f"spacing must lie in (0, {self.radius})")
        r = self.radius
        pole = self.spherical_centroid()
        e0 = (pole - self.center) / r
        tangent = self.basis - np.outer(self.basis @ e0, e0)
        tb = _orthonormal_rows(tangent)
        if self.cone is None:
            rho_max = math.pi * r
        else:
            rho_max = float(
                np.max(r * np.arccos(np.clip((self.vertices - self.center) @ e0 / r, -1, 1)))
            )
        pts = [pole[None, :]]
        params = [np.zeros((1, 2))]
        k = 1
        while (k - 1) * h < rho_max:
            rho = min(k * h, math.pi * r)
            ring = 2.0 * math.pi * r * math.sin(rho / r)
            m = max(1, int(math.ceil(ring / h)))
            psi = np.arange(m) * (2.0 * math.pi / m)
            dirs = np.multiply.outer(np.cos(psi), tb[0])
            if len(tb) > 1:
                dirs = dirs + np.multiply.outer(np.sin(psi), tb[1])
            p = self.center + r * (math.cos(rho / r) * e0 + math.sin(rho / r) * dirs)
            pts.append(p)
            params.append(np.column_stack([np.full(m, rho), psi]))
            if rho >= math.pi * r:
                break
            k += 1
        pts = np.concatenate(pts)
        params = np.concatenate(params)
        keep = self.in_cone(pts)
        pts, params = pts[keep], params[keep]
        for arc in self.arcs:
            q, _ = arc.sample(h)
            pts = np.concatenate([pts, q])
            params = np.concatenate([params, np.full((len(q), 2), np.nan)])
        return pts, params


def make_face_patch(frame: SimplexFrame, x: str, y: str) -> SphericalPatch:
    """The component of the 2-face through x, y, E cut off by span{x, y}
    on the side of E, as a patch of the sphere S(M_zw, sqrt(3)/2)."""
    if x not in BASE_LABELS or y not in BASE_LABELS or x == y:
        raise GeometryError(f"invalid base pair ({x!r}, {y!r})")
    x, y = sorted((x, y))
    z, w = [k for k in BASE_LABELS if k not in (x, y)]
    px, py, pe = frame[x], frame[y], frame["E"]
    center = frame.mid(z, w)
    basis = _orthonormal_rows([px, py, pe])
    arcs = (
        _apex_arc(frame, x),
        _apex_arc(frame, y),
        base_arc(frame, x, y),
    )
    return SphericalPatch(
        center=center,
        radius=HALF_SQRT3,
        basis=basis,
        cone=np.stack([px, py, pe]),
        arcs=arcs,
        label=f"F_{x}{y}",
    )


def _apex_arc(frame: SimplexFrame, x: str) -> ArcSegment:
    others = [k for k in BASE_LABELS if k != x]
    center = frame.centroid(*others)
    return arc_between(center, frame[x], frame["E"], label=f"F_{x}E")


def base_arc(frame: SimplexFrame, x: str, y: str) -> ArcSegment:
    """Quarter circle ``cos t X + sin t Y`` in span{X, Y}."""
    x, y = sorted((x, y))
    px, py = frame[x], frame[y]
    r = float(np.linalg.norm(px))
    return ArcSegment(
        np.zeros(frame["A"].shape[0]), r, px / r, py / r, 0.0, math.pi / 2.0, f"S_{x}{y}"
    )


def boundary_arcs(patch: SphericalPatch):
    """``(F_XE, F_YE, S_XY)`` bounding a face patch."""
    return tuple(patch.arcs)


@dataclass(frozen=True, eq=False)
class GeneratorSet:
    """The six face patches together with their boundary decomposition."""

    patches: tuple
    apex_arcs: tuple
    base_arcs: tuple
    vertices: dict

    @property
    def arcs(self) -> tuple:
        return self.apex_arcs + self.base_arcs

    def pieces(self) -> list:
        """Relatively open parts: vertices, arcs, patch interiors (closures)."""
        verts = [PointPiece(v, k) for k, v in self.vertices.items()]
        return verts + list(self.arcs) + list(self.patches)

    def patch(self, x: str, y: str) -> SphericalPatch:
        key = "F_" + "".join(sorted((x, y)))
        for p in self.patches:
            if p.label == key:
                return p
        raise KeyError(key)

    def arc(self, label: str) -> ArcSegment:
        for a in self.arcs:
            if a.label == label:
                return a
        raise KeyError(label)

    def distance(self, x) -> np.ndarray:
        """Euclidean distance from each row of ``x`` to the generating set."""
        x = _rows(x)
        return np.min([p.nearest(x)[1] for p in self.patches], axis=0)

    def nearest(self, x):
        x = _rows(x)
        best_q, best_d = self.patches[0].nearest(x)
        for p in self.patches[1:]:
            q, d = p.nearest(x)
            better = d < best_d
            best_q[better] = q[better]
            best_d = np.minimum(d, best_d)
        return best_q, best_d


def build_generator_set(frame: SimplexFrame) -> GeneratorSet:
    patches = tuple(make_face_patch(frame, x, y) for x, y in itertools.combinations(BASE_LABELS, 2))
    apex = tuple(_apex_arc(frame, x) for x in BASE_LABELS)
    base = tuple(base_arc(frame, x, y) for x, y in itertools.combinations(BASE_LABELS, 2))
    verts = {k: frame[k] for k in ("A", "B", "C", "D", "E")}
    return GeneratorSet(patches, apex, base, verts)


def sample_patch(patch: SphericalPatch, h: float) -> np.ndarray:
    return patch.sample(h)[0]


def patch_contains(patch: SphericalPatch, p, tol: float = 1e-9) -> bool:
    return patch.contains(p, tol)


def farthest_point_on_patch(patch, x):
    q, d = patch.farthest(_rows(x))
    return q[0], float(d[0])


def full_sphere(center, radius: float, label: str = "") -> SphericalPatch:
    center = np.asarray(center, dtype=float)
    return SphericalPatch(center, float(radius), np.eye(center.shape[0]), label=label)
