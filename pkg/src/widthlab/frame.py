"""Coordinates of the unit regular 4-simplex used throughout the package.

The base vertices A, B, C, D are scaled coordinate axes of norm 1/sqrt(2), so
they are pairwise orthogonal and pairwise at distance 1.  The apex E sits on
the main diagonal at ``(phi/2)(A + B + C + D)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

PHI = (1.0 + math.sqrt(5.0)) / 2.0
SQRT2 = math.sqrt(2.0)
HALF_SQRT3 = math.sqrt(3.0) / 2.0

BASE_LABELS = ("A", "B", "C", "D")
LABELS = ("A", "B", "C", "D", "E")


class GeometryError(ValueError):
    """Base class for invalid geometric input."""


class DegenerateError(GeometryError):
    """Input points are affinely dependent or coincide."""


class AmbiguityError(GeometryError):
    """An orientation witness lies on the plane it should orient."""


@dataclass(frozen=True)
class Hyperplane:
    """Affine hyperplane ``normal . x = offset`` with a kept closed side.

    The normal is oriented so that the kept side is ``normal . x >= offset``;
    ``witness`` is the point used to choose that orientation.
    """

    normal: np.ndarray
    offset: float
    witness: np.ndarray | None = None
    label: str = ""

    def signed(self, x: np.ndarray) -> np.ndarray:
        """Signed distance, positive on the kept side."""
        return np.asarray(x) @ self.normal - self.offset

    def contains(self, x: np.ndarray, tol: float = 1e-10) -> np.ndarray:
        return np.abs(self.signed(x)) <= tol

    def keeps(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.signed(x) >= -tol

    def reflect(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return x - 2.0 * np.multiply.outer(self.signed(x), self.normal)

    def key(self, digits: int = 9) -> tuple:
        """Hashable identity of the oriented half-space, for deduplication."""
        return tuple(np.round(np.append(self.normal, self.offset), digits) + 0.0)


def _oriented(normal, offset, witness, label):
    s = float(witness @ normal - offset)
    if abs(s) <= 1e-12:
        raise AmbiguityError(f"witness lies on hyperplane {label or ''}".strip())
    if s < 0:
        normal, offset = -normal, -offset
    return Hyperplane(normal, float(offset), np.asarray(witness, float), label)


def hyperplane_through(points, keep_side_witness, label: str = "") -> Hyperplane:
    """Hyperplane through ``d`` affinely independent points in R^d.

    The witness selects the kept closed half-space and must not lie on the
    plane.
    """
    pts = np.asarray(points, dtype=float)
    n, d = pts.shape
    if n != d:
        raise DegenerateError(f"need {d} points in R^{d}, got {n}")
    diffs = pts[1:] - pts[0]
    _, s, vt = np.linalg.svd(diffs)
    if s[-1] <= 1e-10 * max(1.0, s[0]):
        raise DegenerateError("points are affinely dependent")
    normal = vt[-1]
    normal = normal / np.linalg.norm(normal)
    offset = float(normal @ pts.mean(axis=0))
    return _oriented(normal, offset, np.asarray(keep_side_witness, float), label)


def halfspace_avoiding(points, avoid, label: str = "") -> Hyperplane:
    """Closed half-space bounded by the plane through ``points`` that does not
    contain ``avoid``."""
    pts = np.asarray(points, dtype=float)
    avoid = np.asarray(avoid, dtype=float)
    plane = hyperplane_through(pts, avoid, label)
    return Hyperplane(-plane.normal, -plane.offset, plane.reflect(avoid), label)


def perpendicular_bisector(x, y, label: str = "") -> Hyperplane:
    """Bisector of segment xy; the kept side is the one containing x."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    diff = x - y
    norm = np.linalg.norm(diff)
    if norm <= 1e-14:
        raise DegenerateError("bisector of coincident points")
    normal = diff / norm
    return Hyperplane(normal, float(normal @ (x + y) / 2.0), x, label)


@dataclass(frozen=True)
class SimplexFrame:
    """Vertices A..E, centroid G and origin O of the unit regular 4-simplex."""

    points: dict = field(repr=False)
    phi: float = PHI

    def __getitem__(self, label: str) -> np.ndarray:
        return self.points[label]

    def __getattr__(self, name):
        pts = self.__dict__.get("points")
        if pts is not None and name in pts:
            return pts[name]
        raise AttributeError(name)

    @property
    def vertices(self) -> np.ndarray:
        return np.stack([self.points[k] for k in LABELS])

    def mid(self, x: str, y: str) -> np.ndarray:
        return (self.points[x] + self.points[y]) / 2.0

    def centroid(self, *labels: str) -> np.ndarray:
        return np.mean([self.points[k] for k in labels], axis=0)

    def point(self, which) -> np.ndarray:
        """Resolve a label ("A", "O", "G") or pass through a coordinate vector."""
        if isinstance(which, str):
            return self.points[which]
        return np.asarray(which, dtype=float)

    def symmetries(self) -> list[np.ndarray]:
        """The 24 orthogonal maps permuting A, B, C, D and fixing E."""
        return [np.eye(4)[list(p)] for p in itertools.permutations(range(4))]

    def to_json(self) -> dict:
        return {
            "phi": self.phi,
            "points": {k: [float(c) for c in v] for k, v in self.points.items()},
        }


def build_frame() -> SimplexFrame:
    a = 1.0 / SQRT2
    base = {k: a * e for k, e in zip(BASE_LABELS, np.eye(4))}
    e = (PHI / 2.0) * sum(base.values())
    g = (sum(base.values()) + e) / 5.0
    pts = dict(base, E=e, G=g, O=np.zeros(4))
    for v in pts.values():
        v.setflags(write=False)
    return SimplexFrame(pts)


def permutation_of(sigma: np.ndarray) -> dict:
    """Label map induced by a base-permutation matrix (E is fixed)."""
    mapping = {BASE_LABELS[i]: BASE_LABELS[int(np.argmax(sigma[:, i]))] for i in range(4)}
    mapping["E"] = "E"
    return mapping
