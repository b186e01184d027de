"""Spindles: intersections of equal balls centred on a subset of a k-sphere.

A :class:`SubSphere` wraps one of the sphere pieces from :mod:`patches`
(an arc or a cone-clipped patch, possibly the full sphere) together with its
carrier subspace, so that every query reuses the same clipping rules.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .frame import GeometryError
from .patches import ArcSegment, SphericalPatch, _rows, full_sphere


@dataclass(frozen=True, eq=False)
class SubSphere:
    piece: ArcSegment | SphericalPatch

    @property
    def center(self) -> np.ndarray:
        return self.piece.center

    @property
    def radius(self) -> float:
        return float(self.piece.radius)

    @property
    def basis(self) -> np.ndarray:
        """Orthonormal rows spanning the carrier ``H - center``."""
        if isinstance(self.piece, ArcSegment):
            return np.stack([self.piece.u, self.piece.v])
        return self.piece.basis

    @property
    def k(self) -> int:
        return len(self.basis) - 1

    @property
    def dim(self) -> int:
        return self.center.shape[0]

    def axis_basis(self) -> np.ndarray:
        """Orthonormal rows spanning the axis ``J`` (complement of the carrier)."""
        b = self.basis
        _, s, vt = np.linalg.svd(np.vstack([b, np.zeros((self.dim - len(b), self.dim))]))
        return vt[len(b):]

    def project(self, p) -> np.ndarray:
        """Orthogonal projection onto the carrier affine space."""
        rel = _rows(p) - self.center
        return self.center + (rel @ self.basis.T) @ self.basis

    def contains(self, p, tol: float = 1e-9) -> bool:
        return self.piece.contains(p, tol)

    @classmethod
    def sphere(cls, center, radius: float, basis=None) -> "SubSphere":
        center = np.asarray(center, float)
        if basis is None:
            return cls(full_sphere(center, radius))
        basis = np.asarray(basis, float)
        if len(basis) == 2:
            return cls(ArcSegment(center, float(radius), basis[0], basis[1], 0.0, 2.0 * np.pi))
        return cls(SphericalPatch(center, float(radius), basis))


def farthest_on_subsphere(S: SubSphere, P):
    """Farthest point of ``S`` from each row of ``P``.

    Returns ``(Q, dist, degenerate)``; ``degenerate`` marks queries whose
    carrier projection is the sphere centre, where a full sphere is
    equidistant and ``Q`` is an arbitrary point of ``S``."""
    P = _rows(P)
    rel = (P - S.center) @ S.basis.T
    degenerate = np.linalg.norm(rel, axis=1) <= 1e-14
    Q, dist = S.piece.farthest(P)
    return Q, dist, degenerate


@dataclass(frozen=True, eq=False)
class Spindle:
    generator: SubSphere
    r: float = 1.0

    @property
    def k(self) -> int:
        return self.generator.k

    @property
    def dim(self) -> int:
        return self.generator.dim

    def margin(self, x) -> np.ndarray:
        return self.r - farthest_on_subsphere(self.generator, x)[1]


def spindle_membership(sp: Spindle, x, tol: float = 0.0) -> np.ndarray:
    return sp.margin(x) >= -tol


def spindle_cap(sp: Spindle, x, tol: float = 1e-9) -> Callable[[np.ndarray], np.ndarray]:
    """Predicate for the points of ``S(x, 1)`` on the far half of ``J_x``.

    ``J_x`` is the affine span of the axis ``J`` and ``x``; the kept half is
    the one bounded by ``J`` that does not contain ``x``."""
    if sp.r != 1.0:
        raise GeometryError("spindle caps are defined for unit radius")
    S = sp.generator
    x = np.asarray(x, float)
    if not S.contains(x, 1e-9):
        raise GeometryError("cap base point must lie on the generating set")
    J = S.axis_basis()
    xh = (x - S.center) @ S.basis.T @ S.basis
    xh = xh / np.linalg.norm(xh)
    span = np.vstack([J, xh]) if len(J) else xh[None, :]

    def predicate(y) -> np.ndarray:
        y = _rows(y)
        on_sphere = np.abs(np.linalg.norm(y - x, axis=1) - 1.0) <= tol
        rel = y - S.center
        off_flat = np.linalg.norm(rel - (rel @ span.T) @ span, axis=1)
        return on_sphere & (off_flat <= tol) & (rel @ xh <= tol)

    return predicate


# ---------------------------------------------------------------------------
# brute-force checks of the cap characterisation


def _random_frame(rng, d: int) -> np.ndarray:
    q, _ = np.linalg.qr(rng.standard_normal((d, d)))
    return q.T


def cap_points(S: SubSphere, x, n: int = 64) -> np.ndarray:
    """Points of ``S(x, 1)`` on the far half of ``J_x`` (explicit parametrisation)."""
    x = np.asarray(x, float)
    rho = S.radius
    xh = (x - S.center) @ S.basis.T @ S.basis
    xh = xh / np.linalg.norm(xh)
    J = S.axis_basis()
    if not len(J):
        return (S.center - (1.0 - rho) * xh)[None, :]
    s_max = float(np.sqrt(1.0 - rho * rho))
    pts = []
    for j in J:
        s = np.linspace(-s_max, s_max, n)
        a = np.sqrt(1.0 - s * s) - rho
        pts.append(S.center + np.outer(s, j) - np.outer(a, xh))
    return np.concatenate(pts)


def cap_equivalence(d: int, rng, n: int = 10_000, band: float = 1e-6) -> dict:
    """Compare the cap predicate with spindle membership on ``S(x, 1)``.

    The generator is a random arc (radius 1/3 in the plane, 3/4 in space).
    Samples are uniform on ``S(x, 1)`` plus exact cap points and points pushed
    off the cap by small offsets."""
    rho = 1.0 / 3.0 if d == 2 else 0.75
    rot = _random_frame(rng, d)
    center = rng.uniform(-0.5, 0.5, d)
    t0 = rng.uniform(0.0, 2.0 * np.pi)
    span = rng.uniform(0.3, 2.5)
    arc = ArcSegment(center, rho, rot[0], rot[1], t0, t0 + span)
    S = SubSphere(arc)
    sp = Spindle(S)
    x = arc.point(t0 + rng.uniform(0.2, 0.8) * span)
    pred = spindle_cap(sp, x)

    dirs = rng.standard_normal((n, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    on_cap = cap_points(S, x)
    near = []
    for delta in (1e-2, 1e-3, 1e-4):
        kick = rng.standard_normal((len(on_cap), d))
        p = on_cap + delta * kick
        near.append(x + (p - x) / np.linalg.norm(p - x, axis=1, keepdims=True))
    y = np.concatenate([x + dirs, on_cap] + near)
    p = pred(y)
    m = sp.margin(y)
    member = m >= -band
    clear = np.abs(m) > band
    return {
        "d": d,
        "samples": int(len(y)),
        "cap_points": int(len(on_cap)),
        "disagreements": int(((p != member) & clear).sum()),
        "cap_min_margin": float(m[len(dirs):len(dirs) + len(on_cap)].min()),
        "cap_predicate_ok": bool(p[len(dirs):len(dirs) + len(on_cap)].all()),
        "off_cap_positive": int(((~p) & (m > 0)).sum()),
    }


def monotonicity_check(n: int, seed: int) -> dict:
    """Moving Q on a sphere in the direction of O - P increases |P - Q|."""
    from .streams import stream

    rng = stream(seed, "monotonicity")
    violations = 0
    tested = 0
    for d in (2, 3, 4):
        m = n // 3 + (1 if d == 2 else 0) * (n % 3)
        O = rng.standard_normal((m, d))
        r = rng.uniform(0.1, 2.0, m)[:, None]
        u = rng.standard_normal((m, d))
        v = rng.standard_normal((m, d))
        Q = O + r * u / np.linalg.norm(u, axis=1, keepdims=True)
        Q2 = O + r * v / np.linalg.norm(v, axis=1, keepdims=True)
        P = rng.standard_normal((m, d))
        lhs = np.einsum("ij,ij->i", O - P, Q2 - Q)
        gain = np.linalg.norm(P - Q2, axis=1) - np.linalg.norm(P - Q, axis=1)
        decided = lhs > 1e-12
        tested += int(decided.sum())
        violations += int((decided & (gain <= 0)).sum())
    return {"triples": n, "decided": tested, "violations": violations}
