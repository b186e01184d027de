"""Monte-Carlo volumes, width sweeps and boundary meshes for ball bodies."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ballbody import BallBody, ray_boundary, support_many
from .frame import GeometryError
from .streams import uniform_block, unit_vectors

CHUNK = 500_000
DEFAULT_BOX_3D = 0.65


@dataclass
class VolumeEstimate:
    mean: float
    stderr: float
    n: int
    seed: int
    box: tuple
    hits: int
    refined: int = 0

    def to_json(self) -> dict:
        return {
            "mean": self.mean,
            "stderr": self.stderr,
            "n": self.n,
            "seed": self.seed,
            "box": [list(self.box[0]), list(self.box[1])],
            "hits": self.hits,
            "refined": self.refined,
        }


def _quick_classify(body: BallBody, x: np.ndarray):
    """Points certainly outside (too far from a generator vertex) and
    certainly inside (close to the witness)."""
    verts = [p.vertices for p in body.pieces if len(p.vertices)]
    verts = np.concatenate(verts) if verts else np.empty((0, body.dim))
    outside = np.zeros(len(x), bool)
    for v in verts:
        outside |= np.sum((x - v) ** 2, axis=1) > body.radius ** 2
    rho = float(body.margin(body.witness)[0])
    inside = np.sum((x - body.witness) ** 2, axis=1) <= rho * rho
    return outside, inside & ~outside


def count_inside(body: BallBody, x: np.ndarray) -> tuple[int, int]:
    """Number of rows of ``x`` inside the body and how many needed an exact
    farthest-point solve."""
    outside, inside = _quick_classify(body, x)
    todo = ~(outside | inside)
    hits = int(inside.sum())
    rest = x[todo]
    if not len(rest):
        return hits, 0
    if all(hasattr(p, "farthest_bounds") for p in body.pieces):
        # grid bounds settle most points without a 1-D solve per piece
        r2 = body.radius ** 2
        sure_out = np.zeros(len(rest), bool)
        sure_in = np.ones(len(rest), bool)
        for piece in body.pieces:
            lo, hi = piece.farthest_bounds(rest)
            sure_out |= lo > r2
            sure_in &= hi <= r2
        ambiguous = ~(sure_out | sure_in)
        hits += int((sure_in & ~sure_out).sum())
        if ambiguous.any():
            hits += int((body.margin(rest[ambiguous]) >= 0).sum())
        return hits, int(ambiguous.sum())
    return hits + int((body.margin(rest) >= 0).sum()), int(len(rest))


def bounding_box(body: BallBody, tol: float = 1e-9) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(body.dim)
    hi = np.array([r.value for r in support_many(body, eye)])
    lo = -np.array([r.value for r in support_many(body, -eye)])
    return lo - tol, hi + tol


def check_box(body: BallBody, lo, hi) -> None:
    blo, bhi = bounding_box(body)
    if np.any(blo < np.asarray(lo) - 1e-12) or np.any(bhi > np.asarray(hi) + 1e-12):
        raise GeometryError(f"box does not contain {body.label or 'body'}: extent {blo}..{bhi}")


def default_box(body: BallBody) -> tuple[np.ndarray, np.ndarray]:
    if body.dim == 3:
        return -DEFAULT_BOX_3D * np.ones(3), DEFAULT_BOX_3D * np.ones(3)
    lo, hi = bounding_box(body)
    return lo - 1e-6, hi + 1e-6


def mc_volume(body: BallBody, box=None, n: int = 1_000_000, seed: int = 0, threads: int = 1,
              chunk: int = CHUNK) -> VolumeEstimate:
    """Hit-or-miss volume over a box.  Block ``k`` always draws the same
    points, so the estimate does not depend on ``threads``."""
    lo, hi = default_box(body) if box is None else (np.asarray(box[0], float), np.asarray(box[1], float))
    check_box(body, lo, hi)
    blocks = [(b, min(chunk, n - s)) for b, s in enumerate(range(0, n, chunk))]

    def work(item):
        b, size = item
        return count_inside(body, uniform_block(seed, "volume", b, size, lo, hi))

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(item) for item in blocks]
    hits = sum(r[0] for r in results)
    refined = sum(r[1] for r in results)
    box_vol = float(np.prod(hi - lo))
    p = hits / n
    return VolumeEstimate(
        box_vol * p,
        box_vol * math.sqrt(p * (1.0 - p) / n),
        n,
        seed,
        (tuple(float(v) for v in lo), tuple(float(v) for v in hi)),
        hits,
        refined,
    )


def width_stats(body: BallBody, n: int, seed: int, tol: float = 1e-4) -> dict:
    if n < 1:
        raise ValueError("need at least one direction")
    U = unit_vectors(seed, n, body.dim)
    plus = support_many(body, U)
    minus = support_many(body, -U)
    widths = np.array([a.value + b.value for a, b in zip(plus, minus)])
    precision = np.array([a.precision + b.precision for a, b in zip(plus, minus)])
    # the true width lies in [w, w + precision]; fail unless all of it is in tolerance
    failures = [
        {"index": i, "width": float(widths[i]), "precision": float(precision[i])}
        for i in range(n)
        if max(abs(widths[i] - 1.0), abs(widths[i] + precision[i] - 1.0)) > tol
    ]
    unconverged = sum(not (a.converged and b.converged) for a, b in zip(plus, minus))
    worst = int(np.argmax(np.abs(widths - 1.0)))
    return {
        "body": body.label,
        "n": n,
        "seed": seed,
        "min": float(widths.min()),
        "max": float(widths.max()),
        "mean": float(widths.mean()),
        "spread": float(widths.max() - widths.min()),
        "worst_direction": U[worst].tolist(),
        "max_precision": float(precision.max()),
        "failures": failures,
        "unconverged": int(unconverged),
        "widths": widths.tolist(),
    }


# ---------------------------------------------------------------------------
# meshes


def icosphere(subdiv: int) -> tuple[np.ndarray, np.ndarray]:
    """Unit icosphere by repeated midpoint subdivision."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(subdiv):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = verts[i] + verts[j]
                verts.append(m / np.linalg.norm(m))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(verts), np.array(faces, dtype=np.int64)


@dataclass
class Mesh:
    vertices: np.ndarray
    faces: np.ndarray
    margins: np.ndarray
    flags: np.ndarray = field(default_factory=lambda: np.zeros(0, bool))

    def diameter(self) -> float:
        from scipy.spatial import ConvexHull
        from scipy.spatial.distance import pdist

        hull = self.vertices[ConvexHull(self.vertices).vertices]
        return float(pdist(hull).max())

    def is_watertight(self) -> bool:
        edges = np.sort(np.concatenate([self.faces[:, [0, 1]], self.faces[:, [1, 2]], self.faces[:, [2, 0]]]), axis=1)
        _, counts = np.unique(edges, axis=0, return_counts=True)
        return bool(np.all(counts == 2))


def extract_mesh(body: BallBody, subdiv: int = 3, flag_tol: float = 1e-3) -> Mesh:
    """Boundary mesh by ray casting from the witness along icosphere directions.

    Vertices within ``flag_tol`` of a one-dimensional generator piece are
    flagged (the edges along which the body is not smooth)."""
    if body.dim != 3:
        raise GeometryError("meshes are extracted for 3-D bodies only")
    dirs, faces = icosphere(subdiv)
    verts = ray_boundary(body, body.witness, dirs)
    margins = body.margin(verts)
    flags = np.zeros(len(verts), bool)
    for piece in body.pieces:
        if not hasattr(piece, "basis"):
            flags |= piece.nearest(verts)[1] <= flag_tol
    return Mesh(verts, faces, margins, flags)


def write_obj(mesh: Mesh, path) -> None:
    lines = [f"v {x:.9g} {y:.9g} {z:.9g}" for x, y, z in mesh.vertices]
    lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
    Path(path).write_text("\n".join(lines) + "\n")


def write_ply(mesh: Mesh, path) -> None:
    header = (
        "ply\nformat binary_little_endian 1.0\n"
        f"element vertex {len(mesh.vertices)}\n"
        "property float x\nproperty float y\nproperty float z\n"
        f"element face {len(mesh.faces)}\n"
        "property list uchar int vertex_indices\nend_header\n"
    )
    face_dtype = np.dtype([("n", "<u1"), ("idx", "<i4", (3,))])
    faces = np.empty(len(mesh.faces), dtype=face_dtype)
    faces["n"] = 3
    faces["idx"] = mesh.faces
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(mesh.vertices.astype("<f4").tobytes())
        fh.write(faces.tobytes())


def read_ply(path) -> tuple[np.ndarray, np.ndarray]:
    data = Path(path).read_bytes()
    end = data.index(b"end_header\n") + len(b"end_header\n")
    header = data[:end].decode("ascii").splitlines()
    nv = int(next(l for l in header if l.startswith("element vertex")).split()[-1])
    nf = int(next(l for l in header if l.startswith("element face")).split()[-1])
    verts = np.frombuffer(data, "<f4", nv * 3, end).reshape(nv, 3)
    face_dtype = np.dtype([("n", "<u1"), ("idx", "<i4", (3,))])
    faces = np.frombuffer(data, face_dtype, nf, end + nv * 12)
    return verts.astype(float), faces["idx"].astype(np.int64)


def write_mesh(mesh: Mesh, path, fmt: str) -> None:
    if fmt == "obj":
        write_obj(mesh, path)
    elif fmt == "ply":
        write_ply(mesh, path)
    else:
        raise ValueError(f"unknown mesh format {fmt!r}")

