"""3-D geometry primitives for the wall-interaction solver.

Walls are decomposed into planar rectangles (one face per footprint
segment); all intersection tests work on those faces.  Functions accept
plain sequences or ndarrays for points and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

if TYPE_CHECKING:  # pragma: no cover - typing only
    from .scenario import Material, Wall

# Hits whose direction-normal cosine is below this are treated as misses
# (grazing incidence produces degenerate reflection coefficients).
GRAZING_COS_EPS = 1e-9
# Relative parameter margin excluding segment endpoints from crossings.
ENDPOINT_EPS = 1e-9
# Absolute tolerance [m] for point-inside-face containment.
FACE_TOL = 1e-9


def vec3(p) -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {v.shape}")
    return v


def unit(v: np.ndarray) -> np.ndarray:
    n = float(np.linalg.norm(v))
    if n == 0.0:
        raise ValueError("cannot normalise a zero vector")
    return v / n


# ---------------------------------------------------------------------------
# Wall faces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WallFace:
    """One planar rectangle of a wall: origin plus two orthogonal edges."""

    origin: np.ndarray  # corner point [m]
    edge_u: np.ndarray  # horizontal extent vector [m]
    edge_v: np.ndarray  # vertical extent vector [m]
    material: "Material"
    parent_wall: str
    face_id: str = ""

    @property
    def u_len(self) -> float:
        return float(np.linalg.norm(self.edge_u))

    @property
    def v_len(self) -> float:
        return float(np.linalg.norm(self.edge_v))

    @property
    def normal(self) -> np.ndarray:
        return unit(np.cross(self.edge_u, self.edge_v))


@dataclass(frozen=True)
class Hit:
    """A proper crossing of a segment through a wall face."""

    face: WallFace
    point: np.ndarray
    incidence_cosine: float  # |direction . normal|, in (0, 1]
    param_along_ray: float  # distance from the segment start [m]


def build_faces(walls: Iterable["Wall"]) -> list[WallFace]:
    """Decompose wall polylines into vertical rectangular faces."""
    faces = []
    for wall in walls:
        height = wall.top_height - wall.base_height
        for j, ((x0, y0), (x1, y1)) in enumerate(zip(wall.footprint, wall.footprint[1:])):
            origin = np.array([x0, y0, wall.base_height])
            edge_u = np.array([x1 - x0, y1 - y0, 0.0])
            edge_v = np.array([0.0, 0.0, height])
            faces.append(
                WallFace(origin, edge_u, edge_v, wall.material, wall.id, f"{wall.id}/{j}")
            )
    return faces


class FaceSet:
    """Vectorised view over a list of faces (arrays indexed by face)."""

    def __init__(self, faces: Sequence[WallFace]):
        self.faces = list(faces)
        n = len(self.faces)
        self.origin = np.zeros((n, 3))
        self.normal = np.zeros((n, 3))
        self.u_hat = np.zeros((n, 3))
        self.v_hat = np.zeros((n, 3))
        self.u_len = np.zeros(n)
        self.v_len = np.zeros(n)
        self.eps_r = np.ones(n)
        self.fresnel = np.ones(n, dtype=bool)
        self.fixed_refl = np.zeros(n)
        self.trans_amp = np.ones(n)  # 10^(-loss/20) per traversal
        for i, f in enumerate(self.faces):
            self.origin[i] = f.origin
            self.normal[i] = f.normal
            self.u_hat[i] = unit(f.edge_u)
            self.v_hat[i] = unit(f.edge_v)
            self.u_len[i] = f.u_len
            self.v_len[i] = f.v_len
            mat = f.material
            self.eps_r[i] = mat.relative_permittivity
            self.fresnel[i] = mat.reflection_mode == "fresnel"
            self.fixed_refl[i] = mat.fixed_reflection_magnitude
            self.trans_amp[i] = 10.0 ** (-mat.transmission_loss / 20.0)

    def __len__(self) -> int:
        return len(self.faces)


def _as_faceset(faces) -> FaceSet:
    return faces if isinstance(faces, FaceSet) else FaceSet(list(faces))


# ---------------------------------------------------------------------------
# Core operations
# ---------------------------------------------------------------------------


def mirror_point(p, face: WallFace) -> np.ndarray:
    """Reflect a point across the face's infinite plane (an involution)."""
    p = vec3(p)
    n = face.normal
    return p - 2.0 * float(np.dot(p - face.origin, n)) * n


def segment_hits(a, b, faces) -> list[Hit]:
    """All proper crossings of the open segment (a, b), nearest first.

    Grazing incidences (|cos| < GRAZING_COS_EPS) and crossings at the
    segment endpoints are excluded.
    """
    a = vec3(a)
    b = vec3(b)
    if np.array_equal(a, b):
        raise ValueError("segment endpoints coincide")
    fs = _as_faceset(faces)
    if len(fs) == 0:
        return []
    d = b - a
    seg_len = float(np.linalg.norm(d))
    denom = fs.normal @ d  # (F,)
    cos_inc = np.abs(denom) / seg_len
    ok = cos_inc > GRAZING_COS_EPS
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.einsum("ij,ij->i", fs.origin - a, fs.normal) / np.where(ok, denom, 1.0)
    ok &= (t > ENDPOINT_EPS) & (t < 1.0 - ENDPOINT_EPS)
    if not ok.any():
        return []
    pts = a + t[:, None] * d
    rel = pts - fs.origin
    u = np.einsum("ij,ij->i", rel, fs.u_hat)
    v = np.einsum("ij,ij->i", rel, fs.v_hat)
    ok &= (u >= -FACE_TOL) & (u <= fs.u_len + FACE_TOL)
    ok &= (v >= -FACE_TOL) & (v <= fs.v_len + FACE_TOL)
    hits = [
        Hit(fs.faces[i], pts[i], float(cos_inc[i]), float(t[i] * seg_len))
        for i in np.nonzero(ok)[0]
    ]
    hits.sort(key=lambda h: h.param_along_ray)
    return hits


def line_of_sight(a, b, faces) -> bool:
    """True iff the open segment (a, b) crosses no wall face."""
    return not segment_hits(a, b, faces)


# ---------------------------------------------------------------------------
# 2-D polygon helpers (regions, footprints)
# ---------------------------------------------------------------------------


def polygon_area(polygon) -> float:
    """Unsigned area of a simple polygon (shoelace formula) [m^2]."""
    p = np.asarray(polygon, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def polygon_is_simple(polygon, tol: float = 1e-12) -> bool:
    """True when no two non-adjacent edges properly intersect."""
    p = np.asarray(polygon, dtype=float)
    n = len(p)
    if n < 3:
        return False
    edges = [(p[i], p[(i + 1) % n]) for i in range(n)]
    for i in range(n):
        a1, a2 = edges[i]
        if np.linalg.norm(a2 - a1) <= tol:
            return False
        for j in range(i + 1, n):
            if j == i or (j + 1) % n == i or (i + 1) % n == j:
                continue  # adjacent edges share a vertex
            b1, b2 = edges[j]
            if _segments_cross(a1, a2, b1, b2, tol):
                return False
    return True


def _segments_cross(a1, a2, b1, b2, tol) -> bool:
    def orient(p, q, r):
        return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

    d1 = orient(b1, b2, a1)
    d2 = orient(b1, b2, a2)
    d3 = orient(a1, a2, b1)
    d4 = orient(a1, a2, b2)
    return (d1 * d2 < -tol) and (d3 * d4 < -tol)


def points_in_polygon(points, polygon, edge_tol: float = 1e-9) -> np.ndarray:
    """Even-odd containment test for many points; boundary counts as inside."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    poly = np.asarray(polygon, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    inside = np.zeros(len(pts), dtype=bool)
    on_edge = np.zeros(len(pts), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        dx, dy = x2 - x1, y2 - y1
        seg_len = float(np.hypot(dx, dy))
        if seg_len == 0.0:
            continue
        cross = (x - x1) * dy - (y - y1) * dx
        t = ((x - x1) * dx + (y - y1) * dy) / (seg_len * seg_len)
        on_edge |= (np.abs(cross) <= edge_tol * seg_len) & (t >= -edge_tol) & (t <= 1 + edge_tol)
        with np.errstate(divide="ignore", invalid="ignore"):
            x_cross = x1 + (y - y1) * dx / (dy if dy != 0.0 else np.inf)
        inside ^= ((y1 > y) != (y2 > y)) & (x < x_cross)
    return inside | on_edge
