"""Planar convex geometry: polygons, discs, hulls, separations.

Everything here is plain Euclidean geometry with explicit tolerances;
no knowledge of iterated function systems.  Polygons are immutable,
counter-clockwise, and may be flagged ``closed=False`` when they are a
finite truncation of a convex set with infinitely many vertices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

GEOM_TOL = 1e-9
"""Global geometric tolerance: containment and disjointness margins are
only trusted when they exceed this times the local scale."""


def _as_points(vertices) -> np.ndarray:
    pts = np.asarray(vertices, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("expected an (n, 2) array of vertices")
    return pts


def convex_hull_indices(points: np.ndarray, tol: float = 1e-12) -> list[int]:
    """Indices of hull vertices in counter-clockwise order (monotone chain).

    Points within ``tol`` of collinear are treated as interior, so the
    returned polygon is strictly convex.
    """
    pts = _as_points(points)
    n = len(pts)
    if n == 0:
        return []
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    scale = max(1.0, float(np.abs(pts).max()))
    eps = tol * scale * scale

    def build(idx_iter):
        chain: list[int] = []
        for i in idx_iter:
            while len(chain) >= 2:
                o, a = pts[chain[-2]], pts[chain[-1]]
                cross = (a[0] - o[0]) * (pts[i][1] - o[1]) - (a[1] - o[1]) * (pts[i][0] - o[0])
                if cross <= eps:
                    chain.pop()
                else:
                    break
            chain.append(i)
        return chain

    lower = build(order)
    upper = build(order[::-1])
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 0:
        return [int(order[0])]
    return [int(i) for i in hull]


@dataclass(frozen=True, eq=False)
class ConvexPolygon:
    """Strictly convex polygon with counter-clockwise vertices.

    ``closed`` is False for truncations of infinite-vertex hulls.
    ``addresses`` optionally records, per vertex, the symbolic address
    that attains it (used by hull constructions; None elsewhere).
    """

    vertices: np.ndarray
    closed: bool = True
    addresses: Optional[tuple] = None

    def __post_init__(self):
        pts = _as_points(self.vertices)
        object.__setattr__(self, "vertices", pts)
        pts.flags.writeable = False
        if len(pts) >= 3:
            area2 = _signed_area2(pts)
            if area2 <= 0:
                raise ValueError("vertices must be counter-clockwise and non-degenerate")
        if self.addresses is not None and len(self.addresses) != len(pts):
            raise ValueError("addresses must parallel vertices")

    def __len__(self) -> int:
        return len(self.vertices)

    # -- queries ---------------------------------------------------------

    def edge_normals_offsets(self) -> tuple[np.ndarray, np.ndarray]:
        """Outward unit normals and offsets: the polygon is exactly
        {x : normals @ x <= offsets}."""
        v = self.vertices
        e = np.roll(v, -1, axis=0) - v
        normals = np.stack([e[:, 1], -e[:, 0]], axis=1)
        lengths = np.linalg.norm(normals, axis=1)
        lengths[lengths == 0] = 1.0
        normals = normals / lengths[:, None]
        offsets = np.einsum("ij,ij->i", normals, v)
        return normals, offsets

    def contains(self, point, slack: float = 0.0) -> bool:
        """Half-plane containment with per-edge slack (the inflation used
        everywhere in this library: support offsets relaxed by ``slack``)."""
        p = np.asarray(point, dtype=float)
        if len(self.vertices) == 1:
            return bool(np.hypot(*(p - self.vertices[0])) <= slack)
        if len(self.vertices) == 2:
            return self.distance(p) <= slack
        normals, offsets = self.edge_normals_offsets()
        return bool(np.all(normals @ p <= offsets + slack))

    def contains_many(self, points: np.ndarray, slack: float = 0.0) -> np.ndarray:
        pts = _as_points(points)
        if len(self.vertices) < 3:
            return np.array([self.contains(p, slack) for p in pts])
        normals, offsets = self.edge_normals_offsets()
        return np.all(pts @ normals.T <= offsets[None, :] + slack, axis=1)

    def support(self, direction) -> float:
        d = np.asarray(direction, dtype=float)
        return float(np.max(self.vertices @ d))

    def diameter(self) -> float:
        v = self.vertices
        if len(v) == 1:
            return 0.0
        d2 = np.sum((v[:, None, :] - v[None, :, :]) ** 2, axis=-1)
        return float(math.sqrt(d2.max()))

    def distance(self, point) -> float:
        """Euclidean distance from a point to the polygon (0 if inside)."""
        p = np.asarray(point, dtype=float)
        if len(self.vertices) >= 3 and self.contains(p):
            return 0.0
        return float(points_to_polygon_distance(self.vertices, p[None, :])[0])

    def distance_chebyshev(self, point) -> float:
        """L-infinity distance from a point to the polygon (0 if inside)."""
        p = np.asarray(point, dtype=float)
        if len(self.vertices) >= 3 and self.contains(p):
            return 0.0
        return min(
            _segment_distance_chebyshev(p, a, b)
            for a, b in zip(self.vertices, np.roll(self.vertices, -1, axis=0))
        )

    def strict_convexity_margin(self) -> float:
        """Smallest turn (cross product of consecutive edges, normalized by
        edge lengths) around the boundary; positive for strictly convex."""
        v = self.vertices
        if len(v) < 3:
            return 0.0
        e = np.roll(v, -1, axis=0) - v
        e_prev = np.roll(e, 1, axis=0)
        cross = e_prev[:, 0] * e[:, 1] - e_prev[:, 1] * e[:, 0]
        norms = np.linalg.norm(e_prev, axis=1) * np.linalg.norm(e, axis=1)
        norms[norms == 0] = 1.0
        return float(np.min(cross / norms))

    def transform(self, linear: np.ndarray, offset: np.ndarray) -> "ConvexPolygon":
        """Image under an affine map, re-oriented counter-clockwise."""
        pts = self.vertices @ np.asarray(linear, float).T + np.asarray(offset, float)
        if len(pts) >= 3 and _signed_area2(pts) < 0:
            pts = pts[::-1]
        return ConvexPolygon(pts, closed=self.closed)

    def scaled_about_center(self, factor: float) -> "ConvexPolygon":
        c = self.vertices.mean(axis=0)
        return ConvexPolygon((self.vertices - c) * factor + c, closed=self.closed)


def _signed_area2(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def _segment_distance_chebyshev(p, a, b) -> float:
    # minimize max(|dx(t)|, |dy(t)|) over the segment; the minimum is at an
    # endpoint, at a zero of one coordinate, or where |dx| == |dy|.
    dx0, dy0 = a[0] - p[0], a[1] - p[1]
    sx, sy = b[0] - a[0], b[1] - a[1]
    candidates = [0.0, 1.0]
    for c0, s in ((dx0, sx), (dy0, sy)):
        if s != 0.0:
            candidates.append(-c0 / s)
    for sgn in (1.0, -1.0):
        denom = sx - sgn * sy
        if denom != 0.0:
            candidates.append(-(dx0 - sgn * dy0) / denom)
    best = math.inf
    for t in candidates:
        if 0.0 <= t <= 1.0:
            val = max(abs(dx0 + t * sx), abs(dy0 + t * sy))
            best = min(best, val)
    return best


def points_to_polygon_distance(vertices: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Euclidean distance from each point to the polygon boundary
    (vectorized over points and edges; does not test interiority)."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a = vertices
    b = np.roll(vertices, -1, axis=0)
    ab = b - a  # (E, 2)
    denom = np.einsum("ij,ij->i", ab, ab)
    denom = np.where(denom == 0, 1.0, denom)
    ap = pts[:, None, :] - a[None, :, :]  # (P, E, 2)
    t = np.clip(np.einsum("pej,ej->pe", ap, ab) / denom, 0.0, 1.0)
    closest = a[None, :, :] + t[..., None] * ab[None, :, :]
    d = np.hypot(*(pts[:, None, :] - closest).transpose(2, 0, 1))
    return d.min(axis=1)


def polygon_distance(p: "ConvexPolygon", q: "ConvexPolygon") -> float:
    """Euclidean distance between two convex polygons (0 if they intersect).

    Uses the separating-axis test over both polygons' edge normals, which is
    exact for convex shapes; the distance itself is the minimum vertex-to-edge
    distance once disjointness is established.
    """
    if _polygons_intersect(p, q):
        return 0.0
    d1 = points_to_polygon_distance(p.vertices, q.vertices).min()
    d2 = points_to_polygon_distance(q.vertices, p.vertices).min()
    return float(min(d1, d2))


def _polygons_intersect(p: "ConvexPolygon", q: "ConvexPolygon") -> bool:
    return convex_vertices_intersect(p.vertices, q.vertices)


def convex_vertices_intersect(va: np.ndarray, vb: np.ndarray) -> bool:
    """Separating-axis test on two convex vertex rings (any orientation)."""
    for v1, v2 in ((va, vb), (vb, va)):
        edges = np.roll(v1, -1, axis=0) - v1
        axes = np.stack([edges[:, 1], -edges[:, 0]], axis=1)
        lens = np.hypot(axes[:, 0], axes[:, 1])
        axes = axes[lens > 0]
        if len(axes) == 0:
            continue
        pa = va @ axes.T
        pb = vb @ axes.T
        if np.any(pa.max(axis=0) < pb.min(axis=0)) or np.any(
            pb.max(axis=0) < pa.min(axis=0)
        ):
            return False
    return True


def convex_vertices_distance(va: np.ndarray, vb: np.ndarray) -> float:
    """Euclidean distance between the convex hulls of two vertex rings
    (0 if they intersect)."""
    if convex_vertices_intersect(va, vb):
        return 0.0
    d1 = points_to_polygon_distance(va, vb).min()
    d2 = points_to_polygon_distance(vb, va).min()
    return float(min(d1, d2))


@dataclass(frozen=True)
class Disc:
    """Closed disc; the bounding shape for conformal (complex) systems."""

    center: tuple[float, float]
    radius: float

    def contains(self, point, slack: float = 0.0) -> bool:
        dx = point[0] - self.center[0]
        dy = point[1] - self.center[1]
        return math.hypot(dx, dy) <= self.radius + slack

    def support(self, direction) -> float:
        d = np.asarray(direction, dtype=float)
        return float(np.dot(self.center, d) + self.radius * np.hypot(*d))

    def diameter(self) -> float:
        return 2.0 * self.radius

    def distance(self, point) -> float:
        d = math.hypot(point[0] - self.center[0], point[1] - self.center[1])
        return max(0.0, d - self.radius)

    def distance_chebyshev(self, point) -> float:
        a = abs(point[0] - self.center[0])
        b = abs(point[1] - self.center[1])
        if a < b:
            a, b = b, a
        if math.hypot(a, b) <= self.radius:
            return 0.0
        if a - self.radius >= b:
            return a - self.radius
        # touching configuration with both coordinates active
        disc2 = 2.0 * self.radius * self.radius - (a - b) ** 2
        return 0.5 * ((a + b) - math.sqrt(max(disc2, 0.0)))


def box_polygon(x_lo: float, x_hi: float, y_lo: float, y_hi: float) -> ConvexPolygon:
    return ConvexPolygon(
        np.array([[x_lo, y_lo], [x_hi, y_lo], [x_hi, y_hi], [x_lo, y_hi]], dtype=float)
    )
