"""Certified point membership and parameter-region scans.

Membership is decided on the binary cylinder tree.  Every cylinder word w
gets the over-approximation ``bound(w) = map(w)(K0)`` with K0 a
forward-invariant starting set (the coordinatewise box for real spectra,
the disc for the complex case), so bounds nest along the tree and pruning
is sound: once the query point is outside every surviving bound the point
is certifiably not in the attractor.  Certified-In answers are strict:
either an interior certificate covers the point (directly or through a
cylinder preimage) or a cylinder's limit point lands within tolerance.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import (
    COMPLEX,
    JORDAN,
    MIXED_REAL,
    SystemSpec,
    Word,
    invariant_box,
    periodic,
    project,
    project_words,
)
from .errors import CoefficientSumExceeded, ConditionsFailed
from .expansion import (
    InteriorCertificate,
    expand_point,
    interior_radius,
    jordan_poly,
    mixed_real_poly,
)
from .geometry import GEOM_TOL, Disc, _segment_distance_chebyshev

DEFAULT_MAX_NODES = 100_000


# ---------------------------------------------------------------------------
# verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class In:
    address_prefix: Word
    residual_error: float
    kind: str = "in"


@dataclass(frozen=True)
class Out:
    depth: int
    min_separation: float
    kind: str = "out"


@dataclass(frozen=True)
class Unknown:
    depth: int
    kind: str = "unknown"


MembershipVerdict = Union[In, Out, Unknown]


def default_certificate(spec: SystemSpec) -> Optional[InteriorCertificate]:
    """Interior certificate from the shipped polynomial constructors, when
    the parameters admit one."""
    try:
        if spec.case == MIXED_REAL:
            lam, mu = spec.params
            return interior_radius(spec, mixed_real_poly(lam, mu))
        if spec.case == JORDAN:
            return interior_radius(spec, jordan_poly(spec.params[0]))
    except (CoefficientSumExceeded, ConditionsFailed):
        return None
    return None


# ---------------------------------------------------------------------------
# cylinder bounds in plain floats (hot path)
# ---------------------------------------------------------------------------


def _poly_contains(corners, px, py, slack) -> bool:
    # orientation-agnostic half-plane test with absolute slack
    n = len(corners)
    area2 = 0.0
    for i in range(n):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % n]
        area2 += x1 * y2 - y1 * x2
    orient = 1.0 if area2 >= 0 else -1.0
    for i in range(n):
        x1, y1 = corners[i]
        x2, y2 = corners[(i + 1) % n]
        ex, ey = x2 - x1, y2 - y1
        elen = math.hypot(ex, ey)
        if elen == 0.0:
            continue
        cross = ex * (py - y1) - ey * (px - x1)
        if orient * cross < -slack * elen:
            return False
    return True


def _poly_chebyshev(corners, px, py) -> float:
    if _poly_contains(corners, px, py, 0.0):
        return 0.0
    p = np.array([px, py])
    best = math.inf
    n = len(corners)
    for i in range(n):
        a = np.array(corners[i])
        b = np.array(corners[(i + 1) % n])
        best = min(best, _segment_distance_chebyshev(p, a, b))
    return best


class _BoxNodes:
    """Cylinder bounds as affine images of the invariant box."""

    def __init__(self, spec: SystemSpec):
        box = invariant_box(spec)
        self.corners0 = [tuple(v) for v in box.vertices]
        m = spec.matrix
        self.m = (float(m[0, 0]), float(m[0, 1]), float(m[1, 0]), float(m[1, 1]))
        u = spec.translation
        self.u = (float(u[0]), float(u[1]))
        self.diameter = box.diameter()

    def root(self):
        return (1.0, 0.0, 0.0, 1.0, 0.0, 0.0)  # linear row-major + offset

    def child(self, state, digit):
        a, b, c, d, ox, oy = state
        m00, m01, m10, m11 = self.m
        ux, uy = self.u
        # compose on the right with T_digit: state o T_digit
        na = a * m00 + b * m10
        nb = a * m01 + b * m11
        nc = c * m00 + d * m10
        nd = c * m01 + d * m11
        nox = ox + digit * (a * ux + b * uy)
        noy = oy + digit * (c * ux + d * uy)
        return (na, nb, nc, nd, nox, noy)

    def corners(self, state):
        a, b, c, d, ox, oy = state
        return [(a * x + b * y + ox, c * x + d * y + oy) for x, y in self.corners0]

    def contains(self, state, px, py, slack):
        return _poly_contains(self.corners(state), px, py, slack)

    def chebyshev(self, state, px, py):
        return _poly_chebyshev(self.corners(state), px, py)

    def center(self, state):
        return (state[4], state[5])

    def preimage(self, state, px, py):
        a, b, c, d, ox, oy = state
        det = a * d - b * c
        qx, qy = px - ox, py - oy
        return ((d * qx - b * qy) / det, (-c * qx + a * qy) / det)


class _DiscNodes:
    """Cylinder bounds as discs (conformal linear part keeps discs round)."""

    def __init__(self, spec: SystemSpec):
        kappa = spec.kappa
        self.kre, self.kim = kappa.real, kappa.imag
        self.radius0 = 1.0 / (1.0 - abs(kappa))
        self.diameter = 2.0 * self.radius0

    def root(self):
        return (1.0, 0.0, 0.0, 0.0)  # scale (complex) + center

    def child(self, state, digit):
        sre, sim, cx, cy = state
        nre = sre * self.kre - sim * self.kim
        nim = sre * self.kim + sim * self.kre
        return (nre, nim, cx + digit * sre, cy + digit * sim)

    def contains(self, state, px, py, slack):
        sre, sim, cx, cy = state
        r = math.hypot(sre, sim) * self.radius0
        return math.hypot(px - cx, py - cy) <= r + slack

    def chebyshev(self, state, px, py):
        sre, sim, cx, cy = state
        r = math.hypot(sre, sim) * self.radius0
        return Disc((cx, cy), r).distance_chebyshev((px, py))

    def center(self, state):
        return (state[2], state[3])

    def preimage(self, state, px, py):
        sre, sim, cx, cy = state
        qx, qy = px - cx, py - cy
        den = sre * sre + sim * sim
        return ((qx * sre + qy * sim) / den, (qy * sre - qx * sim) / den)


def _nodes_for(spec: SystemSpec):
    if spec.case == COMPLEX:
        return _DiscNodes(spec)
    return _BoxNodes(spec)


# ---------------------------------------------------------------------------
# decide_point
# ---------------------------------------------------------------------------


def decide_point(
    spec: SystemSpec,
    point,
    max_depth: int,
    *,
    max_nodes: int = DEFAULT_MAX_NODES,
    tau: float = GEOM_TOL,
    point_tol: float = 1e-9,
    certificate: Optional[InteriorCertificate] = None,
    use_certificate: bool = True,
) -> MembershipVerdict:
    """Best-first branch and bound over cylinder words.

    Out is certified (all branches pruned with positive Chebyshev margins),
    In is certified (interior certificate through a surviving cylinder's
    preimage, or a cylinder limit point within ``point_tol``), and Unknown
    is the honest fallback when neither materializes by ``max_depth`` or
    within the node budget.
    """
    if max_depth < 1:
        raise ValueError("max_depth must be at least 1")
    px, py = float(point[0]), float(point[1])
    nodes = _nodes_for(spec)
    slack = tau * max(1.0, nodes.diameter)

    if certificate is None and use_certificate:
        certificate = default_certificate(spec)
    delta = certificate.delta if certificate is not None else None

    limit_tail = project(spec, periodic("p"))
    ltx, lty = float(limit_tail[0]), float(limit_tail[1])

    root = nodes.root()
    if not nodes.contains(root, px, py, slack):
        return Out(depth=0, min_separation=nodes.chebyshev(root, px, py))

    heap = []
    counter = 0
    heapq.heappush(heap, (0.0, counter, 0, (), root))
    explored = 0
    min_sep = math.inf
    deepest_pruned = 0
    deepest_seen = 0
    survivors_at_depth = False

    while heap:
        if explored >= max_nodes:
            return Unknown(depth=deepest_seen)
        _, _, depth, word, state = heapq.heappop(heap)
        explored += 1
        deepest_seen = max(deepest_seen, depth)

        # certified-In via the interior certificate through this cylinder
        if delta is not None:
            qx, qy = nodes.preimage(state, px, py)
            if max(abs(qx), abs(qy)) < delta * (1.0 - 1e-9):
                run = expand_point(
                    spec, certificate.poly, (qx, qy), 600, certificate
                )
                digits = Word(tuple(word)) + run.digits
                pt = project_words(spec, np.array(digits.digits))[0]
                resid = math.hypot(pt[0] - px, pt[1] - py)
                return In(address_prefix=digits, residual_error=resid)

        # certified-In via a cylinder limit point
        a, b, c, d = state[0], state[1], state[2], state[3]
        if spec.case == COMPLEX:
            lx = state[2] + state[0] * ltx - state[1] * lty
            ly = state[3] + state[1] * ltx + state[0] * lty
        else:
            lx = a * ltx + b * lty + state[4]
            ly = c * ltx + d * lty + state[5]
        dist_limit = math.hypot(lx - px, ly - py)
        if dist_limit <= point_tol:
            return In(address_prefix=Word(tuple(word)), residual_error=dist_limit)

        if depth >= max_depth:
            survivors_at_depth = True
            continue

        for digit in (1, -1):
            child = nodes.child(state, digit)
            if nodes.contains(child, px, py, slack):
                cx, cy = nodes.center(child)
                prio = math.hypot(cx - px, cy - py)
                counter += 1
                heapq.heappush(heap, (prio, counter, depth + 1, word + (digit,), child))
            else:
                d_cheb = nodes.chebyshev(child, px, py)
                min_sep = min(min_sep, d_cheb)
                deepest_pruned = max(deepest_pruned, depth + 1)

    if survivors_at_depth:
        return Unknown(depth=max_depth)
    return Out(depth=deepest_pruned, min_separation=min_sep)


# ---------------------------------------------------------------------------
# region scans
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CellResult:
    params: tuple[float, ...]
    verdict: str  # "certified-in" | "certified-out" | "unknown"
    certificate_id: Optional[str] = None
    depth: Optional[int] = None
    min_separation: Optional[float] = None


@dataclass(frozen=True, eq=False)
class RegionScan:
    case: str
    rect: tuple
    resolution: tuple[int, ...]
    cells: tuple[CellResult, ...]
    certificates: dict

    def to_csv(self) -> str:
        if self.case == JORDAN:
            lines = ["nu,verdict,certificate_id"]
            for cell in self.cells:
                lines.append(
                    f"{cell.params[0]:.12g},{cell.verdict},{cell.certificate_id or ''}"
                )
        else:
            lines = ["lambda,mu,verdict,certificate_id"]
            for cell in self.cells:
                lines.append(
                    f"{cell.params[0]:.12g},{cell.params[1]:.12g},"
                    f"{cell.verdict},{cell.certificate_id or ''}"
                )
        return "\n".join(lines) + "\n"

    def verdict_grid(self) -> np.ndarray:
        order = {"certified-in": 1, "certified-out": -1, "unknown": 0}
        vals = np.array([order[c.verdict] for c in self.cells])
        return vals.reshape(self.resolution)


def _scan_cell(args) -> tuple[int, str, Optional[int], Optional[float]]:
    index, case, params, max_depth, max_nodes = args
    if case == MIXED_REAL:
        spec = SystemSpec.mixed_real(*params)
    else:
        spec = SystemSpec.jordan(*params)
    cert = default_certificate(spec)
    if cert is not None:
        return index, "certified-in", None, None
    verdict = decide_point(
        spec, (0.0, 0.0), max_depth, max_nodes=max_nodes, use_certificate=False
    )
    if isinstance(verdict, Out):
        return index, "certified-out", verdict.depth, verdict.min_separation
    return index, "unknown", getattr(verdict, "depth", None), None


def scan_region(
    case: str,
    rect,
    resolution,
    max_depth: int,
    *,
    max_nodes: int = 4000,
    threads: Optional[int] = None,
) -> RegionScan:
    """Classify "(0,0) interior?" over a parameter grid.

    Each cell evaluates only its center parameter.  Cells are independent;
    ``threads`` caps worker parallelism (processes), and the output ordering
    is by cell index regardless of the worker count.
    """
    if case not in (MIXED_REAL, JORDAN):
        raise ValueError("scan_region supports the mixed_real and jordan cases")

    if case == MIXED_REAL:
        (l_lo, l_hi), (m_lo, m_hi) = rect
        if isinstance(resolution, int):
            resolution = (resolution, resolution)
        nx, ny = resolution
        centers = [
            (
                l_lo + (i + 0.5) * (l_hi - l_lo) / nx,
                m_lo + (j + 0.5) * (m_hi - m_lo) / ny,
            )
            for i in range(nx)
            for j in range(ny)
        ]
        shape = (nx, ny)
    else:
        lo, hi = rect
        n = resolution if isinstance(resolution, int) else resolution[0]
        centers = [(lo + (i + 0.5) * (hi - lo) / n,) for i in range(n)]
        shape = (n,)

    jobs = [(i, case, params, max_depth, max_nodes) for i, params in enumerate(centers)]
    results: list = [None] * len(jobs)

    n_workers = _resolve_threads(threads)
    if n_workers > 1 and len(jobs) > 8:
        try:
            import multiprocessing as mp

            with mp.Pool(n_workers) as pool:
                for res in pool.imap_unordered(_scan_cell, jobs, chunksize=8):
                    results[res[0]] = res
        except (OSError, ValueError):
            results = [_scan_cell(job) for job in jobs]
    else:
        results = [_scan_cell(job) for job in jobs]

    cells = []
    certificates: dict = {}
    for index, verdict, depth, min_sep in results:
        params = centers[index]
        cert_id = None
        if verdict == "certified-in":
            cert_id = f"cell-{index}"
            spec = (
                SystemSpec.mixed_real(*params)
                if case == MIXED_REAL
                else SystemSpec.jordan(*params)
            )
            certificates[cert_id] = default_certificate(spec)
        cells.append(
            CellResult(
                params=params,
                verdict=verdict,
                certificate_id=cert_id,
                depth=depth,
                min_separation=min_sep,
            )
        )
    return RegionScan(
        case=case,
        rect=rect,
        resolution=shape,
        cells=tuple(cells),
        certificates=certificates,
    )


def _resolve_threads(threads: Optional[int]) -> int:
    if threads is not None:
        return max(1, threads)
    import os

    env = os.environ.get("SELFAFFINE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return min(os.cpu_count() or 1, 8)
