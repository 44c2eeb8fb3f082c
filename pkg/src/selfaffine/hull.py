"""Convex hulls of attractors: vertex families, extreme sequences, and a
certified support-direction sampler.

Vertex enumeration is exact where a closed-form family is known (mixed
real, jordan, rational-angle complex, equal-ratio mixed) and otherwise
falls back to support sampling: the digit string maximizing the
projection onto a direction d is ``a_i = sign(<M^i u, d>)``, and the
first-L digit pattern only changes when d crosses one of at most 2L tie
rays, so sampling the midpoints between consecutive tie rays enumerates
every realizable pattern.  That makes the sampled hull an inner
approximation whose support is within the truncation budget of the true
hull in every direction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import (
    COMPLEX,
    JORDAN,
    MIXED_REAL,
    POSITIVE_REAL,
    EventualAddress,
    SystemSpec,
    Word,
    bounding_set,
    digit_weights,
    periodic,
    project,
)
from .errors import DegenerateParameters
from .geometry import GEOM_TOL, ConvexPolygon, Disc, convex_hull_indices

DEFAULT_EPS_FRACTION = 1e-6  # of the bounding-set diameter
MAX_FAMILY_VERTICES = 100_000


def default_hull_eps(spec: SystemSpec) -> float:
    return DEFAULT_EPS_FRACTION * bounding_set(spec).diameter()


# ---------------------------------------------------------------------------
# assembly helpers
# ---------------------------------------------------------------------------


def _assemble(points, addresses, closed: bool, dedupe_tol: float) -> ConvexPolygon:
    pts = np.asarray(points, dtype=float)
    idx = convex_hull_indices(pts)
    ring_pts = [pts[i] for i in idx]
    ring_addr = [addresses[i] if addresses is not None else None for i in idx]
    # drop near-duplicate consecutive vertices (tolerance is absorbed in the
    # caller's truncation budget)
    kept_pts: list[np.ndarray] = []
    kept_addr: list = []
    for p, a in zip(ring_pts, ring_addr):
        if kept_pts and np.hypot(*(p - kept_pts[-1])) <= dedupe_tol:
            continue
        kept_pts.append(p)
        kept_addr.append(a)
    if len(kept_pts) > 1 and np.hypot(*(kept_pts[0] - kept_pts[-1])) <= dedupe_tol:
        kept_pts.pop()
        kept_addr.pop()
    return ConvexPolygon(
        np.array(kept_pts), closed=closed, addresses=tuple(kept_addr)
    )


# ---------------------------------------------------------------------------
# closed-form vertex families
# ---------------------------------------------------------------------------


def _family(spec: SystemSpec, block: Word, tail: Word, eps: float):
    """Vertices pi(block^k tail^inf) for k = 0, 1, ... until within eps of
    the periodic limit pi(block^inf), which is then appended."""
    limit_addr = EventualAddress(Word(), block)
    limit_pt = project(spec, limit_addr)
    out = []
    k = 0
    while k < MAX_FAMILY_VERTICES:
        addr = EventualAddress(block * k, tail)
        pt = project(spec, addr)
        out.append((addr, pt))
        if np.hypot(*(pt - limit_pt)) <= eps:
            break
        k += 1
    out.append((limit_addr, limit_pt))
    return out


def hull_mixed_real(lam: float, mu: float, eps: Optional[float] = None) -> ConvexPolygon:
    """Hull of the mixed real attractor for 0 < lam < mu < 1.

    The vertices are the four families pi((pm)^k p^inf), pi((mp)^k p^inf),
    pi((pm)^k m^inf), pi((mp)^k m^inf), truncated at eps with the periodic
    accumulation points appended.
    """
    if abs(lam - mu) <= GEOM_TOL:
        raise DegenerateParameters(
            "lam == mu is the parallelogram case; use hull_mixed_equal"
        )
    if not 0 < lam < mu < 1:
        raise ValueError("need 0 < lam < mu < 1")
    spec = SystemSpec.mixed_real(lam, mu)
    if eps is None:
        eps = default_hull_eps(spec)
    pm, mp = Word.from_str("pm"), Word.from_str("mp")
    p, m = Word.from_str("p"), Word.from_str("m")
    labeled = []
    for block, tail in ((pm, p), (mp, p), (pm, m), (mp, m)):
        labeled.extend(_family(spec, block, tail, eps))
    addrs = [a for a, _ in labeled]
    pts = [pt for _, pt in labeled]
    return _assemble(pts, addrs, closed=False, dedupe_tol=eps / 8)


def hull_jordan(nu: float, eps: Optional[float] = None) -> ConvexPolygon:
    """Hull of the jordan attractor: families pi(m^k p^inf) and pi(p^k m^inf)."""
    spec = SystemSpec.jordan(nu)
    if eps is None:
        eps = default_hull_eps(spec)
    p, m = Word.from_str("p"), Word.from_str("m")
    labeled = []
    for block, tail in ((m, p), (p, m)):
        labeled.extend(_family(spec, block, tail, eps))
    addrs = [a for a, _ in labeled]
    pts = [pt for _, pt in labeled]
    return _assemble(pts, addrs, closed=False, dedupe_tol=eps / 8)


def hull_mixed_equal(lam: float) -> ConvexPolygon:
    """Hull of the equal-ratio mixed attractor: always the parallelogram
    with half-diagonals 1/(1-lam^2) and lam/(1-lam^2) in the rotated frame
    (and the attractor fills it exactly when lam >= 1/sqrt(2))."""
    if not 0 < lam < 1:
        raise ValueError("need 0 < lam < 1")
    a = 1.0 / (1.0 - lam * lam)
    b = lam / (1.0 - lam * lam)
    corners = np.array(
        [[a + b, a - b], [a - b, a + b], [-a - b, -a + b], [-a + b, -a - b]]
    )
    addrs = (
        periodic("pm"),
        periodic("p"),
        periodic("mp"),
        periodic("m"),
    )
    return ConvexPolygon(corners, closed=True, addresses=addrs)


# ---------------------------------------------------------------------------
# complex-case extreme sequences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExtremeSequence:
    """Digit string maximizing the projection of the attractor onto the
    direction indexed by phi; positions where the rotated power is real
    (ties) are recorded and default to p."""

    phi: float
    digits: Word
    tie_positions: tuple[int, ...]


def extreme_sequence(
    kappa: complex, phi: float, length: int, tol: float = GEOM_TOL
) -> ExtremeSequence:
    """Digits a_j = sign(Im(kappa^j e^{i phi})), ties (relative to |kappa|^j)
    recorded and resolved to +1."""
    kappa = complex(kappa)
    if abs(kappa) >= 1:
        raise ValueError("need |kappa| < 1")
    if kappa.imag == 0:
        raise ValueError("kappa must be non-real")
    j = np.arange(length)
    theta = math.atan2(kappa.imag, kappa.real)
    ims = np.sin(j * theta + phi)  # Im(kappa^j e^{i phi}) / |kappa|^j
    digits = np.where(ims >= 0, 1, -1)
    ties = np.nonzero(np.abs(ims) <= tol)[0]
    return ExtremeSequence(
        phi=float(phi),
        digits=Word.from_digits(digits),
        tie_positions=tuple(int(t) for t in ties),
    )


def _tie_midpoint_directions(angles_mod_pi: np.ndarray, max_directions: int):
    """Midpoints between consecutive tie rays on the full circle."""
    rays = np.concatenate([angles_mod_pi, angles_mod_pi + math.pi]) % (2 * math.pi)
    rays = np.unique(np.round(rays, 12))
    rays.sort()
    if len(rays) == 0:
        rays = np.array([0.0])
    gaps_next = np.roll(rays, -1)
    gaps_next[-1] += 2 * math.pi
    mids = (rays + gaps_next) / 2.0 % (2 * math.pi)
    if len(mids) > max_directions:
        mids = np.linspace(0, 2 * math.pi, max_directions, endpoint=False)
    return mids


def hull_complex_rational(
    rho: float, p: int, q: int, eps: Optional[float] = None
) -> ConvexPolygon:
    """Exact hull for kappa = rho e^{2 pi i p/q}: a 2q'-gon with q' = q for
    odd q and q/2 for even q, each vertex the exact projection of a
    periodic extreme address."""
    if math.gcd(p, q) != 1:
        raise ValueError("need gcd(p, q) = 1")
    if not 0 < rho < 1:
        raise ValueError("need 0 < rho < 1")
    q = abs(q)
    if q <= 2:
        raise DegenerateParameters("angle 0 or pi gives a real (degenerate) system")
    theta = 2.0 * math.pi * p / q
    spec = SystemSpec.complex_pair(rho * math.cos(theta), rho * math.sin(theta))
    q_prime = q if q % 2 else q // 2

    tie_angles = np.unique(np.round((-theta * np.arange(q)) % math.pi, 12))
    mids = _tie_midpoint_directions(tie_angles, max_directions=4 * q)

    labeled_pts = []
    labeled_addrs = []
    for phi in mids:
        seq = extreme_sequence(spec.kappa, float(phi), q, tol=1e-12)
        addr = EventualAddress(Word(), seq.digits)
        labeled_addrs.append(addr)
        labeled_pts.append(project(spec, addr))
    if eps is None:
        dedupe = 1e-9 * max(1.0, float(np.abs(labeled_pts).max()))
    else:
        dedupe = eps / 8.0
    return _assemble(labeled_pts, labeled_addrs, closed=True, dedupe_tol=dedupe)


def hull_complex_irrational(
    kappa: complex,
    eps: Optional[float] = None,
    max_directions: int = 100_000,
) -> ConvexPolygon:
    """Truncated hull for a caller-declared irrational angle: extreme
    sequence prefixes at every tie-midpoint direction (one per realizable
    first-L pattern), deduplicated and hulled."""
    kappa = complex(kappa)
    spec = SystemSpec.complex_pair(kappa.real, kappa.imag)
    return support_hull(spec, eps=eps, max_directions=max_directions)


# ---------------------------------------------------------------------------
# generic support sampling
# ---------------------------------------------------------------------------


def _truncation_length(spec: SystemSpec, budget: float) -> int:
    """Smallest L with image of the bounding set under M^L inside a ball of
    radius ``budget``, so discarded digit tails move points by at most it."""
    bset = bounding_set(spec)
    if isinstance(bset.shape, Disc):
        corners = None
        radius = bset.shape.radius
    else:
        corners = bset.shape.vertices
        radius = None
    m = spec.matrix
    power = np.eye(2)
    for L in range(1, 200_000):
        power = power @ m
        if corners is None:
            reach = float(np.linalg.norm(power, 2)) * radius
        else:
            img = corners @ power.T
            reach = float(np.max(np.hypot(img[:, 0], img[:, 1])))
        if reach <= budget:
            return L
    raise RuntimeError("truncation length search did not converge")


def support_hull(
    spec: SystemSpec,
    eps: Optional[float] = None,
    max_directions: int = 100_000,
) -> ConvexPolygon:
    """Certified inner hull by support-direction sampling, for any case.

    With prefix length L chosen so tails move points by at most eps/4 and
    directions at all tie-ray midpoints, the returned polygon P satisfies
    sup_d (h_A(d) - h_P(d)) <= eps/2: attractor samples stay inside P
    under per-edge slack eps.
    """
    if eps is None:
        eps = default_hull_eps(spec)
    L = _truncation_length(spec, eps / 4.0)
    w = digit_weights(spec, L)  # columns M^i u
    norms = np.hypot(w[0], w[1])
    good = norms > 0
    tie = (np.arctan2(w[1, good], w[0, good]) + math.pi / 2.0) % math.pi
    mids = _tie_midpoint_directions(np.unique(np.round(tie, 12)), max_directions)
    dirs = np.stack([np.cos(mids), np.sin(mids)], axis=1)
    digits = np.where(dirs @ w >= 0, 1.0, -1.0)  # (n_dirs, L)
    digits_unique = np.unique(digits, axis=0)
    pts = digits_unique @ w.T
    return _assemble(pts, None, closed=False, dedupe_tol=eps / 8.0)


def attractor_hull(spec: SystemSpec, eps: Optional[float] = None) -> ConvexPolygon:
    """Case dispatcher used by membership and uniqueness layers."""
    if eps is None:
        eps = default_hull_eps(spec)
    if spec.case == MIXED_REAL:
        lam, mu = spec.params
        if abs(lam - mu) <= GEOM_TOL:
            return hull_mixed_equal(lam)
        if lam < mu:
            return hull_mixed_real(lam, mu, eps)
        return support_hull(spec, eps)
    if spec.case == JORDAN:
        return hull_jordan(spec.params[0], eps)
    if spec.case in (POSITIVE_REAL, COMPLEX):
        return support_hull(spec, eps)
    raise ValueError(f"unknown case {spec.case!r}")
