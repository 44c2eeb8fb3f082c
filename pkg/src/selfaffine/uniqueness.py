"""Certified lower bounds on the set of unique addresses.

The workhorse is a conservative checker for the four cylinder-disjointness
conditions that force every shift of a two-block code word to determine
its first digit.  Cylinders are over-approximated by affine images of an
attractor-hull polygon inflated to provably contain the attractor, so a
positive separation between over-approximations certifies disjointness of
the true cylinder images.  On top sit template searches per normal form,
code unambiguity (dangling-suffix iteration), entropy of the two-word
monoid, and the one-dimensional classification by the golden ratio and
the Komornik-Loreti constant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .core import (
    COMPLEX,
    JORDAN,
    MIXED_REAL,
    POSITIVE_REAL,
    SystemSpec,
    Word,
    affine_of_word,
)
from .errors import CannotSeparate, SearchExhausted
from .geometry import (
    GEOM_TOL,
    ConvexPolygon,
    convex_vertices_distance,
    points_to_polygon_distance,
)
from .hull import attractor_hull, extreme_sequence

GOLDEN_RATIO = (1.0 + math.sqrt(5.0)) / 2.0


# ---------------------------------------------------------------------------
# conservative cylinder geometry
# ---------------------------------------------------------------------------


class CylinderChecker:
    """Shared geometry for Lemma-style disjointness checks.

    The base polygon is the attractor hull scaled about the origin just
    enough to absorb its truncation slack, so it provably contains the
    attractor; every cylinder bound is an exact affine image of it.
    """

    def __init__(self, spec: SystemSpec, hull_eps: Optional[float] = None):
        self.spec = spec
        hull = attractor_hull(spec, hull_eps)
        eps = hull_eps
        if eps is None:
            from .hull import default_hull_eps

            eps = default_hull_eps(spec)
        normals, offsets = hull.edge_normals_offsets()
        r_inner = float(offsets.min())
        if r_inner <= 0:
            raise CannotSeparate("hull does not strictly surround the origin")
        # support slack eps -> containment after scaling by 1 + eps/r_inner
        scale = 1.0 + (eps / r_inner) + 1e-12
        self.poly = ConvexPolygon(hull.vertices * scale, closed=True)
        self.scale_ref = max(1.0, self.poly.diameter())
        self._flip_bounds = {
            s: self.poly.transform(spec.map(s).linear, spec.map(s).offset)
            for s in (-1, 1)
        }
        self._flip_normals = {
            s: self._flip_bounds[s].edge_normals_offsets() for s in (-1, 1)
        }

    def flip_bound(self, digit: int) -> ConvexPolygon:
        return self._flip_bounds[digit]

    def word_bound_vertices(self, word: Word) -> np.ndarray:
        amap = affine_of_word(self.spec, word)
        return self.poly.vertices @ amap.linear.T + amap.offset

    def separation(self, word: Word, flip_digit: int) -> float:
        """Euclidean distance between the cylinder bound of ``word`` and the
        one-digit cylinder bound of ``flip_digit`` (0 when they meet).

        Fast path: distance from the word bound's circumcenter minus its
        circumradius (a sound lower bound); exact hull-to-hull distance only
        when that is inconclusive.
        """
        verts = self.word_bound_vertices(word)
        center = verts.mean(axis=0)
        radius = float(np.max(np.hypot(*(verts - center).T)))
        normals, offsets = self._flip_normals[flip_digit]
        flip_poly = self._flip_bounds[flip_digit]
        if np.all(normals @ center <= offsets):
            return 0.0  # circumcenter inside the flip bound: definite overlap
        quick = (
            float(points_to_polygon_distance(flip_poly.vertices, center[None, :])[0])
            - radius
        )
        if quick > 0:
            return quick
        return convex_vertices_distance(verts, flip_poly.vertices)


def check_lemma_conditions(
    spec: SystemSpec,
    u: Word,
    v: Word,
    w: Word,
    *,
    checker: Optional[CylinderChecker] = None,
    tau: float = GEOM_TOL,
) -> tuple[float, float, float, float]:
    """Margins of the four disjointness condition families for (u, v, w).

    Family 1: [u_i.. u_l  v  u] vs [flip(u_i)]   for each suffix of u
    Family 2: [v_j.. v_k  u]    vs [flip(v_j)]   for each suffix of v
    Families 3 and 4: the same with w in place of v.

    Raises CannotSeparate (inconclusive, not a disproof) when any checked
    pair of over-approximations fails to separate by more than tau times
    the reference scale.
    """
    if len(u) == 0 or len(v) == 0 or len(w) == 0:
        raise ValueError("u, v, w must be nonempty")
    if (u + v).digits == (u + w).digits:
        raise ValueError("uv and uw must differ")
    if checker is None:
        checker = CylinderChecker(spec)

    def family_suffix_block(base: Word, block: Word) -> float:
        worst = math.inf
        for i in range(len(base)):
            word = base[i:] + block + base
            margin = checker.separation(word, -base[i])
            worst = min(worst, margin)
            if worst <= tau * checker.scale_ref:
                raise CannotSeparate(
                    f"cylinder bounds overlap for suffix {base[i:]} + {block}"
                )
        return worst

    def family_block_suffix(block: Word, base: Word) -> float:
        worst = math.inf
        for j in range(len(block)):
            word = block[j:] + base
            margin = checker.separation(word, -block[j])
            worst = min(worst, margin)
            if worst <= tau * checker.scale_ref:
                raise CannotSeparate(
                    f"cylinder bounds overlap for suffix {block[j:]} of a block"
                )
        return worst

    m1 = family_suffix_block(u, v)
    m2 = family_block_suffix(v, u)
    m3 = family_suffix_block(u, w)
    m4 = family_block_suffix(w, u)
    return (m1, m2, m3, m4)


# ---------------------------------------------------------------------------
# code unambiguity and entropy
# ---------------------------------------------------------------------------


def is_unambiguous(x: Word, y: Word) -> bool:
    """Sardinas-Patterson dangling-suffix iteration on the two-word set
    {x, y}: True iff every concatenation factors uniquely."""
    a, b = str(x), str(y)
    if not a or not b:
        raise ValueError("words must be nonempty")
    if a == b:
        raise ValueError("words must differ")
    code = {a, b}

    def residuals(left: str, right: str) -> set[str]:
        # right = left . t; the empty residual is meaningful here (it is the
        # ambiguity witness), the initial step below excludes it separately
        return {right[len(left):]} if right.startswith(left) else set()

    current: set[str] = set()
    for c1 in code:
        for c2 in code:
            if c1 != c2:
                current |= residuals(c1, c2)
    current.discard("")
    seen: set[frozenset] = set()
    while current:
        if "" in current:
            return False
        key = frozenset(current)
        if key in seen:
            return True
        seen.add(key)
        nxt: set[str] = set()
        for d in current:
            for c in code:
                nxt |= residuals(c, d)
                nxt |= residuals(d, c)
        current = nxt
    return True


def code_entropy(len1: int, len2: int, tol: float = 1e-12) -> float:
    """Topological entropy of the free monoid on two words of the given
    lengths: log of the unique root x > 1 of x^-len1 + x^-len2 = 1."""
    if len1 < 1 or len2 < 1:
        raise ValueError("lengths must be at least 1")

    def f(x: float) -> float:
        return x ** (-len1) + x ** (-len2) - 1.0

    lo, hi = 1.0 + 1e-12, 2.0
    if f(hi) > 0:
        hi = 2.0 + 1e-9
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return math.log(0.5 * (lo + hi))


# ---------------------------------------------------------------------------
# Thue-Morse and the Komornik-Loreti constant
# ---------------------------------------------------------------------------


def thue_morse(n: int) -> np.ndarray:
    """First n Thue-Morse bits 0110 1001 ... (parity of ones in binary k)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    k = np.arange(n, dtype=np.uint64)
    bits = np.zeros(n, dtype=np.int64)
    while k.any():
        bits ^= (k & 1).astype(np.int64)
        k >>= 1
    return bits


def komornik_loreti_residual(x: float, terms: int = 256) -> float:
    """Value of sum_k t_k x^-k - 1 over the Thue-Morse bits t."""
    bits = thue_morse(terms)
    powers = x ** (-np.arange(terms, dtype=float))
    return float(bits @ powers - 1.0)


@lru_cache(maxsize=1)
def komornik_loreti(tol: float = 1e-12) -> float:
    """The unique solution in (G, 2) of the Thue-Morse power-series
    equation; the series is truncated once the geometric tail bound is
    below 1e-12 at the golden-ratio end of the bracket."""
    terms = 32
    while GOLDEN_RATIO ** (-terms) / (GOLDEN_RATIO - 1.0) > 1e-13:
        terms *= 2
    lo, hi = GOLDEN_RATIO, 2.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if komornik_loreti_residual(mid, terms) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# rational-angle classification
# ---------------------------------------------------------------------------

FINITE_NONEMPTY = "finite-nonempty"
COUNTABLY_INFINITE = "countably-infinite"
UNCOUNTABLE_ZERO_DIM = "uncountable-zero-dim"
POSITIVE_DIM = "positive-dim"


def _classify_beta(beta: float, tol: float) -> tuple[str, Optional[str]]:
    beta_star = komornik_loreti()
    if beta <= 1.0:
        raise ValueError("beta must exceed 1")
    if abs(beta - beta_star) <= tol:
        return UNCOUNTABLE_ZERO_DIM, "beta_star"
    if abs(beta - GOLDEN_RATIO) <= tol:
        return FINITE_NONEMPTY, "G"
    if beta < GOLDEN_RATIO:
        return FINITE_NONEMPTY, None
    if beta < beta_star:
        return COUNTABLY_INFINITE, None
    return POSITIVE_DIM, None


@dataclass(frozen=True)
class RationalClassification:
    """Size class of the set of unique addresses for kappa = rho e^{2 pi i p/q}."""

    rho: float
    p: int
    q: int
    q_prime: int
    beta: float
    uniqueness_class: str
    boundary: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "kind": "rational-classification",
            "rho": self.rho,
            "p": self.p,
            "q": self.q,
            "q_prime": self.q_prime,
            "beta": self.beta,
            "class": self.uniqueness_class,
            "boundary": self.boundary,
        }


def classify_rational(
    rho: float, p: int, q: int, tol: float = GEOM_TOL
) -> RationalClassification:
    """Classify the uniqueness set through beta = rho^(-q'), q' = q for odd
    q and q/2 for even q.  Values within tol of a threshold carry a
    boundary flag instead of a silent side choice."""
    if math.gcd(p, q) != 1:
        raise ValueError("need gcd(p, q) = 1")
    if not 0 < rho < 1:
        raise ValueError("need 0 < rho < 1")
    q = abs(q)
    q_prime = q if q % 2 else q // 2
    beta = rho ** (-q_prime)
    cls, boundary = _classify_beta(beta, tol)
    return RationalClassification(
        rho=rho, p=p, q=q, q_prime=q_prime, beta=beta,
        uniqueness_class=cls, boundary=boundary,
    )


TOTALLY_DISCONNECTED = "totally-disconnected"
PARALLELOGRAM = "parallelogram"


@dataclass(frozen=True)
class MixedEqualClassification:
    """Equal-ratio mixed case: beta = lam^-2 classification plus the
    geometric dichotomy at 1/sqrt(2)."""

    lam: float
    beta: float
    uniqueness_class: str
    geometry: str
    boundary: Optional[str] = None

    def to_json_dict(self) -> dict:
        return {
            "kind": "mixed-equal-classification",
            "lambda": self.lam,
            "beta": self.beta,
            "class": self.uniqueness_class,
            "geometry": self.geometry,
            "boundary": self.boundary,
        }


def classify_mixed_equal(lam: float, tol: float = GEOM_TOL) -> MixedEqualClassification:
    if not 0 < lam < 1:
        raise ValueError("need 0 < lam < 1")
    beta = lam ** (-2.0)
    cls, boundary = _classify_beta(beta, tol)
    geometry = PARALLELOGRAM if lam >= 1.0 / math.sqrt(2.0) - tol else TOTALLY_DISCONNECTED
    return MixedEqualClassification(
        lam=lam, beta=beta, uniqueness_class=cls, geometry=geometry, boundary=boundary
    )


# ---------------------------------------------------------------------------
# certificates and template search
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SearchBounds:
    max_prefix: int = 24  # L in the template families
    max_power: int = 12  # exponent bound for the p-power blocks
    window: int = 512  # extreme-sequence window for the complex case


@dataclass(frozen=True)
class UniquenessCertificate:
    """Witness that the projections of the two-block code {uv, uw}* all
    have unique addresses, with positive entropy."""

    spec: SystemSpec
    u: Word
    v: Word
    w: Word
    margins: tuple[float, float, float, float]
    entropy: float
    dim_lower_bound: Optional[float] = None

    def blocks(self) -> tuple[Word, Word]:
        return (self.u + self.v, self.u + self.w)

    def to_json_dict(self) -> dict:
        return {
            "kind": "uniqueness",
            "spec": self.spec.to_json_dict(),
            "u": str(self.u),
            "v": str(self.v),
            "w": str(self.w),
            "margins": [float(m) for m in self.margins],
            "entropy": self.entropy,
            "dim_lower_bound": self.dim_lower_bound,
        }

    def format_report(self) -> str:
        lines = [
            f"uniqueness certificate for {self.spec.case} {self.spec.params}",
            f"  u = {self.u}",
            f"  v = {self.v}",
            f"  w = {self.w}",
            "  margins = "
            + ", ".join(f"{m:.6g}" for m in self.margins),
            f"  entropy = {self.entropy:.12g}",
        ]
        if self.dim_lower_bound is not None:
            lines.append(f"  dim lower bound = {self.dim_lower_bound:.12g}")
        return "\n".join(lines)


def _finish_certificate(spec, u, v, w, margins) -> UniquenessCertificate:
    entropy = code_entropy(len(u) + len(v), len(u) + len(w))
    dim = None
    if spec.case == COMPLEX:
        dim = entropy / (-math.log(abs(spec.kappa)))
    elif spec.case == MIXED_REAL and abs(spec.params[0] - spec.params[1]) <= GEOM_TOL:
        dim = entropy / (-math.log(spec.params[0]))
    return UniquenessCertificate(
        spec=spec, u=u, v=v, w=w, margins=margins, entropy=entropy,
        dim_lower_bound=dim,
    )


def _search_power_templates(
    spec: SystemSpec, prefix_char: str, bounds: SearchBounds, checker: CylinderChecker
) -> UniquenessCertificate:
    """Templates u = prefix_char^L (or m p^L), v = p^k1, w = p^k2."""
    p_word = Word.from_str("p")
    for L in range(1, bounds.max_prefix + 1):
        if prefix_char == "mp^L":
            u = Word.from_str("m") + p_word * L
        else:
            u = Word.from_str(prefix_char) * L
        # the four conditions split into two independent (u, block) checks
        pair_margins: dict[int, tuple[float, float]] = {}
        for k in range(1, bounds.max_power + 1):
            try:
                block = p_word * k
                m1 = _family_margin_suffix_block(checker, u, block)
                m2 = _family_margin_block_suffix(checker, block, u)
                pair_margins[k] = (m1, m2)
            except CannotSeparate:
                continue
        ks = sorted(pair_margins)
        for i, k1 in enumerate(ks):
            for k2 in ks[i + 1:]:
                v = p_word * k1
                w = p_word * k2
                if not is_unambiguous(u + v, u + w):
                    continue
                m1, m2 = pair_margins[k1]
                m3, m4 = pair_margins[k2]
                return _finish_certificate(spec, u, v, w, (m1, m2, m3, m4))
    raise SearchExhausted(
        f"no passing template with prefix <= {bounds.max_prefix}, "
        f"powers <= {bounds.max_power}"
    )


def _family_margin_suffix_block(checker: CylinderChecker, base: Word, block: Word):
    worst = math.inf
    tau = GEOM_TOL
    for i in range(len(base)):
        word = base[i:] + block + base
        margin = checker.separation(word, -base[i])
        worst = min(worst, margin)
        if worst <= tau * checker.scale_ref:
            raise CannotSeparate("overlap")
    return worst


def _family_margin_block_suffix(checker: CylinderChecker, block: Word, base: Word):
    worst = math.inf
    tau = GEOM_TOL
    for j in range(len(block)):
        word = block[j:] + base
        margin = checker.separation(word, -block[j])
        worst = min(worst, margin)
        if worst <= tau * checker.scale_ref:
            raise CannotSeparate("overlap")
    return worst


_COMPLEX_PHI_CANDIDATES = (0.37, 1.13, 1.91, 2.53, 0.11, 2.93)


def _search_complex_templates(
    spec: SystemSpec, bounds: SearchBounds, checker: CylinderChecker
) -> UniquenessCertificate:
    """Extract (u, v, w) from an extreme sequence: a recurrent window
    pattern with both one-symbol continuations, each returning to the
    pattern."""
    for phi in _COMPLEX_PHI_CANDIDATES:
        seq = extreme_sequence(spec.kappa, phi, bounds.window)
        if seq.tie_positions:
            continue
        s = str(seq.digits)
        for L in range(1, bounds.max_prefix + 1):
            occ_by_pattern: dict[str, list[int]] = {}
            order: list[str] = []
            for t in range(0, len(s) - L + 1):
                pat = s[t : t + L]
                if pat not in occ_by_pattern:
                    occ_by_pattern[pat] = []
                    order.append(pat)
                occ_by_pattern[pat].append(t)
            for pat in order:
                occs = occ_by_pattern[pat]
                by_next: dict[str, list[int]] = {"m": [], "p": []}
                for o in occs:
                    if o + L < len(s):
                        by_next[s[o + L]].append(o)
                if not by_next["m"] or not by_next["p"]:
                    continue
                built = {}
                for sym in ("p", "m"):
                    for o in by_next[sym]:
                        nxt = [o2 for o2 in occs if o2 >= o + L + 1 and o2 + L <= len(s)]
                        if nxt:
                            built[sym] = s[o + L : nxt[0]]
                            break
                if "p" not in built or "m" not in built:
                    continue
                u = Word.from_str(pat)
                v = Word.from_str(built["p"])
                w = Word.from_str(built["m"])
                try:
                    margins = check_lemma_conditions(spec, u, v, w, checker=checker)
                except CannotSeparate:
                    continue
                if not is_unambiguous(u + v, u + w):
                    continue
                return _finish_certificate(spec, u, v, w, margins)
    raise SearchExhausted("no recurrent-window template separated within bounds")


def certify_uniqueness(
    spec: SystemSpec,
    bounds: SearchBounds = SearchBounds(),
    *,
    hull_eps: Optional[float] = None,
) -> UniquenessCertificate:
    """Search case-appropriate word templates for a passing certificate.

    Searched in a fixed total order, so the result is deterministic; raises
    SearchExhausted (not a disproof) when the bounds run out.
    """
    if spec.case == MIXED_REAL and abs(spec.params[0] - spec.params[1]) <= GEOM_TOL:
        raise ValueError(
            "equal-ratio mixed systems are classified by classify_mixed_equal"
        )
    checker = CylinderChecker(spec, hull_eps)
    if spec.case in (MIXED_REAL, POSITIVE_REAL):
        return _search_power_templates(spec, "mp^L", bounds, checker)
    if spec.case == JORDAN:
        return _search_power_templates(spec, "m", bounds, checker)
    return _search_complex_templates(spec, bounds, checker)


def verify_uniqueness_certificate(d: dict) -> UniquenessCertificate:
    """Re-check a stored certificate without repeating the search."""
    if d.get("kind") != "uniqueness":
        raise ValueError("not a uniqueness certificate")
    spec = SystemSpec.from_json_dict(d["spec"])
    u = Word.from_str(d["u"])
    v = Word.from_str(d["v"])
    w = Word.from_str(d["w"])
    margins = check_lemma_conditions(spec, u, v, w)
    if not is_unambiguous(u + v, u + w):
        raise ValueError("stored words are ambiguous")
    cert = _finish_certificate(spec, u, v, w, margins)
    if not math.isclose(cert.entropy, float(d["entropy"]), rel_tol=1e-9):
        raise ValueError("stored entropy does not re-verify")
    return cert
