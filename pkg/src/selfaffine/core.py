"""Normal forms, digit words, projections and guaranteed bounding sets.

A system is a pair of planar affine contractions ``T_m(v) = Mv - u`` and
``T_p(v) = Mv + u``.  Up to linear conjugacy the matrix M can be put in
one of four normal forms, each with a canonical cyclic translation:

* ``positive_real``  M = diag(lam, mu),   0 < lam < mu < 1,  u = (1, 1)
* ``mixed_real``     M = diag(-lam, mu),  0 < lam, mu < 1,   u = (1, 1)
* ``jordan``         M = [[nu, 1], [0, nu]], 0 < nu < 1,     u = (0, 1)
* ``complex``        M = [[a, b], [-b, a]], 0 < a^2+b^2 < 1, b != 0,
                     u = (1, 0); acts on C as z -> kz +/- 1, k = a + bi.

An infinite digit string over {m, p} (values -1, +1) projects to the
attractor point ``pi(a0 a1 ...) = sum_i a_i M^i u``; in the jordan case
this evaluates to ``(sum i a_i nu^(i-1), sum a_i nu^i)`` and in the
complex case to ``sum a_i k^i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import DegenerateSystemError, NotContractingError
from .geometry import GEOM_TOL, ConvexPolygon, Disc, box_polygon

POSITIVE_REAL = "positive_real"
MIXED_REAL = "mixed_real"
JORDAN = "jordan"
COMPLEX = "complex"

_CASES = (POSITIVE_REAL, MIXED_REAL, JORDAN, COMPLEX)

DIGIT_CHARS = {-1: "m", 1: "p"}
CHAR_DIGITS = {"m": -1, "p": 1}


# ---------------------------------------------------------------------------
# digit words and addresses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Word:
    """Finite digit string over {m, p} with values m -> -1, p -> +1."""

    digits: tuple[int, ...] = ()

    def __post_init__(self):
        if any(d not in (-1, 1) for d in self.digits):
            raise ValueError("digits must be -1 or +1")

    @staticmethod
    def from_str(s: str) -> "Word":
        try:
            return Word(tuple(CHAR_DIGITS[c] for c in s))
        except KeyError as exc:
            raise ValueError(f"invalid digit character {exc.args[0]!r}") from exc

    @staticmethod
    def from_digits(digits: Iterable[int]) -> "Word":
        return Word(tuple(int(d) for d in digits))

    def __str__(self) -> str:
        return "".join(DIGIT_CHARS[d] for d in self.digits)

    def __len__(self) -> int:
        return len(self.digits)

    def __getitem__(self, i):
        if isinstance(i, slice):
            return Word(self.digits[i])
        return self.digits[i]

    def __add__(self, other: "Word") -> "Word":
        return Word(self.digits + other.digits)

    def __mul__(self, k: int) -> "Word":
        return Word(self.digits * k)

    def __iter__(self):
        return iter(self.digits)

    def flip(self) -> "Word":
        """Exchange m and p."""
        return Word(tuple(-d for d in self.digits))


M_WORD = Word.from_str("m")
P_WORD = Word.from_str("p")


@dataclass(frozen=True)
class EventualAddress:
    """Eventually periodic infinite address ``preperiod . period^infinity``."""

    preperiod: Word
    period: Word

    def __post_init__(self):
        if len(self.period) == 0:
            raise ValueError("period must be nonempty")

    @staticmethod
    def parse(s: str) -> "EventualAddress":
        """Parse ``"pre(per)"`` or a bare periodic word ``"(per)"``."""
        if "(" in s:
            pre, rest = s.split("(", 1)
            if not rest.endswith(")"):
                raise ValueError("unterminated period")
            return EventualAddress(Word.from_str(pre), Word.from_str(rest[:-1]))
        return EventualAddress(Word(), Word.from_str(s))

    def __str__(self) -> str:
        return f"{self.preperiod}({self.period})"

    def flip(self) -> "EventualAddress":
        return EventualAddress(self.preperiod.flip(), self.period.flip())

    def prefix(self, n: int) -> Word:
        """First n digits."""
        digits = list(self.preperiod.digits)
        while len(digits) < n:
            digits.extend(self.period.digits)
        return Word(tuple(digits[:n]))


def periodic(period: Union[str, Word]) -> EventualAddress:
    if isinstance(period, str):
        period = Word.from_str(period)
    return EventualAddress(Word(), period)


# ---------------------------------------------------------------------------
# affine maps
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class AffineMap:
    """v -> linear @ v + offset, the building block of cylinder geometry."""

    linear: np.ndarray
    offset: np.ndarray

    def __post_init__(self):
        lin = np.array(self.linear, dtype=float).reshape(2, 2)
        off = np.array(self.offset, dtype=float).reshape(2)
        lin.flags.writeable = False
        off.flags.writeable = False
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "offset", off)

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(np.eye(2), np.zeros(2))

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        return v @ self.linear.T + self.offset

    def compose(self, other: "AffineMap") -> "AffineMap":
        """self after other: (self.compose(other))(v) == self(other(v))."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.offset + self.offset)

    def inverse(self) -> "AffineMap":
        inv = np.linalg.inv(self.linear)
        return AffineMap(inv, -inv @ self.offset)

    def operator_norm(self) -> float:
        return float(np.linalg.norm(self.linear, 2))


# ---------------------------------------------------------------------------
# system specs
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SystemSpec:
    """Normal-form description of the pair (M, u).

    ``params`` holds (lam, mu) for the real cases, (nu,) for jordan and
    (a, b) for complex.  Instances are validated on construction; use the
    named constructors.
    """

    case: str
    params: tuple[float, ...]

    def __post_init__(self):
        if self.case not in _CASES:
            raise ValueError(f"unknown case {self.case!r}")
        object.__setattr__(self, "params", tuple(float(x) for x in self.params))
        self._validate()

    def _validate(self, tol: float = GEOM_TOL):
        if self.case in (POSITIVE_REAL, MIXED_REAL):
            lam, mu = self.params
            if min(lam, mu) <= tol:
                raise DegenerateSystemError("zero (or near-zero) eigenvalue")
            if max(lam, mu) >= 1.0:
                raise NotContractingError("eigenvalue modulus must be below 1")
            if self.case == POSITIVE_REAL and abs(lam - mu) <= tol:
                raise DegenerateSystemError(
                    "equal eigenvalues with a diagonalizable matrix"
                )
        elif self.case == JORDAN:
            (nu,) = self.params
            if nu <= tol:
                raise DegenerateSystemError("zero (or near-zero) eigenvalue")
            if nu >= 1.0:
                raise NotContractingError("eigenvalue modulus must be below 1")
        else:
            a, b = self.params
            if abs(b) <= tol:
                raise DegenerateSystemError("rotation part b is (near) zero")
            if math.hypot(a, b) >= 1.0:
                raise NotContractingError("eigenvalue modulus must be below 1")

    # -- constructors ------------------------------------------------------

    @staticmethod
    def positive_real(lam: float, mu: float) -> "SystemSpec":
        if lam > mu:
            lam, mu = mu, lam
        return SystemSpec(POSITIVE_REAL, (lam, mu))

    @staticmethod
    def mixed_real(lam: float, mu: float) -> "SystemSpec":
        return SystemSpec(MIXED_REAL, (lam, mu))

    @staticmethod
    def jordan(nu: float) -> "SystemSpec":
        return SystemSpec(JORDAN, (nu,))

    @staticmethod
    def complex_pair(a: float, b: float) -> "SystemSpec":
        return SystemSpec(COMPLEX, (a, b))

    # -- derived data ------------------------------------------------------

    @property
    def matrix(self) -> np.ndarray:
        if self.case == POSITIVE_REAL:
            lam, mu = self.params
            return np.array([[lam, 0.0], [0.0, mu]])
        if self.case == MIXED_REAL:
            lam, mu = self.params
            return np.array([[-lam, 0.0], [0.0, mu]])
        if self.case == JORDAN:
            (nu,) = self.params
            return np.array([[nu, 1.0], [0.0, nu]])
        # rotation-scaling acting as multiplication by a + bi on (x, y) = x + yi,
        # so that pi(a0 a1 ...) = sum a_i kappa^i holds coordinatewise
        a, b = self.params
        return np.array([[a, -b], [b, a]])

    @property
    def translation(self) -> np.ndarray:
        if self.case in (POSITIVE_REAL, MIXED_REAL):
            return np.array([1.0, 1.0])
        if self.case == JORDAN:
            return np.array([0.0, 1.0])
        return np.array([1.0, 0.0])

    @property
    def kappa(self) -> complex:
        if self.case != COMPLEX:
            raise ValueError("kappa is defined for the complex case only")
        a, b = self.params
        return complex(a, b)

    def contraction_modulus(self) -> float:
        """Largest eigenvalue modulus."""
        if self.case in (POSITIVE_REAL, MIXED_REAL):
            return max(self.params)
        if self.case == JORDAN:
            return self.params[0]
        return abs(self.kappa)

    def eigen_blocks(self) -> list[tuple[float, int]]:
        """Real spectrum as (eigenvalue, multiplicity) pairs, in the order
        matching the coordinates of ``project``."""
        if self.case == POSITIVE_REAL:
            lam, mu = self.params
            return [(lam, 1), (mu, 1)]
        if self.case == MIXED_REAL:
            lam, mu = self.params
            return [(-lam, 1), (mu, 1)]
        if self.case == JORDAN:
            return [(self.params[0], 2)]
        raise ValueError("complex spectrum has no real eigen blocks")

    def map(self, digit: int) -> AffineMap:
        """T_m (digit -1) or T_p (digit +1)."""
        if digit not in (-1, 1):
            raise ValueError("digit must be -1 or +1")
        return AffineMap(self.matrix, digit * self.translation)

    # -- serialization -----------------------------------------------------

    def to_json_dict(self) -> dict:
        names = {
            POSITIVE_REAL: ("lambda", "mu"),
            MIXED_REAL: ("lambda", "mu"),
            JORDAN: ("nu",),
            COMPLEX: ("re", "im"),
        }[self.case]
        return {
            "case": self.case,
            "params": dict(zip(names, self.params)),
            "translation": [float(x) for x in self.translation],
        }

    @staticmethod
    def from_json_dict(d: dict) -> "SystemSpec":
        case = d["case"]
        p = d["params"]
        if case == POSITIVE_REAL:
            return SystemSpec.positive_real(p["lambda"], p["mu"])
        if case == MIXED_REAL:
            return SystemSpec.mixed_real(p["lambda"], p["mu"])
        if case == JORDAN:
            return SystemSpec.jordan(p["nu"])
        if case == COMPLEX:
            return SystemSpec.complex_pair(p["re"], p["im"])
        raise ValueError(f"unknown case {case!r}")


def normalize_system(matrix, u, tol: float = GEOM_TOL) -> SystemSpec:
    """Classify an arbitrary contracting 2x2 matrix into its normal form.

    The returned spec carries the canonical translation for its case; the
    supplied ``u`` only has to be a cyclic vector (checked).  Inputs within
    ``tol`` of a degenerate configuration are rejected rather than silently
    normalized.
    """
    m = np.array(matrix, dtype=float).reshape(2, 2)
    u = np.array(u, dtype=float).reshape(2)
    scale = max(1.0, float(np.abs(m).max()))

    if float(np.hypot(*u)) <= tol:
        raise DegenerateSystemError("translation vector u must be nonzero")

    eigvals = np.linalg.eigvals(m)
    if float(np.max(np.abs(eigvals))) >= 1.0:
        raise NotContractingError("spectral radius must be below 1")

    # cyclicity: {u, Mu} spans the plane
    mu_vec = m @ u
    cyc = u[0] * mu_vec[1] - u[1] * mu_vec[0]
    if abs(cyc) <= tol * scale * float(u @ u):
        raise DegenerateSystemError("u is not a cyclic vector for M")

    tr = float(m[0, 0] + m[1, 1])
    det = float(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])
    disc = tr * tr - 4.0 * det

    if disc < 0 and math.sqrt(-disc) / 2.0 > tol:
        return SystemSpec.complex_pair(tr / 2.0, math.sqrt(-disc) / 2.0)

    root = math.sqrt(max(disc, 0.0))
    e1, e2 = (tr + root) / 2.0, (tr - root) / 2.0
    if abs(e1 - e2) <= tol:
        lam = tr / 2.0
        if abs(lam) <= tol:
            raise DegenerateSystemError("zero eigenvalue")
        off_diag = m - lam * np.eye(2)
        if float(np.abs(off_diag).max()) <= tol * scale:
            raise DegenerateSystemError(
                "equal eigenvalues with a diagonalizable matrix"
            )
        # a single Jordan block; nu < 0 reduces to nu > 0 by the reflection
        # symmetry across the y-axis
        return SystemSpec.jordan(abs(lam))

    if abs(e1) <= tol or abs(e2) <= tol:
        raise DegenerateSystemError("zero eigenvalue")
    if e1 * e2 > 0:
        # same-sign pair; negative pairs give the same attractor as the
        # positive pair (digit substitution a_i -> (-1)^i a_i)
        return SystemSpec.positive_real(abs(e1), abs(e2))
    neg = min(e1, e2)
    pos = max(e1, e2)
    return SystemSpec.mixed_real(abs(neg), pos)


# ---------------------------------------------------------------------------
# projections
# ---------------------------------------------------------------------------


def _poly_eval(coeffs, t):
    """sum_i coeffs[i] t^i and its derivative, by Horner from the top."""
    val = 0.0 * t
    der = 0.0 * t
    for c in reversed(coeffs):
        der = der * t + val
        val = val * t + c
    return val, der


def _eventual_series(pre, per, t):
    """Value and t-derivative of sum_i a_i t^i for the eventually periodic
    digit string pre . per^infinity, via geometric summation."""
    pw, pw_d = _poly_eval(pre, t)
    vw, vw_d = _poly_eval(per, t)
    L, P = len(pre), len(per)
    tL = t**L
    tP = t**P
    geo = 1.0 / (1.0 - tP)
    val = pw + tL * vw * geo
    # d/dt [t^L vw / (1 - t^P)]
    tL_d = L * t ** (L - 1) if L > 0 else 0.0 * t
    tP_d = P * t ** (P - 1)
    der = pw_d + (tL_d * vw + tL * vw_d) * geo + tL * vw * tP_d * geo * geo
    return val, der


def project(spec: SystemSpec, addr: EventualAddress) -> np.ndarray:
    """Exact closed-form projection of an eventually periodic address."""
    pre = addr.preperiod.digits
    per = addr.period.digits
    if spec.case == POSITIVE_REAL:
        lam, mu = spec.params
        x, _ = _eventual_series(pre, per, lam)
        y, _ = _eventual_series(pre, per, mu)
        return np.array([x, y])
    if spec.case == MIXED_REAL:
        lam, mu = spec.params
        x, _ = _eventual_series(pre, per, -lam)
        y, _ = _eventual_series(pre, per, mu)
        return np.array([x, y])
    if spec.case == JORDAN:
        (nu,) = spec.params
        y, dy = _eventual_series(pre, per, nu)
        return np.array([dy, y])
    z, _ = _eventual_series(pre, per, spec.kappa)
    return np.array([z.real, z.imag])


def digit_weights(spec: SystemSpec, length: int) -> np.ndarray:
    """Columns M^i u for i < length, shape (2, length).

    A length-L prefix word with digit vector a projects to ``a @ W.T``;
    these columns also drive support-direction digit rules.
    """
    i = np.arange(length)
    if spec.case == POSITIVE_REAL:
        lam, mu = spec.params
        return np.stack([lam**i, mu**i])
    if spec.case == MIXED_REAL:
        lam, mu = spec.params
        return np.stack([(-lam) ** i, mu**i])
    if spec.case == JORDAN:
        (nu,) = spec.params
        top = np.zeros(length)
        if length > 1:
            top[1:] = i[1:] * nu ** (i[1:] - 1)
        return np.stack([top, nu**i])
    powers = spec.kappa ** i
    return np.stack([powers.real, powers.imag])


def project_words(spec: SystemSpec, digits: np.ndarray) -> np.ndarray:
    """Vectorized prefix projection: digits is (n, L) over {-1, +1},
    result is (n, 2) of truncated-series points (== project_prefix points)."""
    digits = np.asarray(digits, dtype=float)
    if digits.ndim == 1:
        digits = digits[None, :]
    w = digit_weights(spec, digits.shape[1])
    return digits @ w.T


def affine_of_word(spec: SystemSpec, word: Word) -> AffineMap:
    """Composition T_{w0} o T_{w1} o ... o T_{w_{k-1}}; prefixes act on the
    left, so pi(w . t) = affine_of_word(w)(pi(t))."""
    acc = AffineMap.identity()
    for d in word:
        acc = acc.compose(spec.map(d))
    return acc


# ---------------------------------------------------------------------------
# bounding sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BoundingSet:
    """A convex set guaranteed to contain every projected address."""

    shape: Union[ConvexPolygon, Disc]
    adapted: bool = False

    def diameter(self) -> float:
        return self.shape.diameter()

    def contains(self, point, slack: float = 0.0) -> bool:
        return self.shape.contains(point, slack)


def bounding_set(spec: SystemSpec) -> BoundingSet:
    """Cheap guaranteed bound for the attractor.

    Real cases: the coordinatewise geometric-series box.  Complex: the disc
    of radius 1/(1-|k|).  Jordan: a disc obtained in adapted coordinates
    (off-diagonal rescaled to eps = (1-nu)/2 so the operator norm drops
    below 1, which the raw Jordan block does not satisfy).
    """
    if spec.case in (POSITIVE_REAL, MIXED_REAL):
        lam, mu = spec.params
        rx = 1.0 / (1.0 - lam)
        ry = 1.0 / (1.0 - mu)
        return BoundingSet(box_polygon(-rx, rx, -ry, ry))
    if spec.case == JORDAN:
        (nu,) = spec.params
        eps = (1.0 - nu) / 2.0
        contraction = nu + eps
        if contraction >= 1.0:
            raise NotContractingError("no adapted norm with contraction below 1")
        radius = (1.0 / eps) / (1.0 - contraction)
        return BoundingSet(Disc((0.0, 0.0), radius), adapted=True)
    kappa_abs = abs(spec.kappa)
    return BoundingSet(Disc((0.0, 0.0), 1.0 / (1.0 - kappa_abs)))


def invariant_box(spec: SystemSpec) -> ConvexPolygon:
    """Coordinatewise bounding box that is exactly forward-invariant
    (T_m(K) and T_p(K) inside K) for the real-spectrum normal forms."""
    if spec.case in (POSITIVE_REAL, MIXED_REAL):
        lam, mu = spec.params
        rx = 1.0 / (1.0 - lam)
        ry = 1.0 / (1.0 - mu)
        return box_polygon(-rx, rx, -ry, ry)
    if spec.case == JORDAN:
        (nu,) = spec.params
        ry = 1.0 / (1.0 - nu)
        rx = ry * ry
        return box_polygon(-rx, rx, -ry, ry)
    raise ValueError("complex case has no axis-aligned invariant box")


def project_prefix(spec: SystemSpec, word: Word) -> tuple[np.ndarray, float]:
    """Truncated projection with a rigorous truncation bound.

    Returns the prefix point (the word's affine map applied to the origin)
    and the diameter of the word's image of the bounding set, which bounds
    the distance to pi(word . t) for every continuation t.
    """
    amap = affine_of_word(spec, word)
    bset = bounding_set(spec)
    if isinstance(bset.shape, Disc):
        radius = float(np.linalg.norm(amap.linear, 2)) * bset.shape.radius
        err = 2.0 * radius
    else:
        img = bset.shape.transform(amap.linear, amap.offset)
        err = img.diameter()
    return amap.offset.copy(), err
