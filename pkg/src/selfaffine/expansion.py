"""Constructive interior certificates and the greedy digit loop.

For a real-spectrum system the recipe is: pick a monic polynomial P of
degree n >= N that vanishes to the right order at the reciprocal
eigenvalues and has coefficient sum at most 2; build the N x n matrix
linking initial residuals to target coordinates; solve for initial
residuals through a well-conditioned N x N submatrix; then run a
sign-greedy +/-1 digit recurrence that keeps all residuals in [-1, 1].
The produced digit string is an explicit address for the target point,
which certifies a ball about the origin inside the attractor.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import JORDAN, MIXED_REAL, POSITIVE_REAL, SystemSpec, Word, project_words
from .errors import (
    CoefficientSumExceeded,
    ConditionsFailed,
    ResidualEscape,
    TargetOutsideDelta,
)

COEFF_SUM_LIMIT = 2.0
COEFF_SUM_TOL = 1e-12
ROOT_RESIDUAL_TOL = 1e-8
RESIDUAL_BOUND_TOL = 1e-9


@dataclass(frozen=True)
class ToolPolynomial:
    """Monic polynomial P(x) = x^n + b_{n-1} x^{n-1} + ... + b_0, stored as
    the non-leading coefficients (b_0, ..., b_{n-1})."""

    coeffs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "coeffs", tuple(float(c) for c in self.coeffs))
        if len(self.coeffs) < 1:
            raise ValueError("polynomial must have degree at least 1")

    @property
    def n(self) -> int:
        return len(self.coeffs)

    def coefficient_sum(self) -> float:
        return float(sum(abs(c) for c in self.coeffs))

    def derivative_values(self, x: float, s_max: int) -> np.ndarray:
        """P(x), P'(x), ..., P^(s_max)(x)."""
        n = self.n
        out = np.zeros(s_max + 1)
        for s in range(s_max + 1):
            acc = _falling(n, s) * x ** (n - s)
            for j in range(s, n):
                acc += self.coeffs[j] * _falling(j, s) * x ** (j - s)
            out[s] = acc
        return out

    def magnitude_at(self, x: float) -> float:
        """Sum of absolute term values of P at x, the natural scale for
        judging whether P(x) is numerically zero."""
        return float(
            abs(x) ** self.n + sum(abs(c) * abs(x) ** j for j, c in enumerate(self.coeffs))
        )


def _falling(m: int, s: int) -> float:
    out = 1.0
    for i in range(s):
        out *= m - i
    return out


def mixed_real_poly(lam: float, mu: float) -> ToolPolynomial:
    """Degree-2 polynomial with roots -1/lam and 1/mu:
    x^2 + (1/lam - 1/mu) x - 1/(lam mu)."""
    if not (0 < lam < 1 and 0 < mu < 1):
        raise ValueError("need 0 < lam, mu < 1")
    b0 = -1.0 / (lam * mu)
    b1 = 1.0 / lam - 1.0 / mu
    poly = ToolPolynomial((b0, b1))
    s = poly.coefficient_sum()
    if s > COEFF_SUM_LIMIT + COEFF_SUM_TOL:
        raise CoefficientSumExceeded(s, f"|b0|+|b1| = {s:.9g} > 2 at lam={lam}, mu={mu}")
    return poly


def jordan_poly(nu: float) -> ToolPolynomial:
    """Degree-8 polynomial x^8 - (8/(7 nu)) x^7 + 1/(7 nu^8), which has a
    double root at 1/nu.  Its coefficient sum crosses 2 near nu ~ 0.83145."""
    if not 0 < nu < 1:
        raise ValueError("need 0 < nu < 1")
    b = [0.0] * 8
    b[0] = 1.0 / (7.0 * nu**8)
    b[7] = -8.0 / (7.0 * nu)
    poly = ToolPolynomial(tuple(b))
    s = poly.coefficient_sum()
    if s > COEFF_SUM_LIMIT + COEFF_SUM_TOL:
        raise CoefficientSumExceeded(s, f"coefficient sum {s:.9g} > 2 at nu={nu}")
    return poly


# ---------------------------------------------------------------------------
# the residual-to-target matrix
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BMatrix:
    """N x n matrix of partial-coefficient polynomials and their scaled
    derivatives evaluated at the eigenvalues.

    Row layout follows the block structure: within each block, highest
    derivative first; column t corresponds to initial residual u_{t-n}.
    """

    entries: np.ndarray
    blocks: tuple[tuple[float, int], ...]

    def __post_init__(self):
        e = np.array(self.entries, dtype=float)
        e.flags.writeable = False
        object.__setattr__(self, "entries", e)

    @property
    def shape(self) -> tuple[int, int]:
        return self.entries.shape


def _partial_poly_value(coeffs, t: int, s: int, y: float) -> float:
    """(1/s!) d^s/dy^s of sum_{k<=t} b_k y^(t-k)."""
    acc = 0.0
    for k in range(t + 1):
        m = t - k
        if m >= s:
            acc += coeffs[k] * math.comb(m, s) * y ** (m - s)
    return acc


def build_B_matrix(spec: SystemSpec, poly: ToolPolynomial) -> BMatrix:
    blocks = tuple(spec.eigen_blocks())
    n = poly.n
    rows = []
    for eigenvalue, mult in blocks:
        for s in range(mult - 1, -1, -1):
            rows.append(
                [_partial_poly_value(poly.coeffs, t, s, eigenvalue) for t in range(n)]
            )
    return BMatrix(np.array(rows), blocks)


def _best_submatrix(entries: np.ndarray) -> tuple[tuple[int, ...], float, float]:
    """Column subset of size N maximizing the smallest singular value.

    Exhaustive over all C(n, N) subsets (tiny for the shipped polynomials),
    which dominates any greedy pivoting rule; ties resolved by column order
    for determinism.
    """
    n_rows, n_cols = entries.shape
    best_cols: Optional[tuple[int, ...]] = None
    best_smin = -1.0
    best_smax = 0.0
    for cols in itertools.combinations(range(n_cols), n_rows):
        svals = np.linalg.svd(entries[:, cols], compute_uv=False)
        smin = float(svals[-1])
        if smin > best_smin * (1 + 1e-12):
            best_smin = smin
            best_smax = float(svals[0])
            best_cols = cols
    assert best_cols is not None
    return best_cols, best_smin, best_smax


# ---------------------------------------------------------------------------
# condition checking and certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionReport:
    """Outcome of the three certificate conditions for (spec, poly)."""

    root_residuals: tuple[tuple[float, int, float], ...]  # (eigenvalue, s, rel resid)
    max_root_residual: float
    coeff_sum: float
    submatrix_columns: tuple[int, ...]
    sigma_min: float
    sigma_max: float
    roots_ok: bool
    coeff_sum_ok: bool
    submatrix_ok: bool

    @property
    def ok(self) -> bool:
        return self.roots_ok and self.coeff_sum_ok and self.submatrix_ok

    def failures(self) -> list[str]:
        out = []
        if not self.roots_ok:
            out.append(
                f"root conditions fail: max relative residual {self.max_root_residual:.3g}"
            )
        if not self.coeff_sum_ok:
            out.append(f"coefficient sum {self.coeff_sum:.9g} exceeds 2")
        if not self.submatrix_ok:
            out.append("no well-conditioned square submatrix")
        return out


def check_tool_conditions(spec: SystemSpec, poly: ToolPolynomial) -> ConditionReport:
    """Check root orders at reciprocal eigenvalues, the coefficient-sum
    bound, and existence of a non-singular square submatrix."""
    if spec.case not in (POSITIVE_REAL, MIXED_REAL, JORDAN):
        raise ValueError("interior certificates require a real spectrum")
    blocks = spec.eigen_blocks()
    n_needed = sum(mult for _, mult in blocks)
    if poly.n < n_needed:
        raise ValueError(f"polynomial degree {poly.n} below dimension {n_needed}")

    residuals = []
    for eigenvalue, mult in blocks:
        x = 1.0 / eigenvalue
        values = poly.derivative_values(x, mult - 1)
        scale = max(poly.magnitude_at(x), 1.0)
        for s in range(mult):
            residuals.append((eigenvalue, s, abs(values[s]) / scale))
    max_resid = max(r for _, _, r in residuals)

    coeff_sum = poly.coefficient_sum()
    bmat = build_B_matrix(spec, poly)
    cols, sigma_min, sigma_max = _best_submatrix(bmat.entries)

    return ConditionReport(
        root_residuals=tuple(residuals),
        max_root_residual=max_resid,
        coeff_sum=coeff_sum,
        submatrix_columns=cols,
        sigma_min=sigma_min,
        sigma_max=sigma_max,
        roots_ok=max_resid <= ROOT_RESIDUAL_TOL,
        coeff_sum_ok=coeff_sum <= COEFF_SUM_LIMIT + COEFF_SUM_TOL,
        submatrix_ok=sigma_min > 1e-12 * max(sigma_max, 1.0),
    )


@dataclass(frozen=True)
class InteriorCertificate:
    """Machine-checkable record that the open delta-ball about the origin
    (in the max norm on target coordinates) consists of representable
    points, hence lies inside the attractor."""

    spec: SystemSpec
    poly: ToolPolynomial
    delta: float
    submatrix_columns: tuple[int, ...]
    report: ConditionReport

    def tail_bound(self, steps: int) -> float:
        """Rigorous bound on the reprojection error after ``steps`` digits.

        Truncating the digit series leaves only boundary terms: per
        coordinate at most sum_k |b_k| (n - k) * rho^steps, with one extra
        factor (steps + n) in a coordinate carrying a derivative (Jordan
        block).  The bound below covers both shapes.
        """
        n = self.poly.n
        cb = sum(abs(b) * (n - k) for k, b in enumerate(self.poly.coeffs))
        rho = self.spec.contraction_modulus()
        return math.sqrt(2.0) * cb * (steps + n + 1) * rho ** (steps - 1)

    def to_json_dict(self) -> dict:
        return {
            "kind": "interior",
            "spec": self.spec.to_json_dict(),
            "poly": list(self.poly.coeffs),
            "delta": self.delta,
            "submatrix_columns": list(self.submatrix_columns),
            "margins": {
                "max_root_residual": self.report.max_root_residual,
                "coeff_sum": self.report.coeff_sum,
                "coeff_sum_margin": COEFF_SUM_LIMIT - self.report.coeff_sum,
                "sigma_min": self.report.sigma_min,
            },
        }

    @staticmethod
    def from_json_dict(d: dict) -> "InteriorCertificate":
        if d.get("kind") != "interior":
            raise ValueError("not an interior certificate")
        spec = SystemSpec.from_json_dict(d["spec"])
        poly = ToolPolynomial(tuple(d["poly"]))
        cert = interior_radius(spec, poly)
        stored_delta = float(d["delta"])
        if not math.isclose(cert.delta, stored_delta, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError(
                f"stored delta {stored_delta} does not re-verify (got {cert.delta})"
            )
        return cert


def interior_radius(spec: SystemSpec, poly: ToolPolynomial) -> InteriorCertificate:
    """Certified radius: targets with every |x_i| < delta admit initial
    residuals of size at most 1 through the chosen submatrix.

    delta = sigma_min(submatrix) / sqrt(N), deliberately conservative.
    """
    report = check_tool_conditions(spec, poly)
    if not report.ok:
        raise ConditionsFailed("; ".join(report.failures()))
    n_dim = sum(mult for _, mult in spec.eigen_blocks())
    delta = report.sigma_min / math.sqrt(n_dim)
    return InteriorCertificate(
        spec=spec,
        poly=poly,
        delta=delta,
        submatrix_columns=report.submatrix_columns,
        report=report,
    )


# ---------------------------------------------------------------------------
# the digit loop
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExpansionRun:
    """One greedy expansion: target, initial residuals solving the linear
    system (unselected columns pinned to 0), emitted digits, and the full
    residual trace u_0 ... u_{T-1}."""

    spec: SystemSpec
    target: np.ndarray
    initial_residuals: np.ndarray
    digits: Word
    residual_trace: np.ndarray

    def max_residual(self) -> float:
        m = float(np.max(np.abs(self.residual_trace))) if len(self.residual_trace) else 0.0
        return max(m, float(np.max(np.abs(self.initial_residuals))))

    def reprojection_error(self, steps: Optional[int] = None) -> float:
        """Distance from the truncated projection of the digits to the target."""
        k = len(self.digits) if steps is None else min(steps, len(self.digits))
        pt = project_words(self.spec, np.array(self.digits.digits[:k]))[0]
        return float(np.hypot(pt[0] - self.target[0], pt[1] - self.target[1]))

    def to_json_dict(self) -> dict:
        return {
            "kind": "expansion-run",
            "spec": self.spec.to_json_dict(),
            "target": [float(x) for x in self.target],
            "digits": str(self.digits),
            "max_residual": self.max_residual(),
            "final_error": self.reprojection_error(),
        }


def expand_point(
    spec: SystemSpec,
    poly: ToolPolynomial,
    target,
    steps: int,
    certificate: Optional[InteriorCertificate] = None,
) -> ExpansionRun:
    """Produce an explicit digit address for a target near the origin.

    The recurrence u_j = a_j - sum_k b_k u_{j+k-n} runs with
    a_j = sign(sum_k b_k u_{j+k-n}), ties to +1, which both keeps
    |u_j| <= 1 and minimizes it.
    """
    if steps < 1:
        raise ValueError("steps must be at least 1")
    if certificate is None:
        certificate = interior_radius(spec, poly)
    target = np.asarray(target, dtype=float).reshape(-1)
    n = poly.n
    cols = list(certificate.submatrix_columns)

    if float(np.max(np.abs(target))) >= certificate.delta:
        raise TargetOutsideDelta(
            f"target {target.tolist()} outside certified radius {certificate.delta:.6g}"
        )

    bmat = build_B_matrix(spec, poly)
    u_init = np.zeros(n)
    u_init[cols] = np.linalg.solve(bmat.entries[:, cols], target)

    b = poly.coeffs
    window = list(u_init)  # window[k] holds u_{j+k-n}
    digits = []
    trace = np.empty(steps)
    for j in range(steps):
        s = 0.0
        for k in range(n):
            s += b[k] * window[k]
        a = 1 if s >= 0.0 else -1
        u = a - s
        if abs(u) > 1.0 + RESIDUAL_BOUND_TOL:
            raise ResidualEscape(
                f"residual {u} escaped [-1,1] at step {j}; tolerance bug"
            )
        digits.append(a)
        trace[j] = u
        window.pop(0)
        window.append(u)

    return ExpansionRun(
        spec=spec,
        target=target,
        initial_residuals=u_init,
        digits=Word(tuple(digits)),
        residual_trace=trace,
    )


def reprojection_errors_by_prefix(run: ExpansionRun) -> np.ndarray:
    """Reprojection error for every prefix length 1..T (vectorized)."""
    from .core import digit_weights

    d = np.array(run.digits.digits, dtype=float)
    w = digit_weights(run.spec, len(d))
    partial = np.cumsum(d[None, :] * w, axis=1)
    dx = partial[0] - run.target[0]
    dy = partial[1] - run.target[1]
    return np.hypot(dx, dy)
