"""Pseudo-densities over the cube and their moment-matrix validation.

Two explicit constructions are provided: the knapsack pseudo-density built
from Lagrange interpolation at the half-integer point (odd m), and the
lopsided pseudo-density on a biased product measure, supported on Hamming
weight <= 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .cube import CubeFunction, ProductMeasure, point_of_index
from .symmat import SymMatrix, psd_check

MAX_MOMENT_M = 16

SOS_KIND = "sos-pseudo-density"
LOCAL_KIND = "local-pseudo-density"

MEAN_TOL = 1e-10
DEFAULT_VALIDATION_TOL = 1e-8


@dataclass
class PseudoDensity:
    f: CubeFunction
    degree: int
    kind: str = SOS_KIND
    measure: ProductMeasure | None = None

    def __post_init__(self):
        if self.kind not in (SOS_KIND, LOCAL_KIND):
            raise ValueError(f"unknown pseudo-density kind {self.kind!r}")
        if self.measure is None:
            self.measure = ProductMeasure.uniform(self.f.n)
        if self.measure.n != self.f.n:
            raise ValueError("measure arity mismatch")

    @property
    def m(self) -> int:
        return self.f.n

    def mean(self) -> float:
        return self.measure.expectation(self.f)

    def sup_norm(self) -> float:
        return self.f.sup_norm()


def index_family(m: int, order: int) -> list[tuple[int, ...]]:
    """Subsets of [m] of size <= order, 1-based, ordered by (size, colex)."""
    fam: list[tuple[int, ...]] = []
    for size in range(order + 1):
        subs = sorted(combinations(range(1, m + 1), size),
                      key=lambda s: sum(1 << (i - 1) for i in s))
        fam.extend(subs)
    return fam


def subset_moment(D: PseudoDensity, A: tuple[int, ...]) -> float:
    """E_x D(x) x^A under the uniform measure."""
    vals = D.f.values
    xs = np.arange(vals.size)
    mask = np.ones(vals.size, dtype=bool)
    for i in A:
        mask &= ((xs >> (i - 1)) & 1) == 1
    return float(np.sum(vals[mask])) / vals.size


@dataclass
class MomentMatrix:
    family: list[tuple[int, ...]]
    entries: np.ndarray
    base: PseudoDensity

    def as_sym(self) -> SymMatrix:
        return SymMatrix(self.entries)


def moment_matrix(D: PseudoDensity, d: int) -> MomentMatrix:
    """Y(A,B) = E D(x) x^{A u B} over the family {|A| <= d/2}."""
    m = D.m
    if m > MAX_MOMENT_M:
        raise ValueError(f"moment matrices supported up to m={MAX_MOMENT_M}")
    order = d // 2
    fam = index_family(m, order)
    moments: dict[tuple[int, ...], float] = {}
    r = len(fam)
    Y = np.empty((r, r))
    for i, A in enumerate(fam):
        for j, B in enumerate(fam[: i + 1]):
            U = tuple(sorted(set(A) | set(B)))
            if U not in moments:
                moments[U] = subset_moment(D, U)
            Y[i, j] = Y[j, i] = moments[U]
    return MomentMatrix(fam, Y, D)


@dataclass
class ValidationReport:
    passed: bool
    checks: list[tuple[str, bool, float]] = field(default_factory=list)

    def __bool__(self):
        return self.passed

    def lines(self) -> list[str]:
        out = []
        for name, ok, val in self.checks:
            out.append(f"{'PASS' if ok else 'FAIL'} {name} value={val:.12g}")
        return out


def validate_sos_pseudo_density(D: PseudoDensity, d: int,
                                tol: float = DEFAULT_VALIDATION_TOL) -> ValidationReport:
    """Mean-1 plus PSD moment matrix of order floor(d/2)."""
    checks = []
    mean = float(np.mean(D.f.values))
    checks.append(("mean-one", abs(mean - 1.0) <= max(tol, MEAN_TOL), mean))
    Y = moment_matrix(D, 2 * (d // 2))
    rep = psd_check(Y.as_sym(), tol)
    checks.append(("moment-matrix-psd", rep.passed, rep.min_eigenvalue))
    return ValidationReport(all(ok for _, ok, _ in checks), checks)


def _interp_weight(w: int, m: int) -> float:
    """2^m * c_w(m/2) / C(m,w) with c_w the Lagrange basis polynomial at m/2.

    Factors are consumed ratio-wise (numerator against denominator of
    comparable magnitude) to avoid overflow and cancellation up to m=15.
    """
    t = m / 2.0
    num = [t - a for a in range(m + 1) if a != w]
    den = [float(w - a) for a in range(m + 1) if a != w]
    val = (2.0 ** m) / math.comb(m, w)
    for nu, de in zip(num, den):
        val *= nu / de
    return val


def grigoriev_knapsack(m: int) -> PseudoDensity:
    """Degree-m pseudo-density with E D (sum x - m/2)^2 = 0, m odd."""
    if m % 2 == 0 or not 3 <= m <= 15:
        raise ValueError("m must be odd with 3 <= m <= 15")
    by_weight = [_interp_weight(w, m) for w in range(m + 1)]
    vals = np.array([by_weight[bin(x).count("1")] for x in range(1 << m)])
    return PseudoDensity(CubeFunction(m, vals), degree=m, kind=SOS_KIND)


def knapsack_objective(m: int) -> CubeFunction:
    """(1/m^2)((sum x - m/2)^2 - 1/4), nonnegative on the cube for odd m."""
    def fn(x):
        s = sum(x)
        return ((s - m / 2.0) ** 2 - 0.25) / m ** 2
    return CubeFunction.from_callable(m, fn)


def lopsided_pseudo_density(m: int) -> PseudoDensity:
    """Local pseudo-density on the biased measure mu(1) = 2/m, supported on
    Hamming weight <= 1.

    E_mu D = 1 exactly and E_mu D (1 - sum x)^2 = -1.  For the all-zeros
    subcube on S the pairing is 1 - 2|S|/m, so locality holds exactly up to
    junta degree floor(m/2); that is the validated degree recorded here.
    """
    if m < 3:
        raise ValueError("m must be at least 3")
    p = 2.0 / m
    mu = ProductMeasure([p] * m)
    w = mu.weights
    vals = np.zeros(1 << m)
    vals[0] = -1.0 / w[0]
    for i in range(m):
        idx = 1 << i
        vals[idx] = 2.0 / (m * w[idx])
    return PseudoDensity(CubeFunction(m, vals), degree=m // 2,
                         kind=LOCAL_KIND, measure=mu)


def validate_local_pseudo_density(D: PseudoDensity, d: int,
                                  mu: ProductMeasure | None = None,
                                  tol: float = 1e-10) -> ValidationReport:
    """E_mu D 1_b >= -tol for every subcube indicator on <= d coordinates."""
    mu = mu if mu is not None else D.measure
    m = D.m
    if m > MAX_MOMENT_M:
        raise ValueError(f"supported up to m={MAX_MOMENT_M}")
    w = mu.weights
    dvals = D.f.values
    xs = np.arange(1 << m)
    checks = []
    mean = float(np.dot(w, dvals))
    checks.append(("mean-one", abs(mean - 1.0) <= max(tol, MEAN_TOL), mean))
    worst = math.inf
    worst_tag = "none"
    for size in range(0, d + 1):
        for S in combinations(range(m), size):
            sel = np.zeros(1 << m, dtype=np.int64)
            for pos, i in enumerate(S):
                sel |= ((xs >> i) & 1) << pos
            for b in range(1 << size):
                val = float(np.dot(w[sel == b], dvals[sel == b]))
                if val < worst:
                    worst = val
                    worst_tag = f"S={tuple(i + 1 for i in S)} b={b:0{size}b}"
    ok = worst >= -tol
    checks.append((f"subcube-nonneg(worst {worst_tag})", ok, worst))
    return ValidationReport(all(c[1] for c in checks), checks)


def fourier_coefficient_bound_check(D: PseudoDensity, d: int) -> ValidationReport:
    """|E D chi_alpha| <= 1 for all |alpha| <= d (uniform measure)."""
    co = D.f.fourier
    worst = 0.0
    for mask in range(co.size):
        if int(mask).bit_count() <= d:
            worst = max(worst, abs(float(co[mask])))
    ok = worst <= 1.0 + 1e-9
    return ValidationReport(ok, [("fourier-coefficient-bound", ok, worst)])
