"""Entropy-optimal approximation suite: Gibbs states, squared-Taylor
approximants of matrix exponentials, sparse mirror-descent approximation
against test families, and classical junta approximation of densities.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cube import CubeFunction, ProductMeasure, lift_function
from .symmat import (DensityMatrix, SymMatrix, as_sym, eigendecompose, norms,
                     quantum_relative_entropy)

GIBBS_OVERFLOW_GUARD = 700.0
GUARANTEE_SLACK = 1e-9
ENTROPY_STEP_SLACK = 1e-6
LOW_DEGREE_CONSTANT = 40.0


class StepBudgetError(RuntimeError):
    """The descent failed to reach its guarantee within the step budget."""


@dataclass
class TestFamily:
    __test__ = False  # keep pytest collection away from the Test* name

    tests: list
    delta: float = field(init=False)

    def __post_init__(self):
        if not self.tests:
            raise ValueError("test family must be nonempty")
        self.tests = [as_sym(a) for a in self.tests]
        self.delta = max(norms(a)[0] for a in self.tests)

    def __len__(self):
        return len(self.tests)


def _shifted_exp(h: np.ndarray | SymMatrix) -> np.ndarray:
    """e^H / Tr(e^H) via eigendecomposition with spectrum shift."""
    w, v = eigendecompose(h)
    e = np.exp(w - np.max(w))
    e /= np.sum(e)
    return (v * e) @ v.T


def gibbs_state(F: SymMatrix | np.ndarray, lam: float) -> DensityMatrix:
    """e^{-lam F} / Tr(e^{-lam F})."""
    F = as_sym(F)
    if abs(lam) * norms(F)[0] > GIBBS_OVERFLOW_GUARD:
        raise ValueError(f"|lam| * ||F|| exceeds the overflow guard "
                         f"{GIBBS_OVERFLOW_GUARD}")
    return DensityMatrix(_shifted_exp(-lam * F.mat))


def gibbs_guarantee_check(F: SymMatrix | np.ndarray, lam: float,
                          Q: DensityMatrix, eps: float) -> tuple[bool, float]:
    """If lam >= D(Q||U)/eps then Tr(F X*) <= Tr(FQ) + eps + 1e-9."""
    F = as_sym(F)
    dim = F.dim
    rel = quantum_relative_entropy(Q, DensityMatrix.uniform(dim))
    if lam * eps < rel:
        raise ValueError("lam below D(Q||U)/eps; guarantee not claimed")
    x = gibbs_state(F, lam)
    lhs = float(np.sum(F.mat * x.mat))
    rhs = float(np.sum(F.mat * as_sym(Q).mat)) + eps + GUARANTEE_SLACK
    return lhs <= rhs, lhs - (rhs - eps - GUARANTEE_SLACK)


@dataclass
class TaylorSquare:
    coeffs: np.ndarray          # p(x) = sum_t coeffs[t] x^t, all >= 0
    degree: int
    state: DensityMatrix
    trace_error: float
    formula_degree: int


def exp_taylor_coeffs(k: int) -> np.ndarray:
    """Truncated exponential series coefficients 1/t!, exact up to the float
    overflow threshold of t! and computed in log space beyond it."""
    out = np.zeros(k + 1)
    for t in range(k + 1):
        out[t] = (1.0 / math.factorial(t) if t <= 170
                  else math.exp(-math.lgamma(t + 1.0)))
    return out


def _poly_eval_sym(coeffs: np.ndarray, F: SymMatrix) -> np.ndarray:
    w, v = eigendecompose(F)
    pw = np.polyval(coeffs[::-1], w)
    return (v * pw) @ v.T


def _square_state_error(F: SymMatrix, k: int) -> tuple[DensityMatrix, float]:
    """Normalized p_k(F/2)^2 against e^F/Tr e^F; both are spectral functions
    of F so the trace norm is a sum over eigenvalues."""
    w, _ = eigendecompose(F)
    shift = np.max(w)
    target = np.exp(w - shift)
    target /= np.sum(target)
    pw = np.polyval(exp_taylor_coeffs(k)[::-1], w / 2.0) ** 2
    tot = np.sum(pw)
    if tot <= 0:
        raise ValueError("degenerate polynomial state")
    approx = pw / tot
    err = float(np.sum(np.abs(target - approx)))
    _, v = eigendecompose(F)
    return DensityMatrix((v * approx) @ v.T), err


def taylor_degree_formula(f_norm: float, eps: float) -> int:
    """floor(3e(||F|| + log(1/eps)/loglog(1/eps))); the log ratio is replaced
    by 1 when eps >= 1/e where the iterated log changes sign."""
    log1 = math.log(1.0 / eps)
    term = log1 / math.log(log1) if log1 > 1.0 else 1.0
    return max(0, math.floor(3.0 * math.e * (f_norm + term)))


def taylor_square_approx(F: SymMatrix | np.ndarray, eps: float) -> TaylorSquare:
    """Degree-k squared Taylor polynomial state with trace-norm error <= eps.

    p_k is the truncated exponential series (coefficients 1/t!); the state is
    p_k(F/2)^2 normalized.  k starts at the degree formula value and grows
    only if the measured error still exceeds eps (never triggered in the
    formula's validity range eps < 1/e)."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    F = as_sym(F)
    k = taylor_degree_formula(norms(F)[0], eps)
    formula_k = k
    state, err = _square_state_error(F, k)
    while err > eps + GUARANTEE_SLACK:
        k += 1
        if k > formula_k + 200:
            raise RuntimeError("taylor degree runaway")
        state, err = _square_state_error(F, k)
    return TaylorSquare(exp_taylor_coeffs(k), k, state, err, formula_k)


@dataclass
class LowDegreeSquare:
    lam: float
    coeffs: np.ndarray          # q(x) = p_k(-lam x / 2), polynomial in F
    degree: int
    state: DensityMatrix
    degree_bound: float
    constant: float


def low_degree_square_approx(F: SymMatrix | np.ndarray, Q: DensityMatrix,
                             eps: float) -> LowDegreeSquare:
    """Density q(F)^2/Tr q(F)^2 with Tr(F . state) <= Tr(FQ) + eps.

    Composition of the Gibbs state at lam = (2/eps) D(Q||U) with a squared
    Taylor approximation of e^{-lam F} at trace tolerance eps/(2||F||)."""
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    F = as_sym(F)
    f_norm = norms(F)[0]
    rel = quantum_relative_entropy(Q, DensityMatrix.uniform(F.dim))
    lam = (2.0 / eps) * rel
    if f_norm <= 0 or lam == 0.0:
        k = 0
        state = DensityMatrix.uniform(F.dim)
        coeffs = np.array([1.0])
    else:
        eps_tr = min(eps / (2.0 * f_norm), 0.49)
        ts = taylor_square_approx(SymMatrix(-lam * F.mat), eps_tr)
        k = ts.degree
        state = ts.state
        # q(x) = p_k(-lam x / 2) as a polynomial in x
        coeffs = ts.coeffs * np.array([(-lam / 2.0) ** t for t in range(k + 1)])
    lhs = float(np.sum(F.mat * state.mat))
    target = float(np.sum(F.mat * as_sym(Q).mat))
    if lhs > target + eps + GUARANTEE_SLACK:
        raise RuntimeError(f"guarantee violated: {lhs:.6g} > {target + eps:.6g}")
    c = LOW_DEGREE_CONSTANT
    log1 = math.log(1.0 / eps)
    log_term = log1 / math.log(log1) if log1 > 1.0 else 1.0
    bound = c * (f_norm / eps) * rel + c * log_term
    return LowDegreeSquare(lam, coeffs, k, state, bound, c)


@dataclass
class DescentTrace:
    step: int
    test_id: int
    gap: float
    entropy: float

    def line(self) -> str:
        return (f"step={self.step} test={self.test_id} gap={self.gap:.12g} "
                f"entropy={self.entropy:.12g}")


@dataclass
class MirrorResult:
    state: DensityMatrix
    selected: list[int]
    budget: int
    trace: list[DescentTrace]
    final_gap: float


def mirror_descent_approx(Q: DensityMatrix, T: TestFamily, eps: float,
                          Q0: DensityMatrix) -> MirrorResult:
    """Sparse approximant exp(log Q0 + (eps/4 Delta^2) sum A_i), normalized,
    with max_A Tr(A(Q - state)) <= eps after at most
    ceil(8 eps^-2 D(Q||Q0) Delta^2) accepted steps.

    Tests are scanned in order and the first one whose gap exceeds eps is
    selected (deterministic).  Each accepted step must reduce D(Q||state) by
    at least eps^2/(8 Delta^2) - 1e-6."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    w0, _ = eigendecompose(Q0)
    if float(w0[0]) < 1e-10:
        raise ValueError("Q0 must be full rank (min eigenvalue >= 1e-10)")
    delta = T.delta
    rel0 = quantum_relative_entropy(Q, Q0)
    budget = max(0, math.ceil(8.0 * rel0 * delta ** 2 / eps ** 2))
    step_size = eps / (4.0 * delta ** 2)
    log_q0 = None
    wq0, vq0 = eigendecompose(Q0)
    log_q0 = (vq0 * np.log(wq0)) @ vq0.T

    exponent = log_q0.copy()
    state = _shifted_exp(exponent)
    selected: list[int] = []
    trace: list[DescentTrace] = []
    entropy = quantum_relative_entropy(Q, DensityMatrix(state, validate=False))
    min_drop = eps ** 2 / (8.0 * delta ** 2) - ENTROPY_STEP_SLACK

    qmat = as_sym(Q).mat
    for step in range(budget + 1):
        diff = qmat - state
        pick = -1
        gap = -math.inf
        for i, a in enumerate(T.tests):
            g = float(np.sum(a.mat * diff))
            gap = max(gap, g)
            if pick < 0 and g > eps:
                pick = i
                pick_gap = g
        if pick < 0:
            return MirrorResult(DensityMatrix(state, validate=False), selected,
                                budget, trace, gap)
        if step == budget:
            break
        exponent = exponent + step_size * T.tests[pick].mat
        state = _shifted_exp(exponent)
        new_entropy = quantum_relative_entropy(
            Q, DensityMatrix(state, validate=False))
        if entropy - new_entropy < min_drop:
            raise StepBudgetError(
                f"entropy drop {entropy - new_entropy:.3e} below the "
                f"guaranteed per-step decrease at step {step}")
        entropy = new_entropy
        selected.append(pick)
        trace.append(DescentTrace(step, pick, pick_gap, new_entropy))
    raise StepBudgetError(
        f"guarantee not reached within {budget} steps (last gap {gap:.6g})")


@dataclass
class FamilySquare:
    base: SymMatrix             # F in conv(T)
    coeffs: np.ndarray
    degree: int
    state: DensityMatrix
    selected: list[int]
    degree_bound: float


def approx_against_family(Q: DensityMatrix, T: TestFamily, eps: float,
                          convex: bool = False) -> FamilySquare:
    """Low-degree square p(F)^2 of a single F in conv(T) with
    max_A Tr(A(Q - p(F)^2)) <= eps; requires T declared convex."""
    if not convex:
        raise ValueError("family must be declared convex for this guarantee")
    if not 0.0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    dim = as_sym(T.tests[0]).dim
    uniform = DensityMatrix.uniform(dim)
    md = mirror_descent_approx(Q, T, eps / 2.0, uniform)
    if not md.selected:
        base = as_sym(T.tests[0])
        state = uniform
        coeffs = np.array([1.0])
        k = 0
    else:
        h = len(md.selected)
        base_mat = sum(T.tests[i].mat for i in md.selected) / h
        base = SymMatrix(base_mat)
        scale = (eps / 2.0) / (4.0 * T.delta ** 2) * h
        eps_tr = min(eps / (2.0 * T.delta), 0.49)
        ts = taylor_square_approx(SymMatrix(scale * base_mat), eps_tr)
        state = ts.state
        coeffs = ts.coeffs * np.array([(scale / 2.0) ** t
                                       for t in range(ts.degree + 1)])
        k = ts.degree
    diff = as_sym(Q).mat - state.mat
    worst = max(float(np.sum(a.mat * diff)) for a in T.tests)
    if worst > eps + GUARANTEE_SLACK:
        raise StepBudgetError(f"family guarantee violated: {worst:.6g} > {eps}")
    rel = quantum_relative_entropy(Q, uniform)
    bound = LOW_DEGREE_CONSTANT * (1.0 + rel) * T.delta / eps
    return FamilySquare(base, coeffs, k, state, md.selected, bound)


# ---------------------------------------------------------------------------
# Classical junta approximation.


@dataclass
class JuntaTest:
    support: tuple[int, ...]    # 1-based coordinates the test depends on
    g: CubeFunction             # full-arity table, a |support|-junta

    def __post_init__(self):
        co = self.g.fourier
        mask_allowed = 0
        for i in self.support:
            mask_allowed |= 1 << (i - 1)
        for m in range(co.size):
            if m & ~mask_allowed and abs(float(co[m])) > 1e-10:
                raise ValueError("test depends on coordinates outside its "
                                 "declared support")


@dataclass
class JuntaResult:
    density: CubeFunction
    support: tuple[int, ...]
    selected: list[int]
    budget: int
    trace: list[DescentTrace]
    final_gap: float


def relative_entropy_density(f: CubeFunction, mu: ProductMeasure) -> float:
    """D(f mu || mu) = E_mu f log f for a nonnegative mean-one density."""
    vals = f.values
    if float(np.min(vals)) < -1e-12:
        raise ValueError("density must be nonnegative")
    pos = vals > 0
    return float(np.dot(mu.weights[pos], vals[pos] * np.log(vals[pos])))


def junta_approx(f: CubeFunction, mu: ProductMeasure, tests: list[JuntaTest],
                 eps: float) -> JuntaResult:
    """Junta density exp((eps/4 Delta^2) sum g_i) normalized, with
    E_mu g (f - f~) <= eps for every test; support is the union of the
    selected tests' supports."""
    if not tests:
        raise ValueError("test family must be nonempty")
    if eps <= 0:
        raise ValueError("eps must be positive")
    if abs(mu.expectation(f) - 1.0) > 1e-10:
        raise ValueError("f must have mean 1 under mu")
    delta = max(t.g.sup_norm() for t in tests)
    rel0 = relative_entropy_density(f, mu)
    budget = max(0, math.ceil(8.0 * rel0 * delta ** 2 / eps ** 2))
    step_size = eps / (4.0 * delta ** 2)
    w = mu.weights
    n = f.n

    exponent = np.zeros(1 << n)
    state = np.ones(1 << n)
    selected: list[int] = []
    trace: list[DescentTrace] = []

    def rel_to(state_vals):
        pos = f.values > 0
        return float(np.dot(w[pos], f.values[pos]
                            * np.log(f.values[pos] / state_vals[pos])))

    entropy = rel_to(state)
    min_drop = eps ** 2 / (8.0 * delta ** 2) - ENTROPY_STEP_SLACK
    for step in range(budget + 1):
        diff = f.values - state
        pick = -1
        gap = -math.inf
        for i, t in enumerate(tests):
            g = float(np.dot(w, t.g.values * diff))
            gap = max(gap, g)
            if pick < 0 and g > eps:
                pick = i
                pick_gap = g
        if pick < 0:
            support = tuple(sorted({i for j in selected
                                    for i in tests[j].support}))
            return JuntaResult(CubeFunction(n, state), support, selected,
                               budget, trace, gap)
        if step == budget:
            break
        exponent = exponent + step_size * tests[pick].g.values
        raw = np.exp(exponent - np.max(exponent))
        state = raw / float(np.dot(w, raw))
        new_entropy = rel_to(state)
        if entropy - new_entropy < min_drop:
            raise StepBudgetError(
                f"entropy drop {entropy - new_entropy:.3e} below guarantee "
                f"at step {step}")
        entropy = new_entropy
        selected.append(pick)
        trace.append(DescentTrace(step, pick, pick_gap, new_entropy))
    raise StepBudgetError(
        f"guarantee not reached within {budget} steps (last gap {gap:.6g})")
