"""Sum-of-squares upper bounds on the cube and their dual pseudo-densities.

The primal asks for the least c with c - f a sum of squares of degree-d/2
functions (Gram matrix over the monomial basis); the dual maximizes
<D, f> over degree-d pseudo-densities.  Both are solved as small SDPs via
cvxpy/Clarabel; an alternating-projection (Dykstra) feasibility routine is
provided as an independent second engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import cvxpy as cp
import numpy as np

from .cube import CubeFunction
from .pseudo import (PseudoDensity, ValidationReport, index_family,
                     validate_sos_pseudo_density)
from .symmat import SymMatrix, eigendecompose, psd_check

MAX_SOS_N = 12
MAX_BASIS = 300
DEFAULT_GAP_TOL = 1e-6
FEASIBILITY_REL_TOL = 1e-7
PROJECTION_BUDGET = 50_000


class SolverError(RuntimeError):
    pass


class CertificateError(ValueError):
    pass


def _round_up_even(d: int) -> int:
    return d if d % 2 == 0 else d + 1


@lru_cache(maxsize=None)
def _monomial_data(n: int, order: int):
    """(index family, evaluation matrix Phi of shape (2^n, r))."""
    fam = index_family(n, order)
    xs = np.arange(1 << n)
    cols = []
    for A in fam:
        col = np.ones(1 << n)
        for i in A:
            col = col * ((xs >> (i - 1)) & 1)
        cols.append(col)
    return fam, np.array(cols).T


def monomial_basis(n: int, order: int) -> list[CubeFunction]:
    fam, phi = _monomial_data(n, order)
    return [CubeFunction(n, phi[:, j]) for j in range(len(fam))]


@dataclass
class SosCertificate:
    c: float
    d: int
    basis: list[CubeFunction]
    gram: SymMatrix
    squares: list[CubeFunction] = field(default_factory=list)
    basis_sets: list[tuple[int, ...]] | None = None

    @property
    def n(self) -> int:
        return self.basis[0].n


@dataclass
class SosDualSolution:
    density: PseudoDensity
    value: float
    validation: ValidationReport


@dataclass
class SosDegreeResult:
    degree: int
    witnesses: dict[int, PseudoDensity]

    def __int__(self):
        return self.degree


def _check_capacity(n: int, order: int) -> None:
    if n > MAX_SOS_N:
        raise ValueError(f"sos solves limited to n <= {MAX_SOS_N}")
    r = len(index_family(n, order))
    if r > MAX_BASIS:
        raise ValueError(f"basis size {r} exceeds limit {MAX_BASIS}")


@lru_cache(maxsize=None)
def _primal_problem(n: int, order: int):
    fam, phi = _monomial_data(n, order)
    r = len(fam)
    fpar = cp.Parameter(1 << n)
    G = cp.Variable((r, r), PSD=True)
    c = cp.Variable()
    quad = cp.sum(cp.multiply(phi @ G, phi), axis=1)
    prob = cp.Problem(cp.Minimize(c), [quad == c - fpar])
    return prob, fpar, G, c


@lru_cache(maxsize=None)
def _dual_problem(n: int, order: int, minimize: bool):
    fam, phi = _monomial_data(n, order)
    N = 1 << n
    fpar = cp.Parameter(N)
    D = cp.Variable(N)
    M = phi.T @ cp.diag(D) @ phi / N
    obj = cp.sum(cp.multiply(D, fpar)) / N
    cons = [cp.sum(D) / N == 1, (M + M.T) / 2 >> 0]
    if minimize:
        # box bound keeps the witness search bounded; any pseudo-density with
        # |D| <= sum_{i<=d} C(n,i) and E D f < 0 already refutes feasibility
        bound = float(sum(math.comb(n, i) for i in range(2 * order + 1)))
        cons += [D <= bound, D >= -bound]
    prob = cp.Problem(cp.Minimize(obj) if minimize else cp.Maximize(obj), cons)
    return prob, fpar, D


@lru_cache(maxsize=None)
def _residual_problem(n: int, order: int):
    fam, phi = _monomial_data(n, order)
    r = len(fam)
    fpar = cp.Parameter(1 << n)
    G = cp.Variable((r, r), PSD=True)
    t = cp.Variable(nonneg=True)
    quad = cp.sum(cp.multiply(phi @ G, phi), axis=1)
    prob = cp.Problem(cp.Minimize(t), [quad - fpar <= t, fpar - quad <= t])
    return prob, fpar, G, t


def _solve(prob: cp.Problem) -> float:
    try:
        val = prob.solve(solver=cp.CLARABEL)
    except cp.SolverError as exc:  # pragma: no cover
        raise SolverError(str(exc)) from exc
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverError(f"solver finished with status {prob.status}")
    return float(val)


def _clip_psd(mat: np.ndarray) -> np.ndarray:
    w, v = eigendecompose(mat)
    return (v * np.clip(w, 0.0, None)) @ v.T


def extract_squares(gram: SymMatrix | np.ndarray, basis: list[CubeFunction]
                    ) -> list[CubeFunction]:
    """g_t = sqrt(l_t) sum_A V[A,t] basis_A from the Gram eigendecomposition."""
    g = gram.mat if isinstance(gram, SymMatrix) else np.asarray(gram, dtype=float)
    w, v = eigendecompose(g)
    scale = max(1.0, float(np.max(np.abs(w))) if w.size else 0.0)
    if w.size and w[0] < -1e-8 * scale:
        raise CertificateError(f"gram matrix not PSD: min eigenvalue {w[0]:.3e}")
    n = basis[0].n
    table = np.array([b.values for b in basis])
    out = []
    for t in range(w.size - 1, -1, -1):
        if w[t] <= 1e-14 * scale:
            continue
        out.append(CubeFunction(n, np.sqrt(w[t]) * (v[:, t] @ table)))
    return out


def sos_upper_bound(f: CubeFunction, d: int, tol: float = DEFAULT_GAP_TOL
                    ) -> tuple[SosCertificate, SosDualSolution]:
    d = _round_up_even(max(d, 2))
    order = d // 2
    _check_capacity(f.n, order)
    prob, fpar, G, c = _primal_problem(f.n, order)
    fpar.value = f.values
    cval = _solve(prob)
    dprob, dfpar, Dvar = _dual_problem(f.n, order, False)
    dfpar.value = f.values
    dval = _solve(dprob)
    gap = cval - dval
    if gap > tol:
        raise SolverError(f"duality gap {gap:.3e} exceeds tolerance {tol:.3e}")
    fam, _ = _monomial_data(f.n, order)
    basis = monomial_basis(f.n, order)
    gram = SymMatrix(_clip_psd(np.asarray(G.value)))
    squares = extract_squares(gram, basis)
    cert = SosCertificate(cval, d, basis, gram, squares, fam)
    D = PseudoDensity(CubeFunction(f.n, np.asarray(Dvar.value)), degree=d)
    val = validate_sos_pseudo_density(D, d, tol=1e-6)
    dual = SosDualSolution(D, dval, val)
    return cert, dual


def sos_feasibility(f: CubeFunction, d: int) -> tuple[bool, float, np.ndarray]:
    """Least pointwise residual of representing f itself as a degree-d sos.

    Feasible means residual < 1e-7 * max(1, ||f||_inf).
    """
    d = _round_up_even(max(d, 2))
    order = d // 2
    _check_capacity(f.n, order)
    prob, fpar, G, t = _residual_problem(f.n, order)
    fpar.value = f.values
    res = _solve(prob)
    feas = res < FEASIBILITY_REL_TOL * max(1.0, f.sup_norm())
    return feas, res, np.asarray(G.value)


def _dual_witness(f: CubeFunction, d: int) -> tuple[float, PseudoDensity]:
    order = d // 2
    prob, fpar, Dvar = _dual_problem(f.n, order, True)
    fpar.value = f.values
    val = _solve(prob)
    D = PseudoDensity(CubeFunction(f.n, np.asarray(Dvar.value)), degree=d)
    return val, D


def sos_degree(f: CubeFunction, tol: float = 1e-9) -> SosDegreeResult:
    """Least even d such that f is a sum of squares of degree-(d/2) functions."""
    if f.n > 10:
        raise ValueError("sos_degree limited to n <= 10")
    if float(np.min(f.values)) < -tol:
        raise ValueError(f"function attains {np.min(f.values):.3e} < -tol; "
                         "sos degree defined for nonnegative functions")
    if f.degree() == 0:
        return SosDegreeResult(0, {})
    witnesses: dict[int, PseudoDensity] = {}
    for d in range(2, 2 * f.n + 1, 2):
        feas, _res, _g = sos_feasibility(f, d)
        if feas:
            return SosDegreeResult(d, witnesses)
        val, D = _dual_witness(f, d)
        if val < 0:
            witnesses[d] = D
    # every nonnegative function is the square of its pointwise square root
    return SosDegreeResult(2 * f.n, witnesses)


def subspace_sos_upper_bound(f: CubeFunction, u_basis: list[CubeFunction],
                             tol: float = DEFAULT_GAP_TOL) -> SosCertificate:
    """Least c with c - f a sum of squares of functions from span(u_basis)."""
    if len(u_basis) > MAX_BASIS:
        raise ValueError(f"basis size limited to {MAX_BASIS}")
    phi = np.array([b.values for b in u_basis]).T
    gram_basis = phi.T @ phi / phi.shape[0]
    lo = float(np.linalg.eigvalsh(gram_basis)[0])
    if lo <= 1e-10:
        raise ValueError(f"basis not linearly independent (min gram eig {lo:.3e})")
    r = len(u_basis)
    G = cp.Variable((r, r), PSD=True)
    c = cp.Variable()
    quad = cp.sum(cp.multiply(phi @ G, phi), axis=1)
    prob = cp.Problem(cp.Minimize(c), [quad == c - f.values])
    try:
        cval = prob.solve(solver=cp.CLARABEL)
    except cp.SolverError as exc:
        raise SolverError(str(exc)) from exc
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        raise CertificateError("no multiple of 1 minus f lies in the square cone "
                               "of the given subspace")
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverError(f"solver finished with status {prob.status}")
    gram = SymMatrix(_clip_psd(np.asarray(G.value)))
    squares = extract_squares(gram, u_basis)
    return SosCertificate(float(cval), 2 * max(b.degree() for b in u_basis),
                          u_basis, gram, squares)


def subspace_square_certify(target: CubeFunction, u_basis: list[CubeFunction],
                            tol: float = 1e-8) -> SymMatrix:
    """Gram certificate that target = sum of squares from span(u_basis)."""
    phi = np.array([b.values for b in u_basis]).T
    r = len(u_basis)
    G = cp.Variable((r, r), PSD=True)
    t = cp.Variable(nonneg=True)
    quad = cp.sum(cp.multiply(phi @ G, phi), axis=1)
    prob = cp.Problem(cp.Minimize(t), [quad - target.values <= t,
                                       target.values - quad <= t])
    res = _solve(prob)
    if res > max(tol, FEASIBILITY_REL_TOL * max(1.0, target.sup_norm())):
        raise CertificateError(f"target not a subspace sum of squares "
                               f"(residual {res:.3e})")
    return SymMatrix(_clip_psd(np.asarray(G.value)))


@dataclass
class CertificateReport:
    passed: bool
    pointwise_residual: float
    gram_min_eig: float
    max_square_degree: int

    def __bool__(self):
        return self.passed


def verify_certificate(f: CubeFunction, cert: SosCertificate,
                       tol: float | None = None) -> CertificateReport:
    if tol is None:
        tol = FEASIBILITY_REL_TOL * max(1.0, f.sup_norm())
    total = np.zeros(1 << f.n)
    for g in cert.squares:
        total += g.values ** 2
    resid = float(np.max(np.abs(cert.c - f.values - total)))
    rep = psd_check(cert.gram, 1e-8)
    degs = [g.degree() for g in cert.squares]
    maxdeg = max(degs) if degs else 0
    ok = resid <= tol and rep.passed and maxdeg <= cert.d // 2
    return CertificateReport(ok, resid, rep.min_eigenvalue, maxdeg)


def _gauss_newton_squares(target: np.ndarray, theta: np.ndarray, phi: np.ndarray,
                          iters: int = 200) -> np.ndarray:
    """Refine coefficient vectors theta (r x t) so sum_t (phi theta_t)^2 fits
    target; damped Gauss-Newton with backtracking."""
    r = phi.shape[1]

    def residual(th):
        return target - np.sum((phi @ th) ** 2, axis=1)

    best = theta
    res = residual(theta)
    for _ in range(iters):
        if np.max(np.abs(res)) < 1e-14:
            break
        vals = phi @ best
        t_cnt = best.shape[1]
        J = np.empty((phi.shape[0], best.size))
        for t in range(t_cnt):
            J[:, t * r:(t + 1) * r] = 2.0 * vals[:, [t]] * phi
        step, *_ = np.linalg.lstsq(J, res, rcond=None)
        step = step.reshape(t_cnt, r).T
        scale = 1.0
        improved = False
        for _bt in range(30):
            cand = best + scale * step
            cres = residual(cand)
            if np.max(np.abs(cres)) < np.max(np.abs(res)):
                best, res = cand, cres
                improved = True
                break
            scale *= 0.5
        if not improved:
            break
    return best


def polish_squares(target: CubeFunction | np.ndarray, squares: list[CubeFunction],
                   basis: list[CubeFunction], iters: int = 200
                   ) -> list[CubeFunction]:
    """Gauss-Newton refinement of a decomposition target = sum_t g_t^2.

    Each square stays in the span of `basis` (degrees are preserved); used to
    push solver-accuracy certificates toward machine precision when an exact
    decomposition exists.
    """
    if not squares:
        return squares
    n = squares[0].n
    tvals = target.values if isinstance(target, CubeFunction) else np.asarray(target)
    phi = np.array([b.values for b in basis]).T          # (2^n, r)
    theta, *_ = np.linalg.lstsq(phi, np.array([g.values for g in squares]).T,
                                rcond=None)               # (r, t)
    theta = _gauss_newton_squares(tvals, theta, phi, iters)
    vals = phi @ theta
    return [CubeFunction(n, vals[:, t]) for t in range(theta.shape[1])]


def square_decomposition(f: CubeFunction, d: int, tol: float = 1e-9
                         ) -> list[CubeFunction]:
    """Write f itself as a sum of squares of degree-(d/2) functions, polished
    to pointwise residual <= tol; raises CertificateError when infeasible."""
    feas, res, G = sos_feasibility(f, d)
    if not feas:
        raise CertificateError(f"f is not a degree-{d} sum of squares "
                               f"(residual {res:.3e})")
    basis = monomial_basis(f.n, _round_up_even(max(d, 2)) // 2)
    squares = extract_squares(_clip_psd(G), basis)
    squares = polish_squares(f, squares, basis)
    total = sum(g.values ** 2 for g in squares)
    resid = float(np.max(np.abs(total - f.values)))
    if resid > tol:
        raise CertificateError(f"square decomposition residual {resid:.3e} "
                               f"exceeds {tol:.3e}")
    return squares


# ---------------------------------------------------------------------------
# Alternating-projection second engine (Dykstra), independent of cvxpy.


def projection_feasibility(f: CubeFunction, d: int,
                           max_iters: int = PROJECTION_BUDGET,
                           tol: float | None = None) -> tuple[bool, float]:
    """Second feasibility engine, independent of the convex solver.

    Dykstra alternating projections between {G psd} and
    {G : diag(Phi G Phi^T) = f} give an approximately feasible Gram matrix;
    a damped Gauss-Newton pass on the extracted square coefficients then
    resolves boundary cases where the projection residual decays slowly.
    Returns (feasible, best pointwise residual).
    """
    d = _round_up_even(max(d, 2))
    order = d // 2
    _check_capacity(f.n, order)
    if tol is None:
        tol = FEASIBILITY_REL_TOL * max(1.0, f.sup_norm())
    fam, phi = _monomial_data(f.n, order)
    r = len(fam)
    b = f.values
    K = (phi @ phi.T) ** 2
    Kpinv = np.linalg.pinv(K, rcond=1e-12)
    # range check: b must be expressible as diag(Phi G Phi^T) for symmetric G
    consistency = float(np.max(np.abs(K @ (Kpinv @ b) - b)))
    if consistency > 1e-9 * max(1.0, f.sup_norm()):
        return False, consistency

    def apply_a(G):
        return np.sum((phi @ G) * phi, axis=1)

    def project_affine(G):
        u = Kpinv @ (apply_a(G) - b)
        return G - phi.T @ (u[:, None] * phi)

    G = np.zeros((r, r))
    corr = np.zeros_like(G)
    resid = np.inf
    check_every = 50
    for it in range(max_iters):
        Y = project_affine(G)
        Z = Y + corr
        w, v = np.linalg.eigh(0.5 * (Z + Z.T))
        G = (v * np.clip(w, 0.0, None)) @ v.T
        corr = Z - G
        if it % check_every == 0 or it == max_iters - 1:
            resid = float(np.max(np.abs(apply_a(G) - b)))
            if resid < tol:
                return True, resid
    # boundary polish: refine square coefficients by Gauss-Newton
    w, v = np.linalg.eigh(G)
    theta = v * np.sqrt(np.clip(w, 0.0, None))
    theta = _gauss_newton_squares(b, theta, phi)
    resid = min(resid, float(np.max(np.abs(b - np.sum((phi @ theta) ** 2, axis=1)))))
    return resid < tol, resid


def projection_sos_degree(f: CubeFunction, max_iters: int = 3000) -> int:
    """Feasibility sweep using only the projection engine."""
    if f.degree() == 0:
        return 0
    for d in range(2, 2 * f.n + 1, 2):
        feas, _ = projection_feasibility(f, d, max_iters)
        if feas:
            return d
    return 2 * f.n
