"""Pattern matrices M(S,x) = f(x_S), the separating functional L_D, explicit
psd and nonnegative factorizations, rescaling, and degree-reduction
experiments.

Rows are indexed by m-subsets of [n] in colexicographic order (increasing
characteristic bitmask); columns by assignments in x-lexicographic order
with x_1 least significant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
from scipy.optimize import nnls

from .cube import (CubeFunction, MatrixValuedCubeFunction, lift_function,
                   restrict_point)
from .pseudo import PseudoDensity, index_family
from .rng import SplitMix64
from .sos import SosCertificate, subspace_square_certify
from .symmat import matrix_sqrt, norms, psd_check

DENSE_CELL_LIMIT = 1 << 26
EXACT_ROW_LIMIT = 100_000


def pairwise_sum(values) -> float:
    """Deterministic pairwise tree reduction."""
    vals = [float(v) for v in values]
    if not vals:
        return 0.0
    while len(vals) > 1:
        nxt = [vals[i] + vals[i + 1] for i in range(0, len(vals) - 1, 2)]
        if len(vals) % 2:
            nxt.append(vals[-1])
        vals = nxt
    return vals[0]


def row_subsets(n: int, m: int) -> list[tuple[int, ...]]:
    """m-subsets of [n] in colexicographic order."""
    return sorted(combinations(range(1, n + 1), m),
                  key=lambda s: sum(1 << (i - 1) for i in s))


class PatternMatrix:
    def __init__(self, f: CubeFunction, n: int):
        if f.n > n or n > 20:
            raise ValueError("need m <= n <= 20")
        self.f = f
        self.m = f.n
        self.n = n
        self.rows = row_subsets(n, self.m)
        self._dense: np.ndarray | None = None

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.rows), 1 << self.n)

    def row_values(self, S: tuple[int, ...]) -> np.ndarray:
        return lift_function(self.f, S, self.n).values

    def dense(self) -> np.ndarray:
        if self._dense is None:
            cells = len(self.rows) * (1 << self.n)
            if cells > DENSE_CELL_LIMIT:
                raise ValueError(f"dense pattern matrix of {cells} cells too large")
            self._dense = np.array([self.row_values(S) for S in self.rows])
        return self._dense

    def sup_norm(self) -> float:
        return self.f.sup_norm()

    def __repr__(self):
        return f"PatternMatrix(m={self.m}, n={self.n}, shape={self.shape})"


def build_pattern_matrix(f: CubeFunction, n: int) -> PatternMatrix:
    return PatternMatrix(f, n)


class LowDegreeSquareMatrix:
    """N(S,x) = Tr(A_S^2 B(x)^2) = ||A_S B(x)||_F^2 for symmetric A_S."""

    def __init__(self, n: int, m: int, a_for_row, b: MatrixValuedCubeFunction):
        self.n = n
        self.m = m
        self.rows = row_subsets(n, m)
        self.a_for_row = a_for_row  # callable S -> symmetric ndarray
        self.b = b

    def row_values(self, S: tuple[int, ...]) -> np.ndarray:
        a = self.a_for_row(S)
        prod = np.einsum('ij,xjk->xik', a, self.b.values)
        return np.einsum('xik,xik->x', prod, prod)


@dataclass
class LdResult:
    value: float
    exact: bool
    std_error: float = 0.0
    sampled_rows: int = 0

    def __float__(self):
        return self.value


def ld_functional(D: PseudoDensity, N, seed: int = 0,
                  sample_rows: int | None = None) -> LdResult:
    """L_D(N) = E_{|S|=m} E_x D(x_S) N(S,x).

    Exact subset enumeration when C(n,m) <= 100000 and no row sampling is
    requested; otherwise seeded uniform row sampling with reported standard
    error.  Sums use a deterministic pairwise tree reduction.
    """
    m = D.m
    if N.m != m:
        raise ValueError(f"row arity {N.m} does not match pseudo-density m={m}")
    n = N.n
    total_rows = math.comb(n, m)
    exact = sample_rows is None and total_rows <= EXACT_ROW_LIMIT

    def row_value(S):
        dvals = lift_function(D.f, S, n).values
        return pairwise_sum(dvals * N.row_values(S)) / (1 << n)

    if exact:
        value = pairwise_sum(row_value(S) for S in N.rows) / total_rows
        return LdResult(value, True)
    k = sample_rows if sample_rows is not None else 1000
    rng = SplitMix64(seed)
    samples = []
    all_rows = N.rows
    for _ in range(k):
        samples.append(row_value(all_rows[rng.randint(len(all_rows))]))
    value = pairwise_sum(samples) / k
    var = pairwise_sum((s - value) ** 2 for s in samples) / max(k - 1, 1)
    return LdResult(value, False, math.sqrt(var / k), k)


def mobius_coefficients(f: CubeFunction) -> np.ndarray:
    """Multilinear monomial coefficients: f(x) = sum_{A subseteq x} c[A]."""
    c = f.values.copy()
    m = f.n
    for i in range(m):
        bit = 1 << i
        for x in range(1 << m):
            if x & bit:
                c[x] -= c[x ^ bit]
    return c


@dataclass
class PsdFactorization:
    r: int
    P: list[np.ndarray]
    Q: list[np.ndarray]
    row_index: list[tuple[int, ...]] | None = None

    @property
    def p(self) -> int:
        return len(self.P)

    @property
    def q(self) -> int:
        return len(self.Q)

    def entries(self) -> np.ndarray:
        Pst = np.array(self.P)
        Qst = np.array(self.Q)
        return np.einsum('irs,jrs->ij', Pst, Qst)


@dataclass
class FactReport:
    passed: bool
    max_residual: float
    min_factor_eig: float

    def __bool__(self):
        return self.passed


def _pattern_dense(M) -> np.ndarray:
    if isinstance(M, PatternMatrix):
        return M.dense()
    return np.asarray(M, dtype=float)


def verify_psd_factorization(M, fact: PsdFactorization, tol: float = 1e-8
                             ) -> FactReport:
    dense = _pattern_dense(M)
    resid = float(np.max(np.abs(dense - fact.entries())))
    scale = max(1.0, max((norms(P)[0] for P in fact.P), default=0.0),
                max((norms(Q)[0] for Q in fact.Q), default=0.0))
    min_eig = math.inf
    for fam in (fact.P, fact.Q):
        for a in fam:
            min_eig = min(min_eig, float(np.linalg.eigvalsh(a)[0]))
    ok = resid <= tol and min_eig >= -1e-8 * scale
    return FactReport(ok, resid, min_eig)


def explicit_psd_factorization(f: CubeFunction, cert, n: int) -> PsdFactorization:
    """Psd factorization of the pattern matrix from a square decomposition
    f = sum_j g_j^2 with deg g_j <= 1 + d/2.

    Index family: subsets of [n] of size <= 1 + d/2.  Columns are rank one,
    (Q_x)_{A,B} = x^A x^B; rows collect the lifted monomial coefficients of
    the squares.
    """
    squares = cert.squares if isinstance(cert, SosCertificate) else list(cert)
    if not squares:
        raise ValueError("empty square decomposition")
    m = squares[0].n
    if m > n:
        raise ValueError("cannot lift to fewer variables")
    total = sum(g.values ** 2 for g in squares)
    resid = float(np.max(np.abs(total - f.values)))
    if resid > 1e-8 * max(1.0, f.sup_norm()):
        raise ValueError(f"squares do not certify f itself (residual {resid:.3e})")
    order = max(g.degree() for g in squares)
    fam = index_family(n, order)
    r = len(fam)
    if r > 400:
        raise ValueError(f"factorization rank {r} exceeds capacity")
    pos = {A: i for i, A in enumerate(fam)}

    coeff_list = [mobius_coefficients(g) for g in squares]
    rows = row_subsets(n, m)
    P = []
    for S in rows:
        vecs = np.zeros((len(squares), r))
        for j, co in enumerate(coeff_list):
            for a_mask in range(1 << m):
                c = co[a_mask]
                if abs(c) <= 1e-14:
                    continue
                A = tuple(S[i] for i in range(m) if (a_mask >> i) & 1)
                vecs[j, pos[A]] = c
        P.append(vecs.T @ vecs)

    xs = np.arange(1 << n)
    cols_v = np.ones((1 << n, r))
    for idx, A in enumerate(fam):
        col = np.ones(1 << n)
        for i in A:
            col = col * ((xs >> (i - 1)) & 1)
        cols_v[:, idx] = col
    Q = [np.outer(cols_v[x], cols_v[x]) for x in range(1 << n)]
    return PsdFactorization(r, P, Q, rows)


@dataclass
class RescaleReport:
    passed: bool
    eta: float
    m_sup: float
    gamma_balanced: float
    entry_lower_ok: bool
    entry_upper_ok: bool
    mean_identity_residual: float
    max_p_norm: float
    p_bound_balanced: float
    p_bound_theorem: float
    max_q_eig: float
    q_bound: float

    def __bool__(self):
        return self.passed


def pre_balance(fact: PsdFactorization) -> tuple[PsdFactorization, float]:
    """Scalar balancing A_i -> A_i/t, B_j -> t B_j equalizing
    max ||A_i|| and max ||B_j||_*; entries unchanged."""
    max_a = max((norms(P)[0] for P in fact.P), default=0.0)
    max_b = max((norms(Q)[1] for Q in fact.Q), default=0.0)
    if max_a <= 0 or max_b <= 0:
        raise ValueError("cannot balance a zero factor family")
    t = math.sqrt(max_a / max_b)
    P = [a / t for a in fact.P]
    Q = [t * b for b in fact.Q]
    return PsdFactorization(fact.r, P, Q, fact.row_index), t


def rescale_factorization(M, fact: PsdFactorization, eta: float,
                          tol: float = 1e-8) -> tuple[PsdFactorization, RescaleReport]:
    """Normalized rescaling: with A = eta ||M||_inf Id + mean(A_i),
    P_i = A^{-1/2}(eta ||M||_inf Id + A_i) A^{-1/2} and Q_j = A^{1/2} B_j A^{1/2}.

    Input B factors are first normalized to trace norm <= 1 (compensated on
    the A side), so Tr(P_i Q_j) = M_ij + eta ||M||_inf Tr(B_j) lands in
    [M_ij, M_ij + eta ||M||_inf].
    """
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    dense = _pattern_dense(M)
    m_sup = float(np.max(np.abs(dense)))
    if m_sup <= 0:
        raise ValueError("rescaling undefined for the zero matrix")
    s = max(norms(Q)[1] for Q in fact.Q)
    if s <= 0:
        raise ValueError("cannot rescale a zero factor family")
    A_fam = [a * s for a in fact.P]
    B_fam = [b / s for b in fact.Q]
    gamma = max(norms(a)[0] for a in A_fam)

    r = fact.r
    Abar = eta * m_sup * np.eye(r) + sum(A_fam) / len(A_fam)
    w, v = np.linalg.eigh(Abar)
    if np.min(w) <= 0:
        raise ValueError("interior shift failed to make the mean positive definite")
    root = (v * np.sqrt(w)) @ v.T
    inv_root = (v / np.sqrt(w)) @ v.T
    P_new = [inv_root @ (eta * m_sup * np.eye(r) + a) @ inv_root for a in A_fam]
    Q_new = [root @ b @ root for b in B_fam]
    out = PsdFactorization(r, P_new, Q_new, fact.row_index)

    entries = out.entries()
    scale = max(1.0, m_sup)
    lower_ok = bool(np.all(entries >= dense - tol * scale))
    upper_ok = bool(np.all(entries <= dense + eta * m_sup + tol * scale))
    mean_resid = float(np.max(np.abs(sum(P_new) / len(P_new) - np.eye(r))))
    max_p = max(norms(p)[0] for p in P_new)
    p_bound_bal = 1.0 + gamma / (eta * m_sup)
    p_bound_thm = 2.0 * r ** 2 / eta
    max_q = max(float(np.linalg.eigvalsh(q)[-1]) for q in Q_new)
    q_bound = gamma + eta * m_sup
    passed = (lower_ok and upper_ok and mean_resid <= tol
              and max_p <= p_bound_bal + tol and max_q <= q_bound + tol * scale)
    return out, RescaleReport(passed, eta, m_sup, gamma, lower_ok, upper_ok,
                              mean_resid, max_p, p_bound_bal, p_bound_thm,
                              max_q, q_bound)


def factorization_from_subspace(u_basis: list[CubeFunction],
                                instances: list[tuple[CubeFunction, float]]
                                ) -> PsdFactorization:
    """Psd factorization of M(i,x) = c_i - f_i(x) from subspace certificates
    c_i - f_i = sum of squares from span(u_basis)."""
    if not u_basis or not instances:
        raise ValueError("need a basis and at least one instance")
    n = u_basis[0].n
    r = len(u_basis)
    P = []
    for f_i, c in instances:
        target = CubeFunction(n, c - f_i.values)
        gram = subspace_square_certify(target, u_basis)
        P.append(gram.mat.copy())
    evals = np.array([b.values for b in u_basis]).T  # (2^n, r)
    Q = [np.outer(evals[x], evals[x]) for x in range(1 << n)]
    return PsdFactorization(r, P, Q)


def subspace_from_factorization(fact: PsdFactorization, n: int
                                ) -> list[CubeFunction]:
    """Spanning independent subset of the entry functions of R(x) = Q(x)^{1/2}."""
    if fact.q != 1 << n:
        raise ValueError("column family must be indexed by {0,1}^n")
    roots = [matrix_sqrt(q).mat for q in fact.Q]
    r = fact.r
    cand = []
    for a in range(r):
        for b in range(a, r):
            cand.append(np.array([roots[x][a, b] for x in range(1 << n)]))
    basis: list[np.ndarray] = []
    ortho: list[np.ndarray] = []
    for vec in cand:
        resid = vec.copy()
        for u in ortho:
            resid = resid - np.dot(resid, u) * u
        nrm = float(np.linalg.norm(resid))
        if nrm > 1e-7 * max(1.0, float(np.linalg.norm(vec))):
            ortho.append(resid / nrm)
            basis.append(vec)
    return [CubeFunction(n, v) for v in basis]


@dataclass
class CorrSlack:
    pattern: PatternMatrix
    a0: float
    forms: list[np.ndarray]  # one n x n symmetric matrix per row


def corr_slack_submatrix(f: CubeFunction, n: int) -> CorrSlack:
    """Rows of the pattern matrix as correlation-polytope inequalities
    f(x_S) = <A_S, x x^T> + a0 evaluated at vertices."""
    if f.degree() > 2:
        raise ValueError("slack rows require a quadratic function")
    if float(np.min(f.values)) < -1e-10:
        raise ValueError("slack rows require a nonnegative function")
    m = f.n
    co = mobius_coefficients(f)
    a0 = float(co[0])
    pattern = PatternMatrix(f, n)
    forms = []
    for S in pattern.rows:
        A = np.zeros((n, n))
        for i in range(m):
            A[S[i] - 1, S[i] - 1] = co[1 << i]
        for i in range(m):
            for j in range(i + 1, m):
                half = co[(1 << i) | (1 << j)] / 2.0
                A[S[i] - 1, S[j] - 1] = half
                A[S[j] - 1, S[i] - 1] = half
        forms.append(A)
    return CorrSlack(pattern, a0, forms)


def split_low_high(B: MatrixValuedCubeFunction, S: tuple[int, ...], d: int
                   ) -> tuple[MatrixValuedCubeFunction, MatrixValuedCubeFunction]:
    """B = B_low + B_high by Fourier support: low means |alpha & S| <= d/2."""
    smask = 0
    for i in S:
        smask |= 1 << (i - 1)
    co = B.fourier
    low = np.zeros_like(co)
    high = np.zeros_like(co)
    for mask in range(co.shape[0]):
        if int(mask & smask).bit_count() <= d // 2:
            low[mask] = co[mask]
        else:
            high[mask] = co[mask]
    return (MatrixValuedCubeFunction.from_fourier(B.n, low),
            MatrixValuedCubeFunction.from_fourier(B.n, high))


def hypergeometric_tail(a: int, n: int, m: int, d: int) -> float:
    """Pr over uniform m-subsets S of [n] that |alpha & S| > d/2, |alpha| = a."""
    total = math.comb(n, m)
    acc = 0
    for j in range(d // 2 + 1, min(a, m) + 1):
        if m - j <= n - a:
            acc += math.comb(a, j) * math.comb(n - a, m - j)
    return acc / total


def high_mass_experiment(B: MatrixValuedCubeFunction, m: int, d: int,
                         ell: int | None = None) -> tuple[float, float]:
    """Measured E_{S,x} ||B_{S,high}||_F^2 / E_x ||B||_F^2 against the bound
    (ell m / (n - m))^{d/2}; exact via Parseval and hypergeometric weights."""
    n = B.n
    if ell is None:
        ell = B.degree()
    co = B.fourier
    mass = np.einsum('xij,xij->x', co, co)
    denom = float(np.sum(mass))
    if denom <= 0:
        return 0.0, (ell * m / (n - m)) ** (d / 2)
    num = 0.0
    for mask in range(co.shape[0]):
        a = int(mask).bit_count()
        if mass[mask] > 0:
            num += mass[mask] * hypergeometric_tail(a, n, m, d)
    ratio = num / denom
    bound = (ell * m / (n - m)) ** (d / 2)
    if ratio > bound + 1e-9:
        raise AssertionError(f"high-degree mass {ratio:.6g} exceeds bound {bound:.6g}")
    return ratio, bound


def correlation_lower_bound_experiment(a_for_row, B: MatrixValuedCubeFunction,
                                       D: PseudoDensity, d: int,
                                       ell: int | None = None
                                       ) -> tuple[float, float, float]:
    """Both sides of the degree-reduction correlation bound.

    lhs = E_{S,x} D(x_S) ||A_S B(x)||_F^2; rhs uses the Cauchy-Schwarz bound
    with tau = max_S ||A_S^2||, and the composed variant substitutes the
    hypergeometric estimate for the high-degree mass.
    """
    n, m = B.n, D.m
    if ell is None:
        ell = B.degree()
    rows = row_subsets(n, m)
    co = B.fourier
    mass = np.einsum('xij,xij->x', co, co)
    lhs_terms, ab_terms, high_terms = [], [], []
    tau = 0.0
    for S in rows:
        a = a_for_row(S)
        tau = max(tau, norms(a @ a)[0])
        prod = np.einsum('ij,xjk->xik', a, B.values)
        frob = np.einsum('xik,xik->x', prod, prod)
        dvals = lift_function(D.f, S, n).values
        lhs_terms.append(pairwise_sum(dvals * frob) / (1 << n))
        ab_terms.append(pairwise_sum(frob) / (1 << n))
        smask = sum(1 << (i - 1) for i in S)
        high_terms.append(sum(float(mass[mask]) for mask in range(1 << n)
                              if int(mask & smask).bit_count() > d // 2))
    lhs = pairwise_sum(lhs_terms) / len(rows)
    e_ab = pairwise_sum(ab_terms) / len(rows)
    e_high = pairwise_sum(high_terms) / len(rows)
    d_sup = D.sup_norm()
    rhs = -2.0 * math.sqrt(tau) * d_sup * math.sqrt(e_high) * math.sqrt(e_ab)
    e_b = float(np.sum(mass))
    rhs_composed = (-2.0 * d_sup * math.sqrt(tau)
                    * (ell * m / (n - m)) ** (d / 4)
                    * math.sqrt(e_b) * math.sqrt(e_ab))
    if lhs < rhs - 1e-9:
        raise AssertionError(f"correlation bound violated: {lhs:.6g} < {rhs:.6g}")
    if lhs < rhs_composed - 1e-9:
        raise AssertionError("composed degree-reduction bound violated")
    return lhs, rhs, rhs_composed


# ---------------------------------------------------------------------------
# Nonnegative factorizations from junta certificates.


@dataclass
class NonnegFactorization:
    r: int
    left: np.ndarray              # (rows, r), entrywise >= 0
    right: np.ndarray             # (r, 2^n), entrywise >= 0
    column_keys: list = field(default_factory=list)

    def entries(self) -> np.ndarray:
        return self.left @ self.right


def verify_nonneg_factorization(M, nf: NonnegFactorization, tol: float = 1e-10
                                ) -> FactReport:
    dense = _pattern_dense(M)
    resid = float(np.max(np.abs(dense - nf.entries())))
    min_entry = min(float(np.min(nf.left)) if nf.left.size else 0.0,
                    float(np.min(nf.right)) if nf.right.size else 0.0)
    ok = resid <= max(tol, 1e-10) and min_entry >= -1e-10
    return FactReport(ok, resid, min_entry)


JuntaCertificate = list[tuple[tuple[int, ...], CubeFunction]]


def junta_factorization(f: CubeFunction, certificate: JuntaCertificate,
                        n: int) -> NonnegFactorization:
    """Nonnegative factorization of the pattern matrix from a decomposition
    f = sum_i g_i into nonnegative juntas (support sets in [m]).

    Right functions are the constant 1 and lifted subcube indicators; left
    weights are the certificate values (constants peeled off to keep the
    column count small)."""
    m = f.n
    total = np.zeros(1 << m)
    for T, g in certificate:
        if len(T) != g.n:
            raise ValueError("junta support does not match arity")
        if float(np.min(g.values)) < -1e-10:
            raise ValueError("certificate junta has negative values")
        total += lift_function(g, T, m).values
    if float(np.max(np.abs(total - f.values))) > 1e-9 * max(1.0, f.sup_norm()):
        raise ValueError("certificate does not sum to f")

    rows = row_subsets(n, m)
    const_weight = sum(float(np.min(g.values)) for _, g in certificate)
    columns: dict = {}
    if const_weight > 0:
        columns[("const",)] = np.ones(1 << n)
    weights_per_row: list[dict] = []
    xs = np.arange(1 << n)
    for S in rows:
        wrow: dict = {}
        if const_weight > 0:
            wrow[("const",)] = const_weight
        for T, g in certificate:
            c0 = float(np.min(g.values))
            W = tuple(S[t - 1] for t in T)
            for b in range(1 << len(T)):
                h = float(g.values[b]) - c0
                if h <= 1e-14:
                    continue
                key = (W, b)
                if key not in columns:
                    sel = np.zeros(1 << n, dtype=np.int64)
                    for pos, i in enumerate(W):
                        sel |= ((xs >> (i - 1)) & 1) << pos
                    columns[key] = (sel == b).astype(float)
                wrow[key] = wrow.get(key, 0.0) + h
        weights_per_row.append(wrow)
    keys = list(columns)
    r = len(keys)
    left = np.zeros((len(rows), r))
    kpos = {k: i for i, k in enumerate(keys)}
    for i, wrow in enumerate(weights_per_row):
        for k, v in wrow.items():
            left[i, kpos[k]] = v
    right = np.array([columns[k] for k in keys]) if keys else np.zeros((0, 1 << n))
    return NonnegFactorization(r, left, right, keys)


def junta_cone_decompose(f: CubeFunction, d: int) -> JuntaCertificate | None:
    """Brute-force membership of f in the cone of nonnegative d-juntas on
    [m], via nonnegative least squares over all subcube indicators on <= d
    coordinates.  Returns a certificate grouped per support, or None."""
    m = f.n
    cols = []
    keys = []
    xs = np.arange(1 << m)
    for size in range(d + 1):
        for T in combinations(range(1, m + 1), size):
            sel = np.zeros(1 << m, dtype=np.int64)
            for pos, i in enumerate(T):
                sel |= ((xs >> (i - 1)) & 1) << pos
            for b in range(1 << size):
                cols.append((sel == b).astype(float))
                keys.append((T, b))
    A = np.array(cols).T
    coef, resid = nnls(A, f.values)
    if resid > 1e-9 * max(1.0, f.sup_norm()):
        return None
    by_support: dict[tuple[int, ...], np.ndarray] = {}
    for (T, b), c in zip(keys, coef):
        if c <= 1e-14:
            continue
        tab = by_support.setdefault(T, np.zeros(1 << len(T)))
        tab[b] += c
    return [(T, CubeFunction(len(T), tab)) for T, tab in sorted(by_support.items())]
