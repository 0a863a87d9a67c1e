"""Max-CSP front end: instances as fraction-of-satisfied-constraints
objectives, brute-force optima, degree-d relaxation values via the sos
module, (c,s)-approximation checks, and instance-vs-assignment matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .cube import CubeFunction
from .pseudo import PseudoDensity, fourier_coefficient_bound_check
from .sos import SosDualSolution, sos_upper_bound

MAX_BRUTE_N = 24


@dataclass
class Constraint:
    predicate: str                 # e.g. "cut", "or"
    variables: tuple[int, ...]     # 1-based, distinct
    signs: tuple[int, ...] = ()    # 1 = positive literal, 0 = negated

    def __post_init__(self):
        if len(set(self.variables)) != len(self.variables):
            raise ValueError("constraint variables must be distinct")
        if self.signs and len(self.signs) != len(self.variables):
            raise ValueError("sign pattern length mismatch")


@dataclass
class CspInstance:
    n: int
    arity: int
    constraints: list[Constraint]

    def __post_init__(self):
        if not self.constraints:
            raise ValueError("instance must contain at least one constraint")
        for c in self.constraints:
            if len(c.variables) > self.arity:
                raise ValueError("constraint arity exceeds declared arity")
            for v in c.variables:
                if not 1 <= v <= self.n:
                    raise ValueError(f"variable {v} out of range")

    def value_function(self) -> CubeFunction:
        """Im(x) = satisfied fraction, values in [0, 1]."""
        acc = np.zeros(1 << self.n)
        xs = np.arange(1 << self.n)
        for c in self.constraints:
            acc += _predicate_values(c, xs)
        vals = acc / len(self.constraints)
        if vals.min() < -1e-12 or vals.max() > 1 + 1e-12:
            raise ValueError("instance value left [0,1]")
        return CubeFunction(self.n, np.clip(vals, 0.0, 1.0))


def _predicate_values(c: Constraint, xs: np.ndarray) -> np.ndarray:
    bits = [((xs >> (v - 1)) & 1) for v in c.variables]
    if c.signs:
        bits = [b if s == 1 else 1 - b for b, s in zip(bits, c.signs)]
    if c.predicate == "cut":
        if len(bits) != 2:
            raise ValueError("cut predicate takes two variables")
        return (bits[0] ^ bits[1]).astype(float)
    if c.predicate == "or":
        acc = np.zeros_like(xs)
        for b in bits:
            acc = acc | b
        return acc.astype(float)
    raise ValueError(f"unknown predicate {c.predicate!r}")


def maxcut_function(edges: list[tuple[int, int]], n: int | None = None,
                    normalized: bool = False) -> CubeFunction:
    """f_G(x) = sum over edges of (x_i - x_j)^2, counting cut edges."""
    if not edges:
        raise ValueError("empty edge list")
    seen = set()
    for i, j in edges:
        if i == j:
            raise ValueError(f"self-loop at {i}")
        key = (min(i, j), max(i, j))
        if key in seen:
            raise ValueError(f"repeated edge {key}")
        seen.add(key)
    if n is None:
        n = max(max(i, j) for i, j in edges)
    if n > 20:
        raise ValueError("n <= 20 required")
    xs = np.arange(1 << n)
    acc = np.zeros(1 << n)
    for i, j in edges:
        acc += (((xs >> (i - 1)) & 1) ^ ((xs >> (j - 1)) & 1)).astype(float)
    if normalized:
        acc /= len(edges)
    return CubeFunction(n, acc)


def maxcut_instance(edges: list[tuple[int, int]], n: int | None = None
                    ) -> CspInstance:
    if n is None:
        n = max(max(i, j) for i, j in edges)
    cons = [Constraint("cut", (i, j)) for i, j in edges]
    return CspInstance(n, 2, cons)


def max3sat_instance(clauses: list[tuple[tuple[int, int, int],
                                         tuple[int, int, int]]],
                     n: int | None = None) -> tuple[CspInstance, CubeFunction]:
    """Clauses as (variables, signs) with 1 = positive literal."""
    if not clauses:
        raise ValueError("empty instance")
    if n is None:
        n = max(max(vs) for vs, _ in clauses)
    cons = [Constraint("or", tuple(vs), tuple(sg)) for vs, sg in clauses]
    inst = CspInstance(n, 3, cons)
    return inst, inst.value_function()


def brute_opt(im: CspInstance | CubeFunction) -> float:
    f = im.value_function() if isinstance(im, CspInstance) else im
    if f.n > MAX_BRUTE_N:
        raise ValueError(f"brute force limited to n <= {MAX_BRUTE_N}")
    return float(np.max(f.values))


def lasserre_value(im: CspInstance | CubeFunction, d: int
                   ) -> tuple[float, SosDualSolution]:
    """Degree-d relaxation value max <D, Im> over pseudo-densities."""
    f = im.value_function() if isinstance(im, CspInstance) else im
    if 2 * (max(d, 2) // 2) < f.degree():
        raise ValueError(f"relaxation degree {d} below objective degree "
                         f"{f.degree()}; the relaxation is unbounded")
    cert, dual = sos_upper_bound(f, d)
    return cert.c, dual


def cycle_sdp_value(n_cycle: int) -> float:
    """Independent spectral value of the basic SDP for max-cut on C_n,
    as a fraction of edges: cut(Y) = |E|/2 - (n/4) lambda_min(A) with
    lambda_min(A) = 2 cos(pi - pi * (n - n % 2) / n)... computed directly
    from the adjacency spectrum 2 cos(2 pi k / n)."""
    lam_min = min(2.0 * math.cos(2.0 * math.pi * k / n_cycle)
                  for k in range(n_cycle))
    edges = n_cycle
    value = edges / 2.0 - (n_cycle / 4.0) * lam_min
    return value / edges


@dataclass
class CsReport:
    passed: bool
    c: float
    s: float
    checked: int
    violations: list[tuple[int, float, float]]  # (index, opt, relax value)

    def __bool__(self):
        return self.passed


def cs_check(instances: list[CspInstance | CubeFunction], c: float, s: float,
             d: int, tol: float = 1e-9) -> CsReport:
    """For every instance with opt <= s, test relaxation value <= c."""
    violations = []
    checked = 0
    for idx, im in enumerate(instances):
        opt = brute_opt(im)
        if opt > s + tol:
            continue
        checked += 1
        val, _ = lasserre_value(im, d)
        if val > c + tol:
            violations.append((idx, opt, val))
    return CsReport(not violations, c, s, checked, violations)


@dataclass
class InstanceMatrix:
    c: float
    s: float
    n: int
    entries: np.ndarray
    nonnegative: bool

    @property
    def shape(self):
        return self.entries.shape


def build_instance_matrix(instances: list[CspInstance | CubeFunction],
                          c: float, s: float, n: int) -> InstanceMatrix:
    """Rows c - Im(x) over instances with opt <= s; flags negative entries
    (factorization routines require nonnegativity)."""
    rows = []
    for im in instances:
        f = im.value_function() if isinstance(im, CspInstance) else im
        if f.n != n:
            raise ValueError("instance arity mismatch")
        if brute_opt(f) > s + 1e-12:
            raise ValueError("instance violates the opt <= s filter")
        rows.append(c - f.values)
    entries = np.array(rows)
    return InstanceMatrix(c, s, n, entries,
                          bool(np.all(entries >= -1e-12)))


def linearization_split(S: tuple[int, ...], k: int
                        ) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """S = A_S u B_S with A_S the (up to) ceil(k/2) smallest elements."""
    ordered = tuple(sorted(S))
    cut = min(len(ordered), (k + 1) // 2)
    return ordered[:cut], ordered[cut:]


def rank_one_moment_assignment(x: tuple[int, ...], family: list[tuple[int, ...]]
                               ) -> np.ndarray:
    """Y(A,B) = prod_{i in A u B} x_i, the lifted point assignment."""
    r = len(family)
    vec = np.array([float(np.prod([x[i - 1] for i in A])) if A else 1.0
                    for A in family])
    return np.outer(vec, vec)


def dual_fourier_check(dual: SosDualSolution, d: int) -> bool:
    """All low-degree Fourier coefficients of the dual pseudo-density lie
    in [-1, 1]."""
    rep = fourier_coefficient_bound_check(dual.density, d)
    return bool(rep)


def parse_dimacs_cnf(text: str) -> tuple[CspInstance, CubeFunction]:
    """3-CNF in DIMACS format to a max-3-sat instance."""
    clauses = []
    n = 0
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith(("c", "%")):
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] != "cnf":
                raise ValueError(f"bad problem line: {line!r}")
            n = int(parts[2])
            continue
        lits = [int(t) for t in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        if not lits:
            continue
        if len(lits) != 3:
            raise ValueError("only 3-literal clauses supported")
        vs = tuple(abs(l) for l in lits)
        sg = tuple(1 if l > 0 else 0 for l in lits)
        clauses.append((vs, sg))
    if not clauses:
        raise ValueError("no clauses found")
    return max3sat_instance(clauses, n or None)


def instance_to_text(inst: CspInstance) -> str:
    lines = [f"csp n={inst.n} k={inst.arity} m={len(inst.constraints)}"]
    for c in inst.constraints:
        signs = "".join(str(s) for s in c.signs) if c.signs else "-"
        vars_ = ",".join(str(v) for v in c.variables)
        lines.append(f"{c.predicate} {vars_} {signs}")
    return "\n".join(lines) + "\n"


def instance_from_text(text: str) -> CspInstance:
    lines = [l for l in text.splitlines() if l.strip()]
    head = lines[0].split()
    if head[0] != "csp":
        raise ValueError("missing csp header")
    kv = dict(p.split("=") for p in head[1:])
    cons = []
    for line in lines[1:]:
        pred, vars_, signs = line.split()
        variables = tuple(int(v) for v in vars_.split(","))
        sg = () if signs == "-" else tuple(int(ch) for ch in signs)
        cons.append(Constraint(pred, variables, sg))
    return CspInstance(int(kv["n"]), int(kv["k"]), cons)
