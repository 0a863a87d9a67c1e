"""Command-line surface: certificate emitters, factorization drivers,
descent traces, and CSP utilities with deterministic seeded runs.

Artifacts use one self-describing text format family: a single header line
``<kind> key=value ...`` followed by a dense payload, one number (or row)
per line.
"""

from __future__ import annotations

import argparse
import math
import sys

import numpy as np

from . import csp as csp_mod
from . import learn as learn_mod
from . import liftmat as lift_mod
from . import pseudo as pseudo_mod
from . import sos as sos_mod
from .cube import CubeFunction, ProductMeasure, lift_function
from .rng import SplitMix64
from .symmat import DensityMatrix


def fmt(x: float) -> str:
    return f"{x:.12g}"


class Reporter:
    def __init__(self, out_path: str | None = None):
        self.lines: list[str] = []
        self.failed = False
        self.out_path = out_path

    def emit(self, text: str) -> None:
        self.lines.append(text)
        print(text)

    def check(self, name: str, ok: bool, value: float) -> None:
        if not ok:
            self.failed = True
        self.emit(f"{'PASS' if ok else 'FAIL'} {name} value={fmt(value)}")

    def finish(self) -> int:
        if self.out_path:
            with open(self.out_path, "w") as fh:
                fh.write("\n".join(self.lines) + "\n")
        return 1 if self.failed else 0


def write_function(path: str, f: CubeFunction) -> None:
    with open(path, "w") as fh:
        fh.write(f"cubefn n={f.n}\n")
        for v in f.values:
            fh.write(f"{float(v)!r}\n")


def read_function(path: str) -> CubeFunction:
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "cubefn":
            raise ValueError("expected a 'cubefn n=<n>' header")
        n = int(dict(p.split("=") for p in header[1:])["n"])
        vals = [float(line) for line in fh if line.strip()]
    return CubeFunction(n, vals)


def write_factorization(path: str, fact: lift_mod.PsdFactorization) -> None:
    with open(path, "w") as fh:
        fh.write(f"psdfact r={fact.r} p={fact.p} q={fact.q}\n")
        for fam in (fact.P, fact.Q):
            for mat in fam:
                for row in mat:
                    fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def read_factorization(path: str) -> lift_mod.PsdFactorization:
    with open(path) as fh:
        header = fh.readline().split()
        if not header or header[0] != "psdfact":
            raise ValueError("expected a 'psdfact' header")
        kv = dict(p.split("=") for p in header[1:])
        r, p, q = int(kv["r"]), int(kv["p"]), int(kv["q"])
        rows = [np.array([float(t) for t in line.split()])
                for line in fh if line.strip()]
    mats = [np.array(rows[i * r:(i + 1) * r]) for i in range(p + q)]
    return lift_mod.PsdFactorization(r, mats[:p], mats[p:])


def _knapsack_pair(m: int) -> tuple[CubeFunction, pseudo_mod.PseudoDensity]:
    return pseudo_mod.knapsack_objective(m), pseudo_mod.grigoriev_knapsack(m)


# ---------------------------------------------------------------------------
# Subcommands.


def cmd_knapsack_cert(args, rep: Reporter) -> None:
    m = args.m
    if m % 2 == 0:
        raise SystemExit("usage error: m must be odd")
    f, D = _knapsack_pair(m)
    rep.emit(f"knapsack-certificate m={m}")
    rep.check("mean-one", abs(D.mean() - 1.0) <= 1e-12, D.mean())
    gap = CubeFunction.from_callable(m, lambda x: (sum(x) - m / 2.0) ** 2)
    v = float(np.mean(D.f.values * gap.values))
    rep.check("distance-square-zero", abs(v) <= 1e-9, v)
    sup = D.sup_norm()
    rep.check("sup-norm-bound", sup <= m ** 1.5, sup)
    mm = pseudo_mod.moment_matrix(D, m)
    lo = float(np.linalg.eigvalsh(mm.entries)[0])
    rep.check("moment-matrix-psd", lo >= -1e-8, lo)
    pairing = float(np.mean(D.f.values * f.values))
    expect = -1.0 / (4.0 * m * m)
    rep.check("objective-pairing", abs(pairing - expect) <= 1e-10, pairing)
    for size in range(4):
        S = tuple(range(1, size + 1))
        mom = pseudo_mod.subset_moment(D, S)
        want = _half_binom(m, size)
        rep.check(f"moment-{size}", abs(mom - want) <= 1e-10, mom)
    if args.out:
        write_function(args.out, D.f)


def _half_binom(m: int, size: int) -> float:
    """C(m/2, size) / C(m, size)."""
    num = 1.0
    for t in range(size):
        num *= (m / 2.0 - t)
    return num / math.factorial(size) / math.comb(m, size)


def cmd_lopsided_cert(args, rep: Reporter) -> None:
    m = args.m
    D = pseudo_mod.lopsided_pseudo_density(m)
    mu = D.measure
    rep.emit(f"lopsided-certificate m={m} claimed-degree={D.degree}")
    rep.check("mean-one", abs(D.mean() - 1.0) <= 1e-12, D.mean())
    f = CubeFunction.from_callable(m, lambda x: (1.0 - sum(x)) ** 2)
    v = mu.expectation(D.f * f)
    rep.check("objective-pairing-minus-one", abs(v + 1.0) <= 1e-10, v)
    sup = D.sup_norm()
    rep.check("sup-norm-at-most-27", sup <= 27.0 + 1e-9, sup)
    val = pseudo_mod.validate_local_pseudo_density(D, D.degree)
    for line in val.lines():
        rep.emit("  " + line)
    rep.check(f"locality-degree-{D.degree}", bool(val), float(bool(val)))
    if args.out:
        write_function(args.out, D.f)


def cmd_sosdeg(args, rep: Reporter) -> None:
    f = read_function(args.function)
    result = sos_mod.sos_degree(f, tol=args.tol)
    rep.emit(f"sos-degree {result.degree}")
    for d, wit in sorted(result.witnesses.items()):
        pairing = float(np.mean(wit.f.values * f.values))
        rep.check(f"witness-degree-{d}-negative-pairing", pairing < 0, pairing)
    rep.check("degree-found", result.degree >= 0, result.degree)


def cmd_sosbound(args, rep: Reporter) -> None:
    f = read_function(args.function)
    cert, dual = sos_mod.sos_upper_bound(f, args.degree)
    rep.emit(f"sos-bound degree={cert.d} value={fmt(cert.c)} "
             f"dual={fmt(dual.value)}")
    rep.check("duality-gap", abs(cert.c - dual.value) <= 1e-6,
              cert.c - dual.value)
    rep.check("dual-valid", bool(dual.validation),
              float(bool(dual.validation)))


def cmd_separate(args, rep: Reporter) -> None:
    m, n = args.m, args.n
    if args.function:
        f = read_function(args.function)
        D = pseudo_mod.grigoriev_knapsack(m)
    else:
        f, D = _knapsack_pair(m)
    M = lift_mod.PatternMatrix(f, n)
    res = lift_mod.ld_functional(D, M, seed=args.seed,
                                 sample_rows=args.sample_rows)
    rep.emit(f"separating-functional m={m} n={n} value={fmt(res.value)} "
             f"exact={res.exact} stderr={fmt(res.std_error)}")
    rng = SplitMix64(args.seed)
    order = D.degree // 2
    basis = sos_mod.monomial_basis(m, order)
    worst = 0.0
    trials = args.trials
    for _ in range(trials):
        sq = np.zeros(1 << m)
        for _ in range(2):
            g = sum(rng.normal() * b for b in basis)
            sq = sq + g.values ** 2
        val = float(np.mean(D.f.values * sq))
        worst = min(worst, val)
    rep.check(f"null-battery-{trials}-low-degree-squares", worst >= -1e-9,
              worst)


def cmd_factorize(args, rep: Reporter) -> None:
    m, n = args.m, args.n
    f, _ = _knapsack_pair(m)
    squares = sos_mod.square_decomposition(f, args.degree)
    fact = lift_mod.explicit_psd_factorization(f, squares, n)
    M = lift_mod.PatternMatrix(f, n)
    report = lift_mod.verify_psd_factorization(M, fact, tol=args.tol)
    rep.emit(f"factorization m={m} n={n} rank={fact.r} "
             f"rows={fact.p} cols={fact.q}")
    rep.check("entrywise-residual", report.max_residual <= args.tol,
              report.max_residual)
    rep.check("factors-psd", report.min_factor_eig >= -1e-8,
              report.min_factor_eig)
    if args.out:
        write_factorization(args.out, fact)


def cmd_verify_fact(args, rep: Reporter) -> None:
    fact = read_factorization(args.bundle)
    f, _ = _knapsack_pair(args.m)
    M = lift_mod.PatternMatrix(f, args.n)
    report = lift_mod.verify_psd_factorization(M, fact, tol=args.tol)
    rep.check("entrywise-residual", report.max_residual <= args.tol,
              report.max_residual)
    rep.check("factors-psd", report.min_factor_eig >= -1e-8,
              report.min_factor_eig)


def cmd_rescale(args, rep: Reporter) -> None:
    rng = SplitMix64(args.seed)
    r, p, q = args.rank, 6, 6
    P = []
    Q = []
    for _ in range(p):
        a = np.array([[rng.normal() for _ in range(r)] for _ in range(r)])
        P.append(a @ a.T)
    for _ in range(q):
        b = np.array([[rng.normal() for _ in range(r)] for _ in range(r)])
        Q.append(b @ b.T)
    fact = lift_mod.PsdFactorization(r, P, Q)
    dense = fact.entries()
    balanced, t = lift_mod.pre_balance(fact)
    out, report = lift_mod.rescale_factorization(dense, balanced, args.eta)
    rep.emit(f"rescale r={r} eta={args.eta} balance={fmt(t)} "
             f"gamma={fmt(report.gamma_balanced)}")
    rep.check("entries-lower", report.entry_lower_ok,
              float(report.entry_lower_ok))
    rep.check("entries-upper", report.entry_upper_ok,
              float(report.entry_upper_ok))
    rep.check("mean-identity", report.mean_identity_residual <= 1e-8,
              report.mean_identity_residual)
    rep.emit(f"  p-norm-bounds balanced={fmt(report.p_bound_balanced)} "
             f"worst-case={fmt(report.p_bound_theorem)}")
    rep.check("p-norm-bound", report.max_p_norm
              <= report.p_bound_balanced + 1e-8, report.max_p_norm)
    rep.check("q-eig-bound", report.max_q_eig <= report.q_bound + 1e-8,
              report.max_q_eig)


def cmd_learn_density(args, rep: Reporter) -> None:
    rng = SplitMix64(args.seed)
    dim = args.dim
    a = np.array([[rng.normal() for _ in range(2)] for _ in range(dim)])
    qm = a @ a.T
    Q = DensityMatrix(qm / np.trace(qm))
    tests = []
    for _ in range(args.tests):
        h = np.array([[rng.normal() for _ in range(dim)] for _ in range(dim)])
        h = 0.5 * (h + h.T)
        tests.append(h / max(1e-12, float(np.max(np.abs(np.linalg.eigvalsh(h))))))
    fam = learn_mod.TestFamily(tests)
    result = learn_mod.mirror_descent_approx(Q, fam, args.eps,
                                             DensityMatrix.uniform(dim))
    rep.emit(f"mirror-descent dim={dim} tests={len(fam)} eps={args.eps} "
             f"budget={result.budget}")
    for tr in result.trace:
        rep.emit("  " + tr.line())
    rep.check("steps-within-budget", len(result.selected) <= result.budget,
              len(result.selected))
    rep.check("final-gap", result.final_gap <= args.eps + 1e-9,
              result.final_gap)


def cmd_taylor(args, rep: Reporter) -> None:
    rng = SplitMix64(args.seed)
    dim = args.dim
    h = np.array([[rng.normal() for _ in range(dim)] for _ in range(dim)])
    h = 0.5 * (h + h.T)
    h *= args.norm / max(1e-12, float(np.max(np.abs(np.linalg.eigvalsh(h)))))
    ts = learn_mod.taylor_square_approx(h, args.eps)
    rep.emit(f"taylor dim={dim} norm={args.norm} eps={args.eps} "
             f"degree={ts.degree} formula-degree={ts.formula_degree}")
    rep.check("trace-error", ts.trace_error <= args.eps + 1e-9,
              ts.trace_error)


def cmd_junta(args, rep: Reporter) -> None:
    n = args.n
    mu = ProductMeasure.uniform(n)
    rng = SplitMix64(args.seed)
    tilt = 0.4 + 0.4 * rng.uniform()
    coord = 1 + rng.randint(n)
    f = lift_function(CubeFunction(1, np.array([1.0 - tilt, 1.0 + tilt])),
                      (coord,), n)
    tests = [learn_mod.JuntaTest(
        (i,), lift_function(CubeFunction(1, np.array([-1.0, 1.0])), (i,), n))
        for i in range(1, n + 1)]
    result = learn_mod.junta_approx(f, mu, tests, args.eps)
    rep.emit(f"junta n={n} eps={args.eps} steps={len(result.selected)} "
             f"budget={result.budget} support={list(result.support)}")
    for tr in result.trace:
        rep.emit("  " + tr.line())
    rep.check("final-gap", result.final_gap <= args.eps + 1e-9,
              result.final_gap)
    rep.check("mean-one", abs(mu.expectation(result.density) - 1.0) <= 1e-9,
              mu.expectation(result.density))


def _load_instance(path: str):
    with open(path) as fh:
        text = fh.read()
    first = text.lstrip().split(None, 1)[0] if text.strip() else ""
    if first == "csp":
        return csp_mod.instance_from_text(text)
    inst, _ = csp_mod.parse_dimacs_cnf(text)
    return inst


def cmd_csp_opt(args, rep: Reporter) -> None:
    inst = _load_instance(args.instance)
    opt = csp_mod.brute_opt(inst)
    rep.emit(f"csp-opt n={inst.n} constraints={len(inst.constraints)} "
             f"opt={fmt(opt)}")
    rep.check("opt-in-unit-interval", 0.0 <= opt <= 1.0, opt)


def cmd_csp_relax(args, rep: Reporter) -> None:
    inst = _load_instance(args.instance)
    value, dual = csp_mod.lasserre_value(inst, args.degree)
    opt = csp_mod.brute_opt(inst)
    rep.emit(f"csp-relax degree={args.degree} value={fmt(value)} "
             f"opt={fmt(opt)}")
    rep.check("relaxation-above-opt", value >= opt - 1e-6, value - opt)
    rep.check("dual-fourier-bound",
              csp_mod.dual_fourier_check(dual, args.degree),
              float(csp_mod.dual_fourier_check(dual, args.degree)))


def cmd_cs_check(args, rep: Reporter) -> None:
    instances = [_load_instance(p) for p in args.instances]
    report = csp_mod.cs_check(instances, args.c, args.s, args.degree)
    rep.emit(f"cs-check c={args.c} s={args.s} degree={args.degree} "
             f"checked={report.checked}")
    for idx, opt, val in report.violations:
        rep.emit(f"  violation instance={idx} opt={fmt(opt)} value={fmt(val)}")
    rep.check("no-violations", report.passed, len(report.violations))


def cmd_pattern_dump(args, rep: Reporter) -> None:
    if args.function:
        f = read_function(args.function)
    else:
        f, _ = _knapsack_pair(args.m)
    M = lift_mod.PatternMatrix(f, args.n)
    dense = M.dense()
    rep.emit(f"pattern m={f.n} n={args.n} rows={dense.shape[0]} "
             f"cols={dense.shape[1]}")
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(f"pattern m={f.n} n={args.n} rows={dense.shape[0]} "
                     f"cols={dense.shape[1]}\n")
            for row in dense:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
        rep.out_path = None  # the dump itself is the artifact


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    common.add_argument("--tol", type=float, default=argparse.SUPPRESS)
    common.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    common.add_argument("--sample-rows", type=int, default=argparse.SUPPRESS)
    common.add_argument("--out", type=str, default=argparse.SUPPRESS)

    ap = argparse.ArgumentParser(prog="cubecert", parents=[common],
                                 allow_abbrev=False)
    ap.set_defaults(tol=1e-8, seed=0, sample_rows=None, out=None)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name):
        return sub.add_parser(name, parents=[common], allow_abbrev=False)

    p = add("knapsack-cert")
    p.add_argument("m", type=int)
    p.set_defaults(func=cmd_knapsack_cert)

    p = add("lopsided-cert")
    p.add_argument("m", type=int)
    p.set_defaults(func=cmd_lopsided_cert)

    p = add("sosdeg")
    p.add_argument("function")
    p.set_defaults(func=cmd_sosdeg)

    p = add("sosbound")
    p.add_argument("function")
    p.add_argument("--degree", type=int, default=2)
    p.set_defaults(func=cmd_sosbound)

    p = add("separate")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--function", default=None)
    p.add_argument("--trials", type=int, default=50)
    p.set_defaults(func=cmd_separate)

    p = add("factorize")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=8)
    p.add_argument("--degree", type=int, default=4)
    p.set_defaults(func=cmd_factorize)

    p = add("verify-fact")
    p.add_argument("bundle")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=8)
    p.set_defaults(func=cmd_verify_fact)

    p = add("rescale")
    p.add_argument("--eta", type=float, default=0.5)
    p.add_argument("--rank", type=int, default=4)
    p.set_defaults(func=cmd_rescale)

    p = add("learn-density")
    p.add_argument("--dim", type=int, default=8)
    p.add_argument("--tests", type=int, default=10)
    p.add_argument("--eps", type=float, default=0.2)
    p.set_defaults(func=cmd_learn_density)

    p = add("taylor")
    p.add_argument("--dim", type=int, default=6)
    p.add_argument("--norm", type=float, default=2.0)
    p.add_argument("--eps", type=float, default=0.1)
    p.set_defaults(func=cmd_taylor)

    p = add("junta")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--eps", type=float, default=0.2)
    p.set_defaults(func=cmd_junta)

    p = add("csp-opt")
    p.add_argument("instance")
    p.set_defaults(func=cmd_csp_opt)

    p = add("csp-relax")
    p.add_argument("instance")
    p.add_argument("--degree", type=int, default=2)
    p.set_defaults(func=cmd_csp_relax)

    p = add("cs-check")
    p.add_argument("instances", nargs="+")
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--s", type=float, required=True)
    p.add_argument("--degree", type=int, default=2)
    p.set_defaults(func=cmd_cs_check)

    p = add("pattern-dump")
    p.add_argument("--m", type=int, default=3)
    p.add_argument("--n", type=int, default=6)
    p.add_argument("--function", default=None)
    p.set_defaults(func=cmd_pattern_dump)

    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    rep = Reporter(args.out if args.command not in ("knapsack-cert",
                                                    "lopsided-cert",
                                                    "factorize",
                                                    "pattern-dump") else None)
    args.func(args, rep)
    return rep.finish()


if __name__ == "__main__":
    sys.exit(main())
