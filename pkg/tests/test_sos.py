import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubecert.cube import CubeFunction
from cubecert.pseudo import grigoriev_knapsack, knapsack_objective
from cubecert.sos import (CertificateError, extract_squares, monomial_basis,
                          polish_squares, projection_feasibility,
                          projection_sos_degree, sos_degree, sos_feasibility,
                          sos_upper_bound, square_decomposition,
                          subspace_sos_upper_bound, subspace_square_certify,
                          verify_certificate)


def _rand_nonneg(rng, n, deg_half=None):
    """Random nonnegative function as a sum of two random squares."""
    basis = monomial_basis(n, deg_half if deg_half is not None else n)
    acc = np.zeros(1 << n)
    for _ in range(2):
        g = sum(rng.normal() * b.values for b in basis)
        acc += g ** 2
    return CubeFunction(n, acc)


def test_monomial_basis_size():
    assert len(monomial_basis(4, 2)) == 1 + 4 + 6


def test_upper_bound_constant():
    f = CubeFunction(2, np.full(4, 0.7))
    cert, dual = sos_upper_bound(f, 2)
    assert cert.c == pytest.approx(0.7, abs=1e-7)
    assert dual.value == pytest.approx(0.7, abs=1e-6)


def test_upper_bound_full_degree_equals_max():
    rng = np.random.default_rng(5)
    f = CubeFunction(3, rng.uniform(0, 1, size=8))
    cert, dual = sos_upper_bound(f, 2 * 3)
    assert cert.c == pytest.approx(float(np.max(f.values)), abs=1e-6)
    assert abs(cert.c - dual.value) <= 1e-6


def test_upper_bound_knapsack_degree2():
    f = knapsack_objective(3)
    cert, dual = sos_upper_bound(f, 2)
    # degree-2 bound cannot go below the max since degree-2 duals include
    # point masses only through the relaxation; value equals max f here
    assert cert.c == pytest.approx(float(np.max(f.values)), abs=1e-6)
    assert dual.validation


def test_feasibility_detects_square():
    g = CubeFunction.from_callable(2, lambda x: 1.0 - x[0] - x[1])
    feas, resid, _ = sos_feasibility(g * g, 2)
    assert feas and resid <= 1e-6


def test_feasibility_rejects_knapsack_at_2():
    feas, resid, _ = sos_feasibility(knapsack_objective(3), 2)
    assert not feas and resid > 1e-4


def test_sos_degree_trivial_cases():
    lin_sq = CubeFunction.from_callable(3, lambda x: (1.0 - x[0]) ** 2)
    assert sos_degree(lin_sq).degree == 2
    assert sos_degree(CubeFunction(2, np.zeros(4))).degree == 0
    with pytest.raises(ValueError):
        sos_degree(CubeFunction(2, np.array([1.0, -1.0, 1.0, 1.0])))


def test_sos_degree_knapsack_is_four():
    result = sos_degree(knapsack_objective(3))
    assert result.degree == 4
    # witness validates and pairs negatively
    wit = result.witnesses[2]
    f = knapsack_objective(3)
    assert float(np.mean(wit.f.values * f.values)) < 0


def test_witness_refutes_infeasible_degree():
    f = knapsack_objective(3)
    D = grigoriev_knapsack(3)
    # the Grigoriev density itself is the canonical degree-2 refutation
    assert float(np.mean(D.f.values * f.values)) < 0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2 ** 32), st.integers(2, 3))
def test_degree_engines_agree(seed, n):
    rng = np.random.default_rng(seed)
    f = _rand_nonneg(rng, n, deg_half=1)
    d1 = sos_degree(f).degree
    d2 = projection_sos_degree(f)
    assert d1 == d2


def test_projection_feasibility_on_knapsack():
    f = knapsack_objective(3)
    feas2, _ = projection_feasibility(f, 2)
    feas4, _ = projection_feasibility(f, 4)
    assert not feas2 and feas4


def test_square_decomposition_round_trip():
    f = knapsack_objective(3)
    squares = square_decomposition(f, 4)
    total = sum(g.values ** 2 for g in squares)
    assert np.max(np.abs(total - f.values)) <= 1e-9
    assert all(g.degree() <= 2 for g in squares)


def test_extract_and_polish():
    rng = np.random.default_rng(7)
    basis = monomial_basis(3, 1)
    coeffs = rng.normal(size=(len(basis), 2))
    gram = coeffs @ coeffs.T
    target = CubeFunction(3, sum(
        (sum(coeffs[i, t] * basis[i].values for i in range(len(basis)))) ** 2
        for t in range(2)))
    squares = extract_squares(gram, basis)
    total = sum(g.values ** 2 for g in squares)
    assert np.allclose(total, target.values, atol=1e-9)
    polished = polish_squares(target, squares, basis)
    total2 = sum(g.values ** 2 for g in polished)
    assert np.max(np.abs(total2 - target.values)) <= 1e-10


def test_verify_certificate():
    f = knapsack_objective(3)
    cert, _ = sos_upper_bound(f, 4)
    rep = verify_certificate(f, cert)
    assert rep.passed
    assert rep.pointwise_residual <= 1e-6


def test_subspace_certify_and_bound():
    n = 3
    u = monomial_basis(n, 1)
    lin = CubeFunction.from_callable(n, lambda x: 1.0 - x[0] - x[1])
    target = lin * lin
    gram = subspace_square_certify(target, u)
    assert np.linalg.eigvalsh(gram.mat)[0] >= -1e-8
    cert = subspace_sos_upper_bound(target, u)
    assert cert.c <= float(np.max(target.values)) + 1e-6


def test_subspace_refuses_dependent_basis():
    n = 2
    b = monomial_basis(n, 1)
    with pytest.raises(ValueError):
        subspace_sos_upper_bound(CubeFunction(n, np.ones(4)), b + [b[0]])


def test_square_decomposition_infeasible_raises():
    with pytest.raises(CertificateError):
        square_decomposition(knapsack_objective(3), 2)


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2 ** 32))
def test_dual_never_exceeds_primal(seed):
    rng = np.random.default_rng(seed)
    f = CubeFunction(3, rng.uniform(0.0, 1.0, size=8))
    cert, dual = sos_upper_bound(f, 4)
    assert dual.value <= cert.c + 1e-6
    assert cert.c >= float(np.max(f.values)) - 1e-6
