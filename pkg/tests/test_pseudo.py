import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cubecert.cube import CubeFunction, ProductMeasure
from cubecert.pseudo import (PseudoDensity, fourier_coefficient_bound_check,
                             grigoriev_knapsack, index_family,
                             knapsack_objective, lopsided_pseudo_density,
                             moment_matrix, subset_moment,
                             validate_local_pseudo_density,
                             validate_sos_pseudo_density)


def test_index_family_order():
    fam = index_family(3, 2)
    assert fam == [(), (1,), (2,), (3,), (1, 2), (1, 3), (2, 3)]


def test_moment_matrix_uniform_oracle():
    # hand-computed entries for D = 1, m = 2, order 1:
    # E x_i = 1/2, E x_i x_j = 1/4, E x_i^2 = E x_i = 1/2
    D = PseudoDensity(CubeFunction(2, np.ones(4)), degree=2)
    Y = moment_matrix(D, 2)
    expect = np.array([[1.0, 0.5, 0.5],
                       [0.5, 0.5, 0.25],
                       [0.5, 0.25, 0.5]])
    assert np.allclose(Y.entries, expect, atol=1e-14)


def test_subset_moment_multilinearity():
    D = PseudoDensity(CubeFunction(3, np.ones(8)), degree=2)
    assert subset_moment(D, (1, 1)) == pytest.approx(subset_moment(D, (1,)))


def test_validate_true_density():
    rng = np.random.default_rng(0)
    vals = rng.uniform(0.1, 2.0, size=16)
    vals /= vals.mean()
    D = PseudoDensity(CubeFunction(4, vals), degree=4)
    rep = validate_sos_pseudo_density(D, 4)
    assert rep
    assert any("moment-matrix-psd" in name for name, _, _ in rep.checks)


def test_validate_rejects_non_pseudo_density():
    # mean one but pairs negatively with the square (3 - 2 x_1)^2
    vals = np.array([-1.0, 3.0, -1.0, 3.0])
    D = PseudoDensity(CubeFunction(2, vals), degree=2)
    sq = CubeFunction.from_callable(2, lambda x: (3.0 - 2.0 * x[0]) ** 2)
    assert float(np.mean(D.f.values * sq.values)) < 0
    assert not validate_sos_pseudo_density(D, 2)


@pytest.mark.parametrize("m", [3, 5, 7, 9, 11, 13, 15])
def test_knapsack_identities(m):
    D = grigoriev_knapsack(m)
    assert abs(D.mean() - 1.0) <= 1e-12
    dist = CubeFunction.from_callable(m, lambda x: (sum(x) - m / 2.0) ** 2)
    assert abs(float(np.mean(D.f.values * dist.values))) <= 1e-9


@pytest.mark.parametrize("m", [3, 5, 7])
def test_knapsack_moments(m):
    D = grigoriev_knapsack(m)
    for size in range(4):
        S = tuple(range(1, size + 1))
        want = 1.0
        for t in range(size):
            want *= (m / 2.0 - t) / (m - t)
        assert subset_moment(D, S) == pytest.approx(want, abs=1e-12)


def test_knapsack_m3_exact_weights():
    D = grigoriev_knapsack(3)
    by_weight = {bin(x).count("1"): D.f.values[x] for x in range(8)}
    assert by_weight[0] == pytest.approx(-0.5)
    assert by_weight[1] == pytest.approx(1.5)
    assert by_weight[2] == pytest.approx(1.5)
    assert by_weight[3] == pytest.approx(-0.5)


def test_knapsack_objective_pairing():
    for m in (3, 5):
        D = grigoriev_knapsack(m)
        f = knapsack_objective(m)
        assert float(np.min(f.values)) >= 0.0
        assert float(np.mean(D.f.values * f.values)) == pytest.approx(
            -1.0 / (4 * m * m), abs=1e-12)


def test_knapsack_rejects_even_m():
    with pytest.raises(ValueError):
        grigoriev_knapsack(4)
    with pytest.raises(ValueError):
        grigoriev_knapsack(17)


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7, 8])
def test_lopsided_identities(m):
    D = lopsided_pseudo_density(m)
    mu = D.measure
    assert abs(mu.expectation(D.f) - 1.0) <= 1e-12
    f = CubeFunction.from_callable(m, lambda x: (1.0 - sum(x)) ** 2)
    assert mu.expectation(D.f * f) == pytest.approx(-1.0, abs=1e-10)
    assert D.sup_norm() <= 27.0 + 1e-9
    # support on Hamming weight <= 1
    for x in range(1 << m):
        if bin(x).count("1") > 1:
            assert D.f.values[x] == 0.0


@pytest.mark.parametrize("m", [3, 4, 5, 6, 7, 8])
def test_lopsided_locality_boundary(m):
    D = lopsided_pseudo_density(m)
    # the all-zero subcube on S pairs to 1 - 2|S|/m: nonnegative exactly up
    # to |S| = floor(m/2), negative beyond
    assert validate_local_pseudo_density(D, m // 2)
    if m // 2 + 1 <= m:
        rep = validate_local_pseudo_density(D, m // 2 + 1)
        if 1.0 - 2.0 * (m // 2 + 1) / m < -1e-10:
            assert not rep


def test_lopsided_zero_subcube_values():
    m = 5
    D = lopsided_pseudo_density(m)
    mu = D.measure
    for size in range(m + 1):
        sel = np.arange(1 << m) & ((1 << size) - 1)
        mask = sel == 0
        val = float(np.dot(mu.weights[mask], D.f.values[mask]))
        assert val == pytest.approx(1.0 - 2.0 * size / m, abs=1e-12)


def test_fourier_coefficient_bound():
    D = grigoriev_knapsack(3)
    assert fourier_coefficient_bound_check(D, 3)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32))
def test_true_densities_are_local(seed):
    rng = np.random.default_rng(seed)
    m = 4
    mu = ProductMeasure([0.3] * m)
    vals = rng.uniform(0.05, 2.0, size=1 << m)
    vals /= float(np.dot(mu.weights, vals))
    D = PseudoDensity(CubeFunction(m, vals), degree=m, kind="local-pseudo-density",
                      measure=mu)
    assert validate_local_pseudo_density(D, m)
