import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from grushin.oscillator import (CapacityError, EVEN, ODD, build_eigen_table, eigenfunction,
                                fd_oracle_table, gram_matrix, load_or_build, load_table,
                                save_table, verify_normalization, verify_spectral_facts)


def test_first_two_modes():
    t = build_eigen_table(2)
    assert t[0].lam == pytest.approx(1.018792971647471, abs=1e-8)
    assert t[0].parity == EVEN
    assert t[1].lam == pytest.approx(2.338107410459767, abs=1e-8)
    assert t[1].parity == ODD


def test_count_validation():
    with pytest.raises(ValueError):
        build_eigen_table(0)


def test_fd_oracle_small():
    t = build_eigen_table(10)
    plain = fd_oracle_table(2, 40, 1e-3)
    extrap = fd_oracle_table(2, 40, 1e-3, extrapolate=True)
    # the plain step-1e-3 oracle carries its own O(h^2) error of about 1.2e-7
    assert np.max(np.abs(plain.lam - t.lam[:2])) < 2e-7
    assert np.max(np.abs(extrap.lam - t.lam[:2])) < 1e-8
    assert abs(fd_oracle_table(10, 60, 1e-3, extrapolate=True).lam[9] - t.lam[9]) < 1e-6
    assert abs(fd_oracle_table(10, 60, 1e-3).lam[9] - t.lam[9]) < 2e-6


def test_fd_error_is_second_order():
    t = build_eigen_table(2)
    e1 = abs(fd_oracle_table(1, 40, 2e-3).lam[0] - t.lam[0])
    e2 = abs(fd_oracle_table(1, 40, 1e-3).lam[0] - t.lam[0])
    assert e1 / e2 == pytest.approx(4.0, rel=0.05)


def test_fd_oracle_extrapolated_fifty(table):
    oracle = fd_oracle_table(50, 60.0, 1e-3, extrapolate=True)
    assert np.max(np.abs(oracle.lam - table.lam[:50])) < 1e-6


def test_fd_capacity():
    with pytest.raises(CapacityError):
        fd_oracle_table(5, 1e4, 1e-4)


def test_gap_inequalities(table):
    rep = verify_spectral_facts(table.head(201))
    assert rep.passed
    assert len(rep.family("gap")) == 200


def test_growth_ratio(table):
    n = np.arange(1, 201)
    ratio = table.lam[:200] / (0.75 * math.pi * n) ** (2.0 / 3.0)
    assert np.all((ratio[19:] > 0.9) & (ratio[19:] < 1.1))
    assert 0.98 <= ratio[199] <= 1.02
    assert 1.0 < table.lam[0] < 1.02


def test_normalization(table):
    rep = verify_normalization(table, 50)
    assert rep.passed


def test_norm_against_quadrature(table):
    for k in (0, 1, 6, 7):
        e = table[k]
        val = 2 * integrate.quad(lambda u: eigenfunction(e, u) ** 2, 0, e.lam + 30,
                                 limit=400, epsabs=1e-13)[0]
        assert val == pytest.approx(1.0, abs=1e-7)


def test_eigenfunction_parity(table):
    assert eigenfunction(table[1], 0.0) == 0.0
    e = table[0]
    assert eigenfunction(e, 0.0) ** 2 == pytest.approx(1 / (2 * e.lam), abs=1e-9)


def test_decay_beyond_turning_point(table):
    e = table[0]
    u = 2 * e.lam + 1
    h = abs(eigenfunction(e, u))
    assert 0 < h < math.exp(-0.1 * u ** 1.5)


def test_weighted_gram_is_symmetric(table):
    g = gram_matrix(table, 20, weight_power=0.5)
    assert np.allclose(g, g.T, atol=1e-13)
    assert np.all(np.linalg.eigvalsh(g) > 0)


def test_cache_roundtrip_bit_identical(tmp_path):
    fresh, path = load_or_build(37, str(tmp_path))
    again, path2 = load_or_build(37, str(tmp_path))
    assert path == path2
    assert np.array_equal(fresh.lam, again.lam)
    assert np.array_equal(fresh.norm, again.norm)
    assert np.array_equal(fresh.odd, again.odd)
    p = tmp_path / "t.txt"
    save_table(fresh, p)
    assert np.array_equal(load_table(p).zeros, fresh.zeros)


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=1, max_value=399))
def test_gap_bound_property(table, n):
    lo, hi = table.lam[n - 1], table.lam[n]
    assert 0.5 * math.pi * hi ** -0.5 <= hi - lo <= 0.5 * math.pi * lo ** -0.5


@settings(max_examples=30, deadline=None)
@given(st.integers(min_value=0, max_value=60), st.floats(min_value=-80, max_value=80))
def test_parity_property(table, k, u):
    e = table[k]
    sign = -1.0 if e.parity == ODD else 1.0
    assert eigenfunction(e, -u) == pytest.approx(sign * eigenfunction(e, u), abs=1e-14)
