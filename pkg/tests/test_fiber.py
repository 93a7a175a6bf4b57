import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from grushin.fiber import (FiberGrid, discretize_fiber, fiber_heat_kernel_matrix,
                           scaling_identity_check, weighted_power_bound)
from grushin.oscillator import CapacityError

LAMBDA1 = 1.018792971647471


def test_lowest_ritz_value_unit_frequency():
    op = discretize_fiber(1.0, 1, FiberGrid(40.0, 0.02))
    assert op.eig()[0][0] == pytest.approx(LAMBDA1, abs=1e-3)


def test_lowest_ritz_value_scales():
    op = discretize_fiber(8.0, 1, FiberGrid(10.0, 0.005))
    assert op.eig()[0][0] == pytest.approx(8.0 ** (4 / 3) * LAMBDA1, rel=1e-3)


def test_two_dimensional_separability():
    op = discretize_fiber(1.0, 2, FiberGrid(8.0, 0.25))
    assert op.eig()[0][0] == pytest.approx(2 * LAMBDA1, rel=2e-2)


def test_capacity():
    with pytest.raises(CapacityError):
        discretize_fiber(1.0, 2, FiberGrid(20.0, 0.02))


def test_power_bound_trivial_order():
    assert weighted_power_bound(0.0, discretize_fiber(1.0)) == 1.0
    with pytest.raises(ValueError):
        weighted_power_bound(-1.0, discretize_fiber(1.0))


def test_power_bound_frequency_independent():
    vals = [weighted_power_bound(1.0, discretize_fiber(xi)) for xi in (0.25, 1.0, 4.0)]
    assert max(vals) / min(vals) - 1 <= 0.02
    assert all(np.isfinite(v) and v <= 10 for v in vals)


def test_scaling_identity_trivial_case():
    rep = scaling_identity_check(1.0, 1, 10)
    assert rep.value("max_discrepancy") < 1e-12


@pytest.mark.parametrize("k,bound", [(1, 0.01), (2, 0.03)])
def test_scaling_identity_discretisation(k, bound):
    rep = scaling_identity_check(8.0, k, 10)
    assert rep.value("max_discrepancy") <= bound


def test_heat_matrix_is_contractive():
    op = discretize_fiber(1.0, 1, FiberGrid(10.0, 0.05))
    K = fiber_heat_kernel_matrix(op, 0.5) * op.grid.step
    assert np.allclose(K, K.T)
    assert np.max(np.abs(np.linalg.eigvalsh(K))) <= np.exp(-0.5 * LAMBDA1) * (1 + 1e-3)


@settings(max_examples=15, deadline=None)
@given(st.floats(min_value=0.2, max_value=5.0))
def test_spectrum_positive(xi):
    op = discretize_fiber(xi, 1, FiberGrid(20.0, 0.05))
    assert op.eig()[0][0] > 0
