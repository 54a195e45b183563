import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gqmet.core import (
    OMEGA,
    GaussianState,
    bures_distance,
    entropy_from_nu,
    fidelity,
    log_fidelity,
    make_thermal,
    make_vacuum,
    purity,
    symplectic_eigenvalue,
    thermal_entropy,
    thermal_occupation,
    validate_cov,
    von_neumann_entropy,
)
from gqmet.errors import DomainError, MalformedInputError, UnphysicalStateError

from conftest import physical_states


def test_symplectic_form():
    assert np.array_equal(OMEGA.T, -OMEGA)
    assert np.array_equal(OMEGA @ OMEGA, -np.eye(2))


def test_thermal_occupation_examples():
    nbar = thermal_occupation(1.0, 1.0)
    assert nbar == pytest.approx(1 / (math.e - 1), rel=1e-15)
    assert nbar == pytest.approx(0.581977, abs=5e-7)
    assert 2 * nbar + 1 == pytest.approx(1 / math.tanh(0.5), rel=1e-14)
    assert 2 * nbar + 1 == pytest.approx(2.163953, abs=5e-7)
    assert 0 <= thermal_occupation(100.0, 1.0) < 4e-44


@pytest.mark.parametrize("beta,omega", [(0, 1), (1, 0), (-1, 1), (np.inf, 1), (np.nan, 1)])
def test_thermal_occupation_rejects(beta, omega):
    with pytest.raises(DomainError):
        thermal_occupation(beta, omega)


@pytest.mark.parametrize("nbar,diag", [(0, 1.0), (0.5, 2.0), (0.581977, 2.163954)])
def test_make_thermal(nbar, diag):
    s = make_thermal(nbar)
    assert np.array_equal(s.mean, np.zeros(2))
    np.testing.assert_allclose(s.cov, diag * np.eye(2), atol=1e-12)


def test_make_thermal_rejects_negative():
    with pytest.raises(DomainError):
        make_thermal(-0.1)


@pytest.mark.parametrize(
    "cov,physical,margin",
    [(np.diag([2.0, 2.0]), True, 3.0), (np.diag([0.5, 0.5]), False, -0.75), (np.diag([4.0, 0.25]), True, 0.0)],
)
def test_validate_cov(cov, physical, margin):
    v = validate_cov(cov)
    assert v.physical is physical
    assert v.margin == pytest.approx(margin, abs=1e-14)


def test_validate_cov_rejects_nonfinite():
    with pytest.raises(MalformedInputError):
        validate_cov(np.array([[np.nan, 0], [0, 1]]))


def test_state_is_immutable_and_checked():
    s = make_vacuum()
    with pytest.raises(ValueError):
        s.cov[0, 0] = 3.0
    with pytest.raises(MalformedInputError):
        GaussianState(np.zeros(3), np.eye(2))
    with pytest.raises(MalformedInputError):
        GaussianState(np.zeros(2), np.array([[1.0, 0.5], [0.0, 1.0]]))


@pytest.mark.parametrize(
    "cov,nu",
    [(np.diag([2.0, 2.0]), 2.0), (np.diag([3.381177, 1.502745]), 2.254118), (np.eye(2), 1.0)],
)
def test_symplectic_eigenvalue(cov, nu):
    assert symplectic_eigenvalue(cov) == pytest.approx(nu, abs=1e-6)


def test_symplectic_eigenvalue_unphysical():
    with pytest.raises(UnphysicalStateError):
        symplectic_eigenvalue(np.diag([0.5, 0.5]))


def test_purity_examples():
    assert purity(make_vacuum()) == 1.0
    assert purity(make_thermal(0.5)) == pytest.approx(0.5, rel=1e-15)
    nbar = thermal_occupation(1, 1)
    cov = np.diag([(2 * nbar + 1) / 0.8**2, (2 * nbar + 1) / 1.2**2])
    assert purity(cov) == pytest.approx(0.96 / (2 * nbar + 1), rel=1e-14)
    assert purity(cov) == pytest.approx(0.443633, abs=1e-6)


def test_entropy_examples():
    assert von_neumann_entropy(make_vacuum()) == 0.0
    assert von_neumann_entropy(make_thermal(1.0)) == pytest.approx(2 * math.log(2), rel=1e-14)
    assert entropy_from_nu(1.0 + 1e-13) == 0.0
    # closed-form probe covariance at nbar = 1/(e-1), sigma_q = 1.2, sigma_p = 0.8
    assert von_neumann_entropy(np.diag([3.381177, 1.502745])) == pytest.approx(1.0846678, abs=1e-6)


@given(st.floats(1e-6, 50.0))
def test_entropy_consistency(nbar):
    assert entropy_from_nu(2 * nbar + 1) == pytest.approx(thermal_entropy(nbar), rel=1e-12, abs=1e-12)


@given(physical_states())
def test_swap_invariance(s):
    assert symplectic_eigenvalue(s) == pytest.approx(symplectic_eigenvalue(s.swapped()), rel=1e-13)


@given(physical_states())
def test_purity_in_unit_interval(s):
    p = purity(s)
    assert 0 < p <= 1
    assert p == pytest.approx(np.linalg.det(s.cov) ** -0.5, rel=1e-12)


def test_fidelity_examples():
    assert fidelity(make_thermal(0.5), make_thermal(0.5)) == pytest.approx(1.0, abs=1e-15)
    assert fidelity(make_vacuum(), make_thermal(1.0)) == pytest.approx(0.5, rel=1e-14)
    displaced = GaussianState(np.array([1.0, 0.0]), np.eye(2))
    assert fidelity(displaced, make_vacuum()) == pytest.approx(math.exp(-0.25), rel=1e-14)


def test_bures_examples():
    assert bures_distance(make_thermal(0.3), make_thermal(0.3)) == 0.0
    assert bures_distance(make_vacuum(), make_thermal(1.0)) == pytest.approx(0.765367, abs=5e-7)
    displaced = GaussianState(np.array([1.0, 0.0]), np.eye(2))
    expected = math.sqrt(2) * math.sqrt(1 - math.exp(-1 / 8))
    assert bures_distance(make_vacuum(), displaced) == pytest.approx(expected, rel=1e-13)
    assert expected == pytest.approx(0.4847744, abs=1e-7)


@given(physical_states(), physical_states())
def test_fidelity_symmetry(a, b):
    assert abs(fidelity(a, b) - fidelity(b, a)) < 1e-12
    assert abs(bures_distance(a, b) - bures_distance(b, a)) < 1e-12
    assert 0 <= fidelity(a, b) <= 1 + 1e-12


@given(physical_states())
def test_fidelity_self_identity(a):
    assert abs(fidelity(a, a) - 1) < 1e-12
    assert log_fidelity(a, a) == pytest.approx(0.0, abs=1e-12)
    assert bures_distance(a, a) < 1e-6


@given(st.floats(1e-3, 10.0))
def test_fidelity_vacuum_thermal(nbar):
    assert fidelity(make_vacuum(), make_thermal(nbar)) == pytest.approx(1 / (nbar + 1), rel=1e-10)


def test_fidelity_close_states_no_cancellation():
    a = make_thermal(2.0)
    b = make_thermal(2.0 + 1e-7)
    # d_B^2 ~ QFI dnbar^2 / 4 with QFI = 1 / (nbar (nbar + 1)) for thermal states
    expected = 1e-14 / 6 / 4
    assert bures_distance(a, b) ** 2 == pytest.approx(expected, rel=1e-6)
    assert -log_fidelity(a, b) == pytest.approx(expected, rel=1e-6)
