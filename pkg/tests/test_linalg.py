import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bellmark.errors import ContractViolation, DimensionCapError, ValidationError
from bellmark.linalg import (
    SIGMA_X,
    SIGMA_Z,
    DensityOperator,
    contract_local,
    expectation,
    hermitian_eigenvalues,
    operator_norm,
    partial_trace,
    permute_sites,
    tensor,
    tensor_all,
)
from conftest import random_hermitian, random_state_matrix


def test_tensor_identity_and_diagonal():
    np.testing.assert_array_equal(tensor(np.eye(2), np.eye(2)), np.eye(4))
    np.testing.assert_array_equal(tensor(SIGMA_Z, SIGMA_Z), np.diag([1, -1, -1, 1]))


def test_tensor_trace_factorizes(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    assert abs(np.trace(tensor(a, b)) - np.trace(a) * np.trace(b)) < 1e-12


def test_tensor_index_layout(rng):
    a = rng.standard_normal((2, 2))
    b = rng.standard_normal((3, 3))
    t = tensor(a, b)
    for i1, j1, i2, j2 in [(0, 1, 2, 0), (1, 1, 1, 2), (1, 0, 0, 0)]:
        assert t[i1 * 3 + i2, j1 * 3 + j2] == a[i1, j1] * b[i2, j2]


def test_tensor_associative(rng):
    a, b, c = (random_hermitian(d, rng) for d in (2, 3, 2))
    assert np.max(np.abs(tensor(tensor(a, b), c) - tensor(a, tensor(b, c)))) <= 1e-12


def test_dimension_cap(monkeypatch):
    monkeypatch.setenv("BELLMARK_DIM_CAP", "8")
    with pytest.raises(DimensionCapError):
        tensor_all([np.eye(2)] * 4)
    monkeypatch.setenv("BELLMARK_DIM_CAP", "16")
    assert tensor_all([np.eye(2)] * 4).shape == (16, 16)


def test_eigenvalues_examples():
    np.testing.assert_allclose(hermitian_eigenvalues(SIGMA_X), [-1, 1])
    np.testing.assert_allclose(hermitian_eigenvalues(np.diag([0.3, -0.7])), [-0.7, 0.3])


def test_eigenvalues_trace_and_reconstruction(rng):
    h = random_hermitian(4, rng)
    w, v = hermitian_eigenvalues(h, vectors=True)
    assert abs(w.sum() - np.trace(h).real) < 1e-9
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.abs(h - (v * w) @ v.conj().T)) <= 1e-8


def test_eigenvalues_reject_non_hermitian():
    with pytest.raises(ContractViolation):
        hermitian_eigenvalues(np.array([[0, 1], [0, 0]]))


def test_operator_norm_examples(rng):
    assert operator_norm(np.eye(3)) == pytest.approx(1.0)
    # X' X for involutions X, X'
    x = SIGMA_X
    xp = np.array([[np.cos(0.3), np.sin(0.3)], [np.sin(0.3), -np.cos(0.3)]])
    assert operator_norm(xp @ x) == pytest.approx(1.0, abs=1e-12)
    q1, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    q2, _ = np.linalg.qr(rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2)))
    assert operator_norm(q1 @ np.diag([2, 0.5]) @ q2.conj().T) == pytest.approx(2.0, abs=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_operator_norm_submultiplicative_and_unitary_invariant(seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    b = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    u, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    assert operator_norm(a @ b) <= operator_norm(a) * operator_norm(b) + 1e-8
    assert abs(operator_norm(u @ a @ u.conj().T) - operator_norm(a)) <= 1e-8


def test_expectation_examples():
    assert expectation(np.eye(2) / 2, SIGMA_Z) == 0
    assert expectation(np.diag([1, 0]), SIGMA_Z) == 1
    psi = np.zeros(8)
    psi[0] = psi[-1] = 2 ** -0.5
    rho = np.outer(psi, psi)
    xxx = tensor_all([SIGMA_X] * 3)
    assert expectation(rho, xxx) == pytest.approx(np.trace(rho @ xxx).real)
    assert expectation(rho, xxx) == pytest.approx(1.0)


def test_expectation_rejects_mismatch_and_imaginary():
    with pytest.raises(ContractViolation):
        expectation(np.eye(2) / 2, np.eye(4))
    with pytest.raises(ContractViolation):
        expectation(np.eye(2) / 2, np.array([[0, 1], [-1, 0]]) * 1j + np.diag([0, 1j]))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5))
def test_bounded_observable_and_variance_inequality(seed, d):
    rng = np.random.default_rng(seed)
    rho = random_state_matrix(d, rng)
    h = random_hermitian(d, rng)
    w, v = np.linalg.eigh(h)
    a = (v * (w / np.max(np.abs(w)))) @ v.conj().T
    assert abs(expectation(rho, a)) <= 1 + 1e-12
    assert expectation(rho, h) ** 2 <= expectation(rho, h @ h) + 1e-9


def test_density_validation():
    DensityOperator(np.eye(4) / 4, (2, 2))
    with pytest.raises(ValidationError):
        DensityOperator(np.eye(2), (2,))
    with pytest.raises(ValidationError):
        DensityOperator(np.diag([1.5, -0.5]), (2,))
    with pytest.raises(ValidationError):
        DensityOperator(np.eye(4) / 4, (2, 3))


def test_permute_sites_matches_reordered_kron(rng):
    a, b, c = (random_hermitian(d, rng) for d in (2, 3, 2))
    op = tensor_all([b, c, a])  # labels 1, 2, 0
    np.testing.assert_allclose(permute_sites(op, [3, 2, 2], [1, 2, 0]), tensor_all([a, b, c]))


def test_contract_local_matches_direct_traces(rng):
    dims = [2, 3]
    rho = random_state_matrix(6, rng)
    stacks = [np.stack([random_hermitian(d, rng) for _ in range(2)]) for d in dims]
    t = contract_local(rho, dims, stacks)
    for i in range(2):
        for j in range(2):
            assert t[i, j] == pytest.approx(np.trace(rho @ np.kron(stacks[0][i], stacks[1][j])))


def test_partial_trace_of_product(rng):
    a = random_state_matrix(2, rng)
    b = random_state_matrix(3, rng)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), [2, 3], [1]), b, atol=1e-12)
    np.testing.assert_allclose(partial_trace(np.kron(a, b), [2, 3], [0]), a, atol=1e-12)
