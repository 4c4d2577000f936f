import math

import numpy as np
import pytest

from qsim import gates as G
from qsim.circuit import Circuit
from qsim.dm_oracle import (
    DensityMatrix,
    OracleSizeError,
    dense_expm,
    dense_matrix_of,
    dm_apply_gate,
    dm_apply_noise_step,
    dm_apply_pauli_channel,
    dm_expectation,
    dm_run_noisy,
    exp_pauli_sum,
    pauli_channel_factors,
)
from qsim.noise import derive_probabilities
from qsim.pauli import PauliString, PauliSum
from qsim.statevec import StateVector, expectation_pauli, run_circuit

from conftest import random_circuit, random_pauli_string, random_state, random_unitary


def random_rho(n, rng):
    a = rng.normal(size=(1 << n, 1 << n)) + 1j * rng.normal(size=(1 << n, 1 << n))
    rho = a @ a.conj().T
    return DensityMatrix(n, rho / np.trace(rho))


def test_basic_gates():
    r = dm_apply_gate(DensityMatrix.basis(1, 0), G.X, 0)
    assert np.allclose(r.rho, np.diag([0, 1]))
    r = dm_apply_gate(DensityMatrix.basis(1, 0), G.H, 0)
    assert np.allclose(r.rho, np.full((2, 2), 0.5))


def test_conjugation_preserves_trace_and_hermiticity(rng):
    rho = random_rho(3, rng)
    out = dm_apply_gate(rho, G.Gate1Q(random_unitary(rng)), 1)
    assert abs(out.trace() - 1) <= 1e-12 and out.is_hermitian(1e-12) and out.is_psd()


def test_controlled_gate_on_density_matrix():
    c = Circuit(2).h(0).cnot(0, 1)
    rho = dm_run_noisy(c, 0, (0.0, 0.0, 0.0))
    bell = np.array([1, 0, 0, 1]) / math.sqrt(2)
    assert np.allclose(rho.rho, np.outer(bell, bell))


def test_density_matrix_validation():
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[1, 0], [0, 1]]))       # trace 2
    with pytest.raises(ValueError):
        DensityMatrix(1, np.array([[0.5, 1j], [0, 0.5]]))  # not Hermitian


def test_channel_identity_and_fixed_point():
    rho = DensityMatrix.basis(1, 1)
    assert np.array_equal(dm_apply_pauli_channel(rho, 0, 0, 0, 0).rho, rho.rho)
    for _ in range(400):
        rho = dm_apply_pauli_channel(rho, 0, 0.05, 0.05, 0.05)
    assert np.allclose(rho.rho, np.eye(2) / 2, atol=1e-12)


def test_channel_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        dm_apply_pauli_channel(DensityMatrix.basis(1, 0), 0, 0.5, 0.4, 0.2)
    with pytest.raises(ValueError):
        dm_apply_pauli_channel(DensityMatrix.basis(1, 0), 0, -0.1, 0, 0)


@pytest.mark.parametrize("m1,m2", [(50.0, 50.0), (10.0, 7.0), (math.inf, 3.0), (4.0, 8.0)])
def test_per_step_decay_factors(m1, m2):
    px, py, pz = derive_probabilities(m1, m2)
    f = pauli_channel_factors(px, py, pz)
    assert abs(f["Z"] - math.exp(-1 / m1)) <= 1e-12
    assert abs(f["X"] - math.exp(-1 / m2)) <= 1e-12
    assert abs(f["Y"] - math.exp(-1 / m2)) <= 1e-12
    # and the channel acting on |1><1| and |+><+| realizes them
    one = dm_apply_pauli_channel(DensityMatrix.basis(1, 1), 0, px, py, pz)
    assert abs(dm_expectation(one, PauliString.from_letters("Z")) + math.exp(-1 / m1)) <= 1e-12
    plus = dm_apply_gate(DensityMatrix.basis(1, 0), G.H, 0)
    plus = dm_apply_pauli_channel(plus, 0, px, py, pz)
    assert abs(dm_expectation(plus, PauliString.from_letters("X")) - math.exp(-1 / m2)) <= 1e-12


def test_channel_preserves_trace_and_hermiticity(rng):
    rho = random_rho(3, rng)
    out = dm_apply_noise_step(rho, 0.02, 0.03, 0.01)
    assert abs(out.trace() - 1) <= 1e-12 and out.is_hermitian(1e-12) and out.is_psd()


def test_expectation_examples():
    z = PauliString.from_letters("Z")
    assert dm_expectation(DensityMatrix.basis(1, 0), z) == 1.0
    assert dm_expectation(DensityMatrix(1, np.eye(2) / 2), z) == 0.0


def test_pure_state_matches_statevector(rng):
    psi = random_state(4, rng)
    rho = DensityMatrix.from_state(psi)
    for _ in range(10):
        p = random_pauli_string(4, rng)
        assert abs(dm_expectation(rho, p) - expectation_pauli(StateVector(4, psi), p)) <= 1e-12


def test_unitary_circuit_paths_agree(rng):
    c = random_circuit(3, 25, rng)
    rho = dm_run_noisy(c, 0b110, (0.0, 0.0, 0.0))
    psi = run_circuit(StateVector(3, np.eye(8)[6].astype(complex)), c).amplitudes
    assert np.max(np.abs(rho.rho - np.outer(psi, psi.conj()))) <= 1e-12


def test_dense_matrix_examples():
    assert np.array_equal(dense_matrix_of(PauliSum.from_string(1, "Z0")), np.diag([1, -1]))
    assert np.array_equal(dense_matrix_of(Circuit(3)), np.eye(8))


def test_dense_exponential_accuracy(rng):
    h = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
    h = (h + h.conj().T) / 2
    h *= 10 / np.linalg.norm(h, 2)
    w, v = np.linalg.eigh(h)
    want = (v * np.exp(1j * w)) @ v.conj().T
    assert np.max(np.abs(dense_expm(1j * h) - want)) <= 1e-12


def test_exp_of_pauli_generator():
    g = PauliSum.from_string(2, "Z0 Z1", 0.4j)
    zz = np.diag([1, -1, -1, 1])
    assert np.allclose(exp_pauli_sum(g), np.diag(np.exp(0.4j * np.diag(zz))), atol=1e-14)


def test_size_bound():
    with pytest.raises(OracleSizeError):
        dense_matrix_of(Circuit(13))
