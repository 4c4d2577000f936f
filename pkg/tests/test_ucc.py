import numpy as np
import pytest

from qsim import gates as G
from qsim.circuit import Circuit
from qsim.dm_oracle import dense_expm, dense_matrix_of, exp_pauli_sum
from qsim.experiments import particle_number_observable
from qsim.fermion import Mapping, fermion_to_pauli, number_operator
from qsim.pauli import PauliString, PauliSum
from qsim.statevec import StateVector, expectation, init_basis_state, run_circuit
from qsim.ucc import (
    ClusterAmplitudes,
    TrotterPlan,
    build_cluster_operator,
    build_ucc_circuit,
    circuit_from_exponents,
    hartree_fock_reference,
    qft_circuit,
    synthesize_exponential,
    trotterize,
    ucc_generator_blocks,
)

from conftest import random_pauli_string, random_state


def unitary_of(exponents, n):
    return dense_matrix_of(circuit_from_exponents(n, exponents))


def phase_free_distance(a, b):
    """max |a - e^{i phi} b| with the global phase phi fitted."""
    k = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    ph = a[k] / b[k]
    return np.max(np.abs(a - ph / abs(ph) * b))


def op_norm(a):
    return np.linalg.norm(a, 2)


# -- cluster operators ---------------------------------------------------------

def test_empty_amplitudes():
    amps = ClusterAmplitudes(4, 2)
    assert len(build_cluster_operator(amps)) == 0
    u = build_ucc_circuit(amps)
    assert u.gate_count == 0 and u.reference == 0b0011


def test_single_excitation_operator():
    t = build_cluster_operator(ClusterAmplitudes(4, 2, singles=[(0, 2, 0.1)]))
    assert t.symbolically_equal(-t.dagger())
    image = fermion_to_pauli(t, Mapping.JW)
    m = image.to_matrix()
    assert image.is_anti_hermitian()
    assert np.allclose(m.conj().T, -m)


def test_double_excitation_operator():
    t = build_cluster_operator(ClusterAmplitudes(4, 2, doubles=[(0, 1, 2, 3, 0.05)]))
    assert t.is_anti_hermitian()
    assert len(t) == 2
    # each four-operator product expands to 8 Pauli strings on the qubits
    for mapping in Mapping:
        assert len(fermion_to_pauli(t, mapping)) == 8


def test_cutoff_drops_small_amplitudes():
    amps = ClusterAmplitudes(4, 2, singles=[(0, 2, 5e-6), (1, 3, 2e-5)])
    assert len(build_cluster_operator(amps)) == 2
    assert len(build_cluster_operator(amps, cutoff=0.0)) == 4


def test_hartree_fock_reference():
    assert hartree_fock_reference(2, 4, "jw") == 0b0011
    for mapping in Mapping:
        assert hartree_fock_reference(0, 5, mapping) == 0
    b = hartree_fock_reference(3, 4, "bk")
    n_bk = fermion_to_pauli(number_operator(4), Mapping.BK)
    assert expectation(init_basis_state(4, b), n_bk) == pytest.approx(3.0, abs=1e-14)
    with pytest.raises(ValueError):
        hartree_fock_reference(5, 4, "jw")


# -- Trotterization --------------------------------------------------------------

def test_trotter_commuting_is_exact():
    g = PauliSum(2, {PauliString.from_letters("ZI"): 0.1j, PauliString.from_letters("IZ"): 0.2j})
    exps = trotterize(g, TrotterPlan(1))
    assert phase_free_distance(unitary_of(exps, 2), exp_pauli_sum(g)) <= 1e-12


def test_trotter_rejects_hermitian_generator():
    with pytest.raises(ValueError):
        trotterize(PauliSum.from_string(1, "X0", 0.3), TrotterPlan(1))
    with pytest.raises(ValueError):
        TrotterPlan(0)


def test_trotter_structure():
    g = PauliSum(1, {PauliString.from_letters("X"): 0.3j, PauliString.from_letters("Z"): 0.3j})
    exps = trotterize(g, TrotterPlan(3))
    assert len(exps) == 6
    assert all(c == pytest.approx(0.1) for c, _ in exps)
    assert [str(p) for _, p in exps] == ["X0", "Z0"] * 3


def test_trotter_error_decreases():
    g = PauliSum(1, {PauliString.from_letters("X"): 0.3j, PauliString.from_letters("Z"): 0.3j})
    exact = exp_pauli_sum(g)
    err = {eta: op_norm(unitary_of(trotterize(g, TrotterPlan(eta)), 1) - exact) for eta in (1, 2, 4)}
    assert err[2] < err[1]
    ratio = err[4] / err[2]
    assert 0.5 / 1.5 <= ratio <= 0.5 * 1.5


def test_trotter_term_blocks_stay_contiguous(toy4):
    amps, _ = toy4
    blocks = ucc_generator_blocks(amps, "jw")
    exps = trotterize(blocks, TrotterPlan(2))
    sizes = [len(b) for b in blocks]
    flat = [p for b in blocks for p in (t.string for t in b.simplify().terms)]
    assert [p for _, p in exps] == flat * 2
    assert sum(sizes) * 2 == len(exps)


# -- synthesis -----------------------------------------------------------------

def test_synthesize_single_z():
    ops, phase = synthesize_exponential(0.3, PauliString.from_letters("Z"))
    assert [o.name for o in ops] == ["RZ"] and ops[0].params == (-0.6,)
    assert phase == 0.0
    want = dense_expm(0.3j * np.diag([1, -1]))
    assert phase_free_distance(dense_matrix_of(Circuit(1).extend(ops)), want) <= 1e-12


def test_synthesize_zz():
    ops, _ = synthesize_exponential(0.2, PauliString.from_letters("ZZ"))
    assert [(o.name, o.qubits) for o in ops] == [("CNOT", (0, 1)), ("RZ", (1,)), ("CNOT", (0, 1))]
    zz = PauliString.from_letters("ZZ").to_matrix()
    assert phase_free_distance(dense_matrix_of(Circuit(2).extend(ops)), dense_expm(0.2j * zz)) <= 1e-12


def test_synthesize_zero_angle_is_identity():
    ops, _ = synthesize_exponential(0.0, PauliString.from_letters("XYZX"))
    assert np.max(np.abs(dense_matrix_of(Circuit(4).extend(ops)) - np.eye(16))) <= 1e-12


def test_identity_string_is_phase_only():
    ops, phase = synthesize_exponential(0.7, PauliString.identity(3))
    assert ops == [] and phase == 0.7


@pytest.mark.parametrize("seed", range(5))
def test_synthesis_matches_dense_exponential(seed):
    rng = np.random.default_rng(seed)
    for _ in range(10):
        n = int(rng.integers(1, 7))
        p = random_pauli_string(n, rng, allow_identity=False)
        c = float(rng.uniform(-1, 1))
        ops, _ = synthesize_exponential(c, p)
        u = dense_matrix_of(Circuit(n).extend(ops))
        # the ladder construction carries no global phase at all
        assert np.max(np.abs(u - dense_expm(1j * c * p.to_matrix()))) <= 1e-12


# -- full UCC circuits ----------------------------------------------------------

@pytest.mark.parametrize("mapping", list(Mapping))
def test_single_excitation_circuit_matches_exponential(mapping):
    amps = ClusterAmplitudes(4, 2, singles=[(0, 2, 0.1)])
    u = build_ucc_circuit(amps, mapping)
    psi = run_circuit(init_basis_state(4, u.reference), u.circuit).amplitudes
    (block,) = ucc_generator_blocks(amps, mapping)
    exact = exp_pauli_sum(block)[:, u.reference]
    commuting = all(a.string.commutes_with(b.string) for a in block.terms for b in block.terms)
    assert commuting
    assert abs(abs(np.vdot(exact, psi)) - 1) <= 1e-10


@pytest.mark.parametrize("mapping", list(Mapping))
@pytest.mark.parametrize("eta", [1, 2])
def test_particle_number_conserved(toy4, toy8_amps, mapping, eta):
    for amps in (toy4[0], toy8_amps):
        u = build_ucc_circuit(amps, mapping, eta)
        psi = run_circuit(init_basis_state(amps.n_modes, u.reference), u.circuit)
        n_op = particle_number_observable(amps.n_modes, mapping)
        assert abs(expectation(psi, n_op) - amps.n_electrons) <= 1e-12


def test_circuit_files_are_deterministic(toy8_amps):
    a = build_ucc_circuit(toy8_amps, "bk", 2).to_text()
    b = build_ucc_circuit(toy8_amps, "bk", 2).to_text()
    assert a == b
    assert "# reference 0b" in a and "# gates " in a


def test_trotter_doubling_never_hurts(toy4):
    amps, _ = toy4
    for mapping in Mapping:
        blocks = ucc_generator_blocks(amps, mapping)
        total = sum(blocks[1:], blocks[0])
        exact = exp_pauli_sum(total)
        err = [op_norm(dense_matrix_of(build_ucc_circuit(amps, mapping, eta).circuit) - exact)
               for eta in (1, 2, 4)]
        assert err[1] <= err[0] + 1e-12 and err[2] <= err[1] + 1e-12


# -- QFT -------------------------------------------------------------------------

def dft(n):
    d = 1 << n
    x, y = np.meshgrid(np.arange(d), np.arange(d))
    return np.exp(2j * np.pi * x * y / d) / np.sqrt(d)


def test_qft_uniform_from_zero():
    s = run_circuit(init_basis_state(6), qft_circuit(6))
    assert np.max(np.abs(s.amplitudes - 2 ** -3)) <= 1e-12


def test_qft_three_qubits_is_dft():
    assert np.max(np.abs(dense_matrix_of(qft_circuit(3)) - dft(3))) <= 1e-12


def test_qft_ten_qubit_phases():
    x = 357
    s = run_circuit(init_basis_state(10, x), qft_circuit(10))
    y = np.arange(1024)
    assert np.max(np.abs(s.amplitudes - 2 ** -5 * np.exp(2j * np.pi * x * y / 1024))) <= 1e-10


def test_qft_swap_network_uses_cnots():
    c = qft_circuit(5)
    tail = [o.name for o in c.ops[-6:]]
    assert tail == ["CNOT"] * 6


def test_qft_random_state(rng):
    psi = random_state(5, rng)
    out = run_circuit(StateVector(5, psi.copy()), qft_circuit(5)).amplitudes
    assert np.max(np.abs(out - dft(5) @ psi)) <= 1e-12


def test_rz_convention_pins_phase():
    assert np.allclose(G.rz(2.0).matrix, dense_expm(-1j * np.diag([1, -1])))
