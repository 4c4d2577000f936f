"""Dense-matrix and density-matrix reference implementations for small registers.

Everything here is built from Kronecker products and full matrix algebra, never
from the amplitude kernels, so it can serve as an independent check on them.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
import scipy.linalg

from .circuit import Circuit, GateOp
from .gates import PAULI_MATRICES, Gate1Q
from .pauli import PauliString, PauliSum

MAX_ORACLE_QUBITS = 12

_P0 = np.array([[1, 0], [0, 0]], dtype=np.complex128)
_P1 = np.array([[0, 0], [0, 1]], dtype=np.complex128)


class OracleSizeError(ValueError):
    pass


def _check(n: int):
    if n > MAX_ORACLE_QUBITS:
        raise OracleSizeError(f"dense oracle limited to {MAX_ORACLE_QUBITS} qubits, got {n}")


def _kron_chain(per_qubit: Sequence[np.ndarray]) -> np.ndarray:
    """Operator with ``per_qubit[k]`` on qubit k (qubit 0 least significant)."""
    m = np.ones((1, 1), dtype=np.complex128)
    for op in reversed(per_qubit):
        m = np.kron(m, op)
    return m


def embed_1q(u: np.ndarray, k: int, n: int) -> np.ndarray:
    _check(n)
    ops = [np.eye(2)] * n
    ops[k] = u
    return _kron_chain(ops)


def embed_controlled(u: np.ndarray, c: int, t: int, n: int) -> np.ndarray:
    _check(n)
    idle = [np.eye(2)] * n
    idle[c] = _P0
    active = [np.eye(2)] * n
    active[c] = _P1
    active[t] = u
    return _kron_chain(idle) + _kron_chain(active)


def gate_matrix(op: GateOp, n: int) -> np.ndarray:
    if op.control is None:
        return embed_1q(op.gate.matrix, op.target, n)
    return embed_controlled(op.gate.matrix, op.control, op.target, n)


def dense_matrix_of(obj, n: int | None = None) -> np.ndarray:
    """Dense operator of a PauliString, PauliSum, GateOp or Circuit."""
    if isinstance(obj, PauliString):
        _check(obj.num_qubits)
        return _kron_chain([PAULI_MATRICES[obj.letter(q)] for q in range(obj.num_qubits)])
    if isinstance(obj, PauliSum):
        _check(obj.num_qubits)
        dim = 1 << obj.num_qubits
        m = np.zeros((dim, dim), dtype=np.complex128)
        for s, c in obj.items():
            m += c * dense_matrix_of(s)
        return m
    if isinstance(obj, GateOp):
        if n is None:
            raise ValueError("qubit count required for a single gate")
        return gate_matrix(obj, n)
    if isinstance(obj, Circuit):
        _check(obj.num_qubits)
        u = np.eye(1 << obj.num_qubits, dtype=np.complex128)
        for op in obj.ops:
            u = gate_matrix(op, obj.num_qubits) @ u
        return np.exp(1j * obj.global_phase) * u
    raise TypeError(f"no dense form for {type(obj).__name__}")


def dense_expm(a: np.ndarray) -> np.ndarray:
    """exp(A); eigendecomposition for (anti-)Hermitian A, Pade otherwise."""
    if np.allclose(a, -a.conj().T, atol=1e-14, rtol=0):
        w, v = np.linalg.eigh(1j * a)
        return (v * np.exp(-1j * w)) @ v.conj().T
    if np.allclose(a, a.conj().T, atol=1e-14, rtol=0):
        w, v = np.linalg.eigh(a)
        return (v * np.exp(w)) @ v.conj().T
    return scipy.linalg.expm(a)


def exp_pauli_sum(generator: PauliSum) -> np.ndarray:
    return dense_expm(dense_matrix_of(generator))


def apply_dense(u: np.ndarray, psi: np.ndarray) -> np.ndarray:
    return u @ psi


# -- density matrices ----------------------------------------------------------

class DensityMatrix:
    def __init__(self, num_qubits: int, rho: np.ndarray):
        _check(num_qubits)
        dim = 1 << num_qubits
        rho = np.asarray(rho, dtype=np.complex128)
        if rho.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix, got {rho.shape}")
        self.num_qubits = num_qubits
        self.rho = rho
        if not self.is_hermitian():
            raise ValueError("density matrix is not Hermitian")
        if abs(self.trace() - 1) > 1e-12:
            raise ValueError(f"density matrix trace is {self.trace()}, not 1")

    @classmethod
    def from_state(cls, psi: np.ndarray) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=np.complex128)
        n = psi.shape[0].bit_length() - 1
        return cls(n, np.outer(psi, psi.conj()))

    @classmethod
    def basis(cls, n: int, index: int) -> "DensityMatrix":
        rho = np.zeros((1 << n, 1 << n), dtype=np.complex128)
        rho[index, index] = 1
        return cls(n, rho)

    def copy(self) -> "DensityMatrix":
        return DensityMatrix(self.num_qubits, self.rho.copy())

    def trace(self) -> complex:
        return complex(np.trace(self.rho))

    def is_hermitian(self, tol=1e-12) -> bool:
        return bool(np.max(np.abs(self.rho - self.rho.conj().T)) <= tol)

    def is_psd(self, tol=1e-10) -> bool:
        return bool(np.min(np.linalg.eigvalsh(0.5 * (self.rho + self.rho.conj().T))) >= -tol)


def dm_apply_unitary(rho: DensityMatrix, u: np.ndarray) -> DensityMatrix:
    return DensityMatrix(rho.num_qubits, u @ rho.rho @ u.conj().T)


def dm_apply_gate(rho: DensityMatrix, gate: Gate1Q | GateOp | np.ndarray,
                  qubits: Sequence[int] | int | None = None) -> DensityMatrix:
    """rho -> U rho U^dagger.  ``qubits`` is ``k`` or ``(control, target)``."""
    n = rho.num_qubits
    if isinstance(gate, GateOp):
        u = gate_matrix(gate, n)
    else:
        m = gate.matrix if isinstance(gate, Gate1Q) else np.asarray(gate)
        qs = [qubits] if isinstance(qubits, int) else list(qubits)
        if any(not 0 <= q < n for q in qs):
            raise IndexError(f"qubits {qs} out of range for {n} qubits")
        u = embed_1q(m, qs[0], n) if len(qs) == 1 else embed_controlled(m, qs[0], qs[1], n)
    return dm_apply_unitary(rho, u)


def dm_apply_pauli_channel(rho: DensityMatrix, qubit: int, px: float, py: float,
                           pz: float) -> DensityMatrix:
    """(1-px-py-pz) rho + px X rho X + py Y rho Y + pz Z rho Z on one qubit."""
    ps = (px, py, pz)
    if any(p < 0 or p >= 1 for p in ps) or sum(ps) >= 1:
        raise ValueError(f"invalid Pauli channel probabilities {ps}")
    n = rho.num_qubits
    out = (1 - sum(ps)) * rho.rho
    for p, letter in zip(ps, "XYZ"):
        if p:
            e = embed_1q(PAULI_MATRICES[letter], qubit, n)
            out = out + p * (e @ rho.rho @ e)
    return DensityMatrix(n, out)


def dm_apply_noise_step(rho: DensityMatrix, px: float, py: float, pz: float) -> DensityMatrix:
    for q in range(rho.num_qubits):
        rho = dm_apply_pauli_channel(rho, q, px, py, pz)
    return rho


def dm_expectation(rho: DensityMatrix, h: PauliSum | PauliString) -> float:
    if h.num_qubits != rho.num_qubits:
        raise ValueError("observable and density matrix sizes differ")
    v = np.trace(rho.rho @ dense_matrix_of(h))
    if abs(v.imag) > 1e-12:
        raise AssertionError(f"Tr(rho H) has imaginary part {v.imag}")
    return float(v.real)


def dm_run_noisy(circuit: Circuit, reference: int, probs: tuple[float, float, float]) -> DensityMatrix:
    """Exact channel evolution: each time step's gates, then the Pauli channel on every qubit."""
    rho = DensityMatrix.basis(circuit.num_qubits, reference)
    for step in circuit.steps():
        for op in step:
            rho = dm_apply_gate(rho, op)
        rho = dm_apply_noise_step(rho, *probs)
    return rho


def pauli_channel_factors(px: float, py: float, pz: float) -> dict[str, float]:
    """Per-application multiplier of <X>, <Y>, <Z> under the channel."""
    return {"X": 1 - 2 * (py + pz), "Y": 1 - 2 * (px + pz), "Z": 1 - 2 * (px + py)}
