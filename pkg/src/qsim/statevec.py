"""Dense state-vector register and gate application.

Amplitude ``i`` of an ``n``-qubit register has qubit ``k`` in state ``(i >> k) & 1``.
A single-qubit gate on ``k`` mixes amplitude pairs at stride ``2^k``; the pair
index range can be split across worker threads, and since no reductions are
involved the result does not depend on the split.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import _kernels as K
from .circuit import Circuit, GateOp, compile_ops
from .gates import Gate1Q
from .pauli import PauliString, PauliSum

BYTES_PER_AMPLITUDE = 16
DEFAULT_BLOCK_BITS = 21
MIN_PARALLEL_PAIRS = 1 << 14


class CapacityError(MemoryError):
    pass


def _physical_memory() -> int:
    try:
        return os.sysconf("SC_PAGE_SIZE") * os.sysconf("SC_PHYS_PAGES")
    except (ValueError, OSError, AttributeError):
        return 1 << 34


def memory_bound() -> int:
    """Byte budget for one register (``QSIM_MAX_BYTES`` overrides physical RAM)."""
    env = os.environ.get("QSIM_MAX_BYTES")
    return int(float(env)) if env else _physical_memory()


def required_bytes(n: int) -> int:
    return 1 << (n + 4)


def default_workers() -> int:
    env = os.environ.get("QSIM_THREADS")
    if env:
        return max(1, int(env))
    return 1


class StateVector:
    """``2^n`` complex amplitudes (interleaved re/im float64 pairs)."""

    __slots__ = ("num_qubits", "amplitudes")

    def __init__(self, num_qubits: int, amplitudes: np.ndarray | None = None):
        if num_qubits < 1:
            raise ValueError("need at least one qubit")
        if amplitudes is None:
            check_capacity(num_qubits)
            amplitudes = np.zeros(1 << num_qubits, dtype=np.complex128)
        else:
            amplitudes = np.ascontiguousarray(amplitudes, dtype=np.complex128)
            if amplitudes.shape != (1 << num_qubits,):
                raise ValueError(
                    f"expected {1 << num_qubits} amplitudes, got shape {amplitudes.shape}")
        self.num_qubits = num_qubits
        self.amplitudes = amplitudes

    @classmethod
    def random(cls, n: int, rng: np.random.Generator) -> "StateVector":
        v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
        return cls(n, v / np.linalg.norm(v))

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())

    def norm_squared(self) -> float:
        return float(K.norm_squared(self.amplitudes))

    def __len__(self):
        return self.amplitudes.shape[0]

    def __repr__(self):
        return f"StateVector(n={self.num_qubits})"


def check_capacity(n: int, bound: int | None = None):
    need = required_bytes(n)
    bound = memory_bound() if bound is None else bound
    if need > bound:
        raise CapacityError(
            f"{n} qubits need {need} bytes (2^{n + 4}) of amplitude storage; "
            f"the configured bound is {bound} bytes")


def init_basis_state(n: int, occupied: int = 0) -> StateVector:
    if not 0 <= occupied < (1 << n):
        raise ValueError(f"basis index {occupied} out of range for {n} qubits")
    sv = StateVector(n)
    sv.amplitudes[occupied] = 1.0
    return sv


def _split(total: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, total // MIN_PARALLEL_PAIRS or 1))
    edges = np.linspace(0, total, workers + 1).astype(np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def _run_ranges(fn, args, total, workers):
    ranges = _split(total, workers)
    if len(ranges) == 1:
        fn(*args, *ranges[0])
        return
    with ThreadPoolExecutor(len(ranges)) as ex:
        for f in [ex.submit(fn, *args, lo, hi) for lo, hi in ranges]:
            f.result()


def _matrix(gate) -> np.ndarray:
    return gate.matrix if isinstance(gate, Gate1Q) else np.asarray(gate, dtype=np.complex128)


def apply_1q(state: StateVector, gate: Gate1Q, k: int, workers: int | None = None) -> StateVector:
    if not 0 <= k < state.num_qubits:
        raise IndexError(f"qubit {k} out of range for {state.num_qubits} qubits")
    m = _matrix(gate)
    _run_ranges(K.apply_1q_range,
                (state.amplitudes, m[0, 0], m[0, 1], m[1, 0], m[1, 1], k),
                len(state) >> 1, workers or default_workers())
    return state


def apply_controlled(state: StateVector, gate: Gate1Q, c: int, t: int,
                     workers: int | None = None) -> StateVector:
    n = state.num_qubits
    if c == t:
        raise ValueError(f"control and target are both qubit {c}")
    if not (0 <= c < n and 0 <= t < n):
        raise IndexError(f"qubits ({c}, {t}) out of range for {n} qubits")
    m = _matrix(gate)
    _run_ranges(K.apply_controlled_range,
                (state.amplitudes, m[0, 0], m[0, 1], m[1, 0], m[1, 1], c, t),
                len(state) >> 2, workers or default_workers())
    return state


def apply_op(state: StateVector, op: GateOp, workers: int | None = None) -> StateVector:
    if op.control is None:
        return apply_1q(state, op.gate, op.target, workers)
    return apply_controlled(state, op.gate, op.control, op.target, workers)


def run_circuit(state: StateVector, circuit: Circuit | Sequence[GateOp],
                workers: int | None = None, block_bits: int | None = None) -> StateVector:
    """Apply every op in order.  ``block_bits`` enables cache-blocked execution."""
    ops = circuit.ops if isinstance(circuit, Circuit) else list(circuit)
    if isinstance(circuit, Circuit) and circuit.num_qubits != state.num_qubits:
        raise ValueError("circuit and state have different qubit counts")
    if block_bits is not None:
        return execute_schedule(state, fuse_cache_blocks(ops, block_bits), workers)
    if (workers or default_workers()) == 1:
        if ops:
            K.apply_ops(state.amplitudes, *compile_ops(ops))
        return state
    for op in ops:
        apply_op(state, op, workers)
    return state


# -- observables ---------------------------------------------------------------

_I_POW = (1, 1j, -1, -1j)


def pauli_phase(s: PauliString) -> complex:
    return _I_POW[bin(s.x & s.z).count("1") % 4]


def expectation_pauli_complex(state: StateVector, p: PauliString) -> complex:
    if p.num_qubits != state.num_qubits:
        raise ValueError(
            f"{p.num_qubits}-qubit Pauli string on a {state.num_qubits}-qubit state")
    return pauli_phase(p) * K.pauli_expectation(state.amplitudes, p.x, p.z, 0)


def expectation_pauli(state: StateVector, p: PauliString) -> float:
    v = expectation_pauli_complex(state, p)
    scale = max(1.0, state.norm_squared())
    if abs(v.imag) > 1e-12 * scale:
        raise AssertionError(f"<P> has imaginary part {v.imag}")
    return float(v.real)


def expectation(state: StateVector, h: PauliSum) -> float:
    """<psi|H|psi> for Hermitian ``H`` (unnormalised states are not rescaled)."""
    if h.num_qubits != state.num_qubits:
        raise ValueError("observable and state have different qubit counts")
    total = 0.0
    for s, c in h.items():
        if s.is_identity:
            total += c.real * state.norm_squared()
        else:
            total += (c * expectation_pauli_complex(state, s)).real
    return total


def z_expectations(state: StateVector) -> np.ndarray:
    return K.z_expectations(state.amplitudes, state.num_qubits)


# -- cache blocking ------------------------------------------------------------

@dataclass(frozen=True)
class Group:
    ops: tuple[GateOp, ...]
    fused: bool


@dataclass(frozen=True)
class Schedule:
    """Execution plan: runs of low-qubit gates fused into block-resident groups."""

    groups: tuple[Group, ...]
    block_bits: int

    @property
    def ops(self) -> list[GateOp]:
        return [o for g in self.groups for o in g.ops]


def fuse_cache_blocks(circuit: Circuit | Sequence[GateOp], block_bits: int = DEFAULT_BLOCK_BITS) -> Schedule:
    ops = circuit.ops if isinstance(circuit, Circuit) else list(circuit)
    if isinstance(circuit, Circuit):
        block_bits = min(block_bits, circuit.num_qubits)
    groups: list[Group] = []
    run: list[GateOp] = []
    for o in ops:
        if max(o.qubits) < block_bits:
            run.append(o)
            continue
        if run:
            groups.append(Group(tuple(run), True))
            run = []
        groups.append(Group((o,), False))
    if run:
        groups.append(Group(tuple(run), True))
    return Schedule(tuple(groups), block_bits)


def execute_schedule(state: StateVector, schedule: Schedule, workers: int | None = None) -> StateVector:
    bits = min(schedule.block_bits, state.num_qubits)
    nblocks = 1 << (state.num_qubits - bits)
    for g in schedule.groups:
        if g.fused:
            mats, targets, controls = compile_ops(g.ops)
            if (workers or default_workers()) == 1 or nblocks == 1:
                K.apply_ops_blocked(state.amplitudes, mats, targets, controls, bits, 0, nblocks)
            else:
                ranges = np.linspace(0, nblocks, min(nblocks, workers) + 1).astype(np.int64)
                with ThreadPoolExecutor(len(ranges) - 1) as ex:
                    futs = [ex.submit(K.apply_ops_blocked, state.amplitudes, mats, targets,
                                      controls, bits, int(a), int(b))
                            for a, b in zip(ranges[:-1], ranges[1:]) if b > a]
                    for f in futs:
                        f.result()
        else:
            apply_op(state, g.ops[0], workers)
    return state
