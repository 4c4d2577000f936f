"""Unitary coupled cluster circuits: cluster operators, Trotterization and
synthesis of Pauli-string exponentials into H / YB / CNOT / RZ gates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .circuit import Circuit, GateOp
from .fermion import FermionOp, FermionSum, Mapping, fermion_to_pauli, occupation_to_qubits
from .formats import ParseError, RangeError, _lines
from .pauli import PauliString, PauliSum

log = logging.getLogger(__name__)

AMPLITUDE_CUTOFF = 1e-5


@dataclass
class ClusterAmplitudes:
    n_modes: int
    n_electrons: int
    singles: list[tuple[int, int, float]] = field(default_factory=list)
    doubles: list[tuple[int, int, int, int, float]] = field(default_factory=list)

    def validate(self):
        if not 0 <= self.n_electrons <= self.n_modes:
            raise ValueError(f"{self.n_electrons} electrons in {self.n_modes} modes")
        occ = range(self.n_electrons)
        virt = range(self.n_electrons, self.n_modes)
        for *idx, xi in self.singles + self.doubles:
            if not math.isfinite(xi):
                raise ValueError(f"non-finite amplitude {xi}")
            half = len(idx) // 2
            for i in idx[:half]:
                if i not in occ:
                    raise IndexError(f"occupied index {i} not in 0..{self.n_electrons - 1}")
            for p in idx[half:]:
                if p not in virt:
                    raise IndexError(
                        f"virtual index {p} not in {self.n_electrons}..{self.n_modes - 1}")
            for i, p in zip(idx[:half], idx[half:]):
                if (i - p) % 2:
                    log.warning("excitation %s -> %s changes spin (even/odd = alpha/beta)", i, p)
        return self


def parse_amplitude_file(text: str) -> ClusterAmplitudes:
    n = ne = None
    singles, doubles = [], []
    for lineno, line in _lines(text):
        toks = line.split()
        key = toks[0]
        try:
            if key == "modes" and len(toks) == 2:
                n = int(toks[1])
            elif key == "electrons" and len(toks) == 2:
                ne = int(toks[1])
            elif key == "single" and len(toks) == 4:
                singles.append((int(toks[1]), int(toks[2]), float(toks[3])))
            elif key == "double" and len(toks) == 6:
                doubles.append((*map(int, toks[1:5]), float(toks[5])))
            else:
                raise ParseError(lineno, f"unrecognised line {line!r}")
        except ValueError as exc:
            if isinstance(exc, ParseError):
                raise
            raise ParseError(lineno, str(exc)) from None
    if n is None or ne is None:
        raise ParseError(0, "amplitude file needs 'modes' and 'electrons' lines")
    amps = ClusterAmplitudes(n, ne, singles, doubles)
    try:
        amps.validate()
    except IndexError as exc:
        raise RangeError(0, str(exc)) from None
    return amps


def write_amplitude_file(amps: ClusterAmplitudes) -> str:
    lines = [f"modes {amps.n_modes}", f"electrons {amps.n_electrons}"]
    lines += [f"single {i} {p} {xi!r}" for i, p, xi in amps.singles]
    lines += [f"double {i1} {i2} {p1} {p2} {xi!r}" for i1, i2, p1, p2, xi in amps.doubles]
    return "\n".join(lines) + "\n"


def single_excitation(n: int, i: int, p: int, xi: float = 1.0) -> FermionSum:
    """xi (a_i^dagger a_p - a_p^dagger a_i) for occupied i and virtual p."""
    fwd = FermionOp(((i, True), (p, False)))
    return FermionSum(n, [(xi, fwd), (-xi, fwd.dagger())])


def excitation_terms(amps: ClusterAmplitudes, cutoff: float = AMPLITUDE_CUTOFF) -> list[FermionSum]:
    """One anti-Hermitian FermionSum per retained excitation, in input order."""
    amps.validate()
    n = amps.n_modes
    out = []
    for i, p, xi in amps.singles:
        if abs(xi) < cutoff:
            continue
        out.append(single_excitation(n, i, p, xi))
    for i1, i2, p1, p2, xi in amps.doubles:
        if abs(xi) < cutoff:
            continue
        fwd = FermionOp(((i1, True), (p1, False), (i2, True), (p2, False)))
        out.append(FermionSum(n, [(xi, fwd), (-xi, fwd.dagger())]))
    return out


def build_cluster_operator(amps: ClusterAmplitudes, cutoff: float = AMPLITUDE_CUTOFF) -> FermionSum:
    """T = T1 + T2 with amplitudes below ``cutoff`` dropped."""
    total = FermionSum(amps.n_modes)
    for t in excitation_terms(amps, cutoff):
        total = total + t
    if not total.is_anti_hermitian():
        raise AssertionError("cluster operator is not anti-Hermitian")
    return total


def hartree_fock_reference(n_electrons: int, n_modes: int, mapping: Mapping | str) -> int:
    if not 0 <= n_electrons <= n_modes:
        raise ValueError(f"{n_electrons} electrons do not fit in {n_modes} modes")
    return occupation_to_qubits((1 << n_electrons) - 1, n_modes, mapping)


# -- Trotterization ------------------------------------------------------------

@dataclass(frozen=True)
class TrotterPlan:
    eta: int = 1
    term_order: str = "canonical"

    def __post_init__(self):
        if self.eta < 1:
            raise ValueError("Trotter number must be >= 1")


def _as_blocks(generator: PauliSum | Sequence[PauliSum]) -> list[PauliSum]:
    return [generator] if isinstance(generator, PauliSum) else list(generator)


def trotterize(generator: PauliSum | Sequence[PauliSum], plan: TrotterPlan) -> list[tuple[float, PauliString]]:
    """Exponent list ``[(c/eta, P), ...]`` for ``exp(sum_j i c_j P_j)``.

    ``generator`` may be one anti-Hermitian PauliSum or a sequence of them
    (blocks).  Terms are kept in canonical order inside each block and blocks
    stay contiguous; the whole sequence repeats ``eta`` times.
    """
    seq: list[tuple[float, PauliString]] = []
    for block in _as_blocks(generator):
        if not block.is_anti_hermitian():
            raise ValueError("generator must be anti-Hermitian (purely imaginary coefficients)")
        for term in block.simplify().terms:
            seq.append((term.coeff.imag / plan.eta, term.string))
    return seq * plan.eta


def synthesize_exponential(c: float, p: PauliString) -> tuple[list[GateOp], float]:
    """Gates implementing exp(i c P), plus the global phase for identity strings."""
    if p.is_identity:
        return [], c
    tmp = Circuit(p.num_qubits)
    active = p.support
    for q in active:
        letter = p.letter(q)
        if letter == "X":
            tmp.h(q)
        elif letter == "Y":
            tmp.yb(q)
    for a, b in zip(active, active[1:]):
        tmp.cnot(a, b)
    tmp.rz(active[-1], -2.0 * c)
    for a, b in reversed(list(zip(active, active[1:]))):
        tmp.cnot(a, b)
    for q in active:
        letter = p.letter(q)
        if letter == "X":
            tmp.h(q)
        elif letter == "Y":
            tmp.ybdg(q)
    return tmp.ops, 0.0


def circuit_from_exponents(n: int, exponents: Sequence[tuple[float, PauliString]]) -> Circuit:
    circ = Circuit(n)
    for c, p in exponents:
        ops, ph = synthesize_exponential(c, p)
        circ.extend(ops)
        circ.global_phase += ph
    return circ


def ucc_generator_blocks(amps: ClusterAmplitudes, mapping: Mapping | str,
                         cutoff: float = AMPLITUDE_CUTOFF) -> list[PauliSum]:
    """Qubit images of each excitation, ordered by their leading Pauli string."""
    blocks = []
    for term in excitation_terms(amps, cutoff):
        img = fermion_to_pauli(term, mapping, amps.n_modes)
        if len(img):
            blocks.append(img)
    blocks.sort(key=lambda b: b.terms[0].string.sort_key())
    return blocks


@dataclass
class UCCCircuit:
    circuit: Circuit
    reference: int
    mapping: Mapping
    eta: int
    n_electrons: int

    @property
    def gate_count(self) -> int:
        return self.circuit.gate_count

    def to_text(self) -> str:
        n = self.circuit.num_qubits
        header = [f"qubits {n}", f"reference 0b{self.reference:0{n}b}", f"gates {self.gate_count}",
                  f"mapping {self.mapping.value}", f"electrons {self.n_electrons}",
                  f"eta {self.eta}", f"global_phase {self.circuit.global_phase!r}"]
        return self.circuit.to_text(header)


def build_ucc_circuit(amps: ClusterAmplitudes, mapping: Mapping | str = Mapping.JW,
                      eta: int = 1, cutoff: float = AMPLITUDE_CUTOFF) -> UCCCircuit:
    mapping = Mapping(mapping)
    blocks = ucc_generator_blocks(amps, mapping, cutoff)
    exps = trotterize(blocks, TrotterPlan(eta))
    circ = circuit_from_exponents(amps.n_modes, exps)
    ref = hartree_fock_reference(amps.n_electrons, amps.n_modes, mapping)
    return UCCCircuit(circ, ref, mapping, eta, amps.n_electrons)


def qft_circuit(n: int) -> Circuit:
    """QFT on a little-endian register, equal to the DFT matrix
    ``F[y, x] = 2^{-n/2} exp(2 pi i x y / 2^n)``."""
    if n < 1:
        raise ValueError("QFT needs at least one qubit")
    circ = Circuit(n)
    for j in reversed(range(n)):
        circ.h(j)
        for k in reversed(range(j)):
            circ.cp(k, j, 2 * np.pi / 2 ** (j - k + 1))
    for a in range(n // 2):
        b = n - 1 - a
        circ.cnot(a, b)
        circ.cnot(b, a)
        circ.cnot(a, b)
    return circ
