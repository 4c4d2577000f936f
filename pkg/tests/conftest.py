"""Shared fixtures and random-instance helpers."""

from __future__ import annotations

import numpy as np
import pytest

from qsim import gates as G
from qsim.circuit import Circuit
from qsim.fermion import FermionOp, FermionSum
from qsim.formats import bundled_text, parse_fermion_file
from qsim.pauli import PauliString, PauliSum
from qsim.ucc import parse_amplitude_file


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_state(n: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_circuit(n: int, count: int, rng: np.random.Generator, controlled_frac: float = 0.4) -> Circuit:
    """Mix of named gates, random single-qubit unitaries and controlled gates."""
    c = Circuit(n)
    for _ in range(count):
        r = rng.random()
        if n > 1 and r < controlled_frac:
            ctl, tgt = rng.choice(n, size=2, replace=False)
            if rng.random() < 0.5:
                c.cnot(int(ctl), int(tgt))
            else:
                c.u(int(tgt), random_unitary(rng), control=int(ctl))
        else:
            q = int(rng.integers(n))
            kind = rng.integers(4)
            if kind == 0:
                c.h(q)
            elif kind == 1:
                c.rz(q, float(rng.uniform(-np.pi, np.pi)))
            elif kind == 2:
                c.yb(q)
            else:
                c.u(q, random_unitary(rng))
    return c


def random_pauli_string(n: int, rng: np.random.Generator, allow_identity: bool = True) -> PauliString:
    while True:
        s = PauliString.from_letters("".join(rng.choice(list("IXYZ"), size=n)))
        if allow_identity or not s.is_identity:
            return s


def random_pauli_sum(n: int, terms: int, rng: np.random.Generator, hermitian: bool = True) -> PauliSum:
    h = PauliSum(n)
    for _ in range(terms):
        c = rng.normal() if hermitian else complex(rng.normal(), rng.normal())
        h = h + PauliSum(n, {random_pauli_string(n, rng): c})
    return h


def random_hermitian_fermion_sum(n: int, terms: int, rng: np.random.Generator) -> FermionSum:
    """Random f + f^dagger built from products of up to four ladder operators."""
    f = FermionSum(n)
    for _ in range(terms):
        k = int(rng.integers(1, 5))
        factors = tuple((int(rng.integers(n)), bool(rng.integers(2))) for _ in range(k))
        f.append(complex(rng.normal(), rng.normal()), FermionOp(factors))
    return f + f.dagger()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def toy4():
    """(amplitudes, fermionic Hamiltonian) of the bundled 4-mode system."""
    _, ham = parse_fermion_file(bundled_text("toy4.ferm"))
    return parse_amplitude_file(bundled_text("toy4.amp")), ham


@pytest.fixture(scope="session")
def toy8_amps():
    return parse_amplitude_file(bundled_text("toy8.amp"))


def pytest_terminal_summary(terminalreporter):
    """Repeat the acceptance verdicts at the end of the run."""
    import sys
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for k in sorted(results):
            terminalreporter.write_line(results[k])


__all__ = ["random_unitary", "random_state", "random_circuit", "random_pauli_string",
           "random_pauli_sum", "random_hermitian_fermion_sum", "G"]
