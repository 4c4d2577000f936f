"""Pauli strings stored as (x, z) bitmasks, and weighted sums of them.

A string with masks ``(x, z)`` denotes ``i^{|x & z|} X^x Z^z``, so a qubit with
both bits set carries a Y.  Products then only need bit counts to fix the phase.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

SIMPLIFY_CUTOFF = 1e-12
_LETTER_RANK = {"I": 0, "X": 1, "Y": 2, "Z": 3}
_PHASES = (1, 1j, -1, -1j)


def _popcount(v: int) -> int:
    return bin(v).count("1")


@dataclass(frozen=True)
class PauliString:
    num_qubits: int
    x: int = 0
    z: int = 0

    def __post_init__(self):
        if self.num_qubits < 0:
            raise ValueError("num_qubits must be non-negative")
        full = (1 << self.num_qubits) - 1
        if self.x & ~full or self.z & ~full:
            raise IndexError(f"Pauli mask exceeds {self.num_qubits} qubits")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def from_letters(cls, letters: str) -> "PauliString":
        """Dense form, qubit 0 first: ``"XIZ"`` is X0 Z2."""
        x = z = 0
        for q, ch in enumerate(letters.upper()):
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
            if ch not in "IXYZ":
                raise ValueError(f"invalid Pauli letter {ch!r}")
        return cls(len(letters), x, z)

    @classmethod
    def from_ops(cls, n: int, ops: Iterable[tuple[str, int]]) -> "PauliString":
        """Sparse form, e.g. ``[("X", 0), ("Z", 2)]``.  Repeated qubits are rejected."""
        x = z = 0
        seen = 0
        for letter, q in ops:
            if q < 0 or q >= n:
                raise IndexError(f"qubit {q} out of range for {n} qubits")
            if seen >> q & 1:
                raise ValueError(f"qubit {q} appears twice")
            seen |= 1 << q
            letter = letter.upper()
            if letter in "XY":
                x |= 1 << q
            if letter in "ZY":
                z |= 1 << q
            if letter not in "IXYZ":
                raise ValueError(f"invalid Pauli letter {letter!r}")
        return cls(n, x, z)

    def letter(self, q: int) -> str:
        return "IZXY"[(self.z >> q & 1) | (self.x >> q & 1) << 1]

    @property
    def letters(self) -> str:
        return "".join(self.letter(q) for q in range(self.num_qubits))

    @property
    def support(self) -> list[int]:
        m = self.x | self.z
        return [q for q in range(self.num_qubits) if m >> q & 1]

    @property
    def weight(self) -> int:
        return _popcount(self.x | self.z)

    @property
    def is_identity(self) -> bool:
        return not (self.x or self.z)

    def sort_key(self) -> tuple:
        """Highest active qubit first, then letters I<X<Y<Z from qubit 0."""
        top = (self.x | self.z).bit_length() - 1
        return (top, tuple(_LETTER_RANK[self.letter(q)] for q in range(self.num_qubits)))

    def commutes_with(self, other: "PauliString") -> bool:
        return (_popcount(self.x & other.z) + _popcount(self.z & other.x)) % 2 == 0

    def multiply(self, other: "PauliString") -> tuple[complex, "PauliString"]:
        """Return ``(phase, string)`` with ``self @ other == phase * string``."""
        if self.num_qubits != other.num_qubits:
            raise ValueError("Pauli strings act on different qubit counts")
        x, z = self.x ^ other.x, self.z ^ other.z
        k = (_popcount(self.x & self.z) + _popcount(other.x & other.z)
             + 2 * _popcount(self.z & other.x) - _popcount(x & z))
        return _PHASES[k % 4], PauliString(self.num_qubits, x, z)

    def to_matrix(self) -> np.ndarray:
        from .gates import PAULI_MATRICES

        m = np.ones((1, 1), dtype=np.complex128)
        for q in reversed(range(self.num_qubits)):
            m = np.kron(m, PAULI_MATRICES[self.letter(q)])
        return m

    def __str__(self):
        ops = [f"{self.letter(q)}{q}" for q in self.support]
        return " ".join(ops) if ops else "I"

    def __repr__(self):
        return f"PauliString({self.num_qubits}, {str(self)!r})"


@dataclass(frozen=True)
class PauliTerm:
    coeff: complex
    string: PauliString

    def __mul__(self, other):
        if isinstance(other, PauliTerm):
            return pauli_multiply(self, other)
        return PauliTerm(self.coeff * other, self.string)

    __rmul__ = __mul__


def pauli_multiply(a: PauliTerm, b: PauliTerm) -> PauliTerm:
    ph, s = a.string.multiply(b.string)
    return PauliTerm(a.coeff * b.coeff * ph, s)


class PauliSum:
    """Weighted sum of Pauli strings on a fixed number of qubits.

    Terms are kept in a dict keyed by string, so duplicates merge on
    insertion; :meth:`simplify` additionally drops tiny coefficients and
    puts the terms in canonical order.
    """

    def __init__(self, num_qubits: int, terms: Mapping[PauliString, complex] | Iterable = ()):
        self.num_qubits = num_qubits
        self._terms: dict[PauliString, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else terms
        for item in items:
            if isinstance(item, PauliTerm):
                s, c = item.string, item.coeff
            else:
                s, c = item
            self._add(s, c)

    def _add(self, s: PauliString, c: complex):
        if s.num_qubits != self.num_qubits:
            raise ValueError(
                f"term on {s.num_qubits} qubits added to sum on {self.num_qubits}")
        self._terms[s] = self._terms.get(s, 0j) + complex(c)

    @classmethod
    def from_string(cls, n: int, spec: str, coeff: complex = 1.0) -> "PauliSum":
        """``PauliSum.from_string(3, "X0 Z2", 0.5)``; ``"I"`` or ``""`` is identity."""
        return cls(n, [(parse_pauli_ops(n, spec), coeff)])

    @classmethod
    def identity(cls, n: int, coeff: complex = 1.0) -> "PauliSum":
        return cls(n, [(PauliString(n), coeff)])

    @property
    def terms(self) -> list[PauliTerm]:
        return [PauliTerm(c, s) for s, c in self._terms.items()]

    def items(self):
        return self._terms.items()

    def coeff(self, s: PauliString) -> complex:
        return self._terms.get(s, 0j)

    def __len__(self):
        return len(self._terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        out = self.copy()
        for s, c in other._terms.items():
            out._add(s, c)
        return out

    def __sub__(self, other: "PauliSum") -> "PauliSum":
        return self + other * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, other):
        if isinstance(other, PauliSum):
            if other.num_qubits != self.num_qubits:
                raise ValueError("qubit count mismatch")
            out = PauliSum(self.num_qubits)
            for sa, ca in self._terms.items():
                for sb, cb in other._terms.items():
                    ph, s = sa.multiply(sb)
                    out._add(s, ca * cb * ph)
            return out
        return PauliSum(self.num_qubits, {s: c * other for s, c in self._terms.items()})

    __rmul__ = __mul__

    def copy(self) -> "PauliSum":
        return PauliSum(self.num_qubits, dict(self._terms))

    def dagger(self) -> "PauliSum":
        # Pauli strings are Hermitian, so only the coefficients conjugate.
        return PauliSum(self.num_qubits, {s: c.conjugate() for s, c in self._terms.items()})

    def simplify(self, cutoff: float = SIMPLIFY_CUTOFF) -> "PauliSum":
        kept = [(s, c) for s, c in self._terms.items() if abs(c) > cutoff]
        kept.sort(key=lambda sc: sc[0].sort_key())
        return PauliSum(self.num_qubits, dict(kept))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.imag) <= tol for c in self._terms.values())

    def is_anti_hermitian(self, tol: float = 1e-12) -> bool:
        return all(abs(c.real) <= tol for c in self._terms.values())

    def assert_hermitian(self, tol: float = 1e-12) -> "PauliSum":
        if not self.is_hermitian(tol):
            raise ValueError("operator is not Hermitian (complex Pauli coefficients)")
        return self

    def equals(self, other: "PauliSum", tol: float = 1e-12) -> bool:
        if self.num_qubits != other.num_qubits:
            return False
        keys = set(self._terms) | set(other._terms)
        return all(abs(self.coeff(k) - other.coeff(k)) <= tol for k in keys)

    def to_matrix(self) -> np.ndarray:
        dim = 1 << self.num_qubits
        m = np.zeros((dim, dim), dtype=np.complex128)
        for s, c in self._terms.items():
            m += c * s.to_matrix()
        return m

    def __repr__(self):
        body = " + ".join(f"({c.real:.6g}{c.imag:+.6g}j)*[{s}]" for s, c in self._terms.items())
        return f"PauliSum({self.num_qubits}, {body or '0'})"


_OP_RE = re.compile(r"^([IXYZ])(\d+)$")


def parse_pauli_ops(n: int, spec: str) -> PauliString:
    toks = spec.replace(",", " ").split()
    if toks in ([], ["I"]):
        return PauliString(n)
    ops = []
    for tok in toks:
        m = _OP_RE.match(tok.upper())
        if not m:
            raise ValueError(f"bad Pauli token {tok!r}")
        ops.append((m.group(1), int(m.group(2))))
    return PauliString.from_ops(n, [(a, q) for a, q in ops if a != "I"])


def fmt_float(v: float) -> str:
    return "%.17g" % v


def is_finite_complex(c: complex) -> bool:
    return math.isfinite(c.real) and math.isfinite(c.imag)
