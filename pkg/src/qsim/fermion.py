"""Fermionic ladder-operator sums and their Jordan-Wigner / Bravyi-Kitaev images."""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

from .pauli import PauliString, PauliSum

Ladder = tuple[int, bool]  # (mode, is_creation)


class Mapping(str, Enum):
    JW = "jw"
    BK = "bk"


@dataclass(frozen=True)
class FermionOp:
    """Ordered product of ladder operators; the leftmost factor acts last."""

    factors: tuple[Ladder, ...] = ()

    def dagger(self) -> "FermionOp":
        return FermionOp(tuple((p, not d) for p, d in reversed(self.factors)))

    def __str__(self):
        return " ".join(f"{p}^" if d else f"{p}" for p, d in self.factors)


def op(*tokens: str | Ladder) -> FermionOp:
    """``op("1^", "0")`` builds a_1^dagger a_0."""
    factors = []
    for t in tokens:
        if isinstance(t, tuple):
            factors.append((int(t[0]), bool(t[1])))
        elif t.endswith("^"):
            factors.append((int(t[:-1]), True))
        else:
            factors.append((int(t), False))
    return FermionOp(tuple(factors))


class FermionSum:
    def __init__(self, num_modes: int, terms: Iterable[tuple[complex, FermionOp]] = ()):
        self.num_modes = num_modes
        self.terms: list[tuple[complex, FermionOp]] = []
        for c, f in terms:
            self.append(c, f)

    def append(self, coeff: complex, f: FermionOp):
        for p, _ in f.factors:
            if not 0 <= p < self.num_modes:
                raise IndexError(f"mode {p} out of range for {self.num_modes} modes")
        self.terms.append((complex(coeff), f))

    def __add__(self, other: "FermionSum") -> "FermionSum":
        return FermionSum(max(self.num_modes, other.num_modes), self.terms + other.terms)

    def __mul__(self, scalar: complex) -> "FermionSum":
        return FermionSum(self.num_modes, [(c * scalar, f) for c, f in self.terms])

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1

    def __len__(self):
        return len(self.terms)

    def dagger(self) -> "FermionSum":
        return FermionSum(self.num_modes, [(c.conjugate(), f.dagger()) for c, f in self.terms])

    def collected(self, tol: float = 0.0) -> dict[FermionOp, complex]:
        """Coefficients merged per identical (un-normal-ordered) product."""
        out: dict[FermionOp, complex] = {}
        for c, f in self.terms:
            out[f] = out.get(f, 0j) + c
        return {f: c for f, c in out.items() if abs(c) > tol}

    def symbolically_equal(self, other: "FermionSum", tol: float = 1e-15) -> bool:
        a, b = self.collected(), other.collected()
        return all(abs(a.get(k, 0j) - b.get(k, 0j)) <= tol for k in set(a) | set(b))

    def is_anti_hermitian(self) -> bool:
        return self.dagger().symbolically_equal(-self)

    def __repr__(self):
        return f"FermionSum({self.num_modes}, {[(c, str(f)) for c, f in self.terms]})"


def number_operator(n: int) -> FermionSum:
    return FermionSum(n, [(1.0, FermionOp(((i, True), (i, False)))) for i in range(n)])


# --- Jordan-Wigner -----------------------------------------------------------

def _check_mode(p: int, n: int):
    if not 0 <= p < n:
        raise IndexError(f"mode {p} out of range for {n} modes")


def jw_ladder(p: int, dagger: bool, n: int) -> PauliSum:
    """Z-string on modes < p times sigma^-+ on p; creation maps |0> to |1>."""
    _check_mode(p, n)
    zs = (1 << p) - 1
    bit = 1 << p
    sign = -1 if dagger else 1
    return PauliSum(n, [
        (PauliString(n, bit, zs), 0.5),
        (PauliString(n, bit, zs | bit), sign * 0.5j),
    ])


def jw_creation(p: int, n: int) -> PauliSum:
    return jw_ladder(p, True, n)


def jw_annihilation(p: int, n: int) -> PauliSum:
    return jw_ladder(p, False, n)


# --- Bravyi-Kitaev (Fenwick tree, any n) -------------------------------------
#
# Qubit j stores the parity of occupations j+1-lowbit(j+1) .. j.

def _lowbit(i: int) -> int:
    return i & -i


@lru_cache(maxsize=None)
def bk_sets(p: int, n: int) -> tuple[frozenset, frozenset, frozenset]:
    """Return the (update, parity, flip) qubit sets for mode ``p``."""
    _check_mode(p, n)
    update = set()
    i = p + 1 + _lowbit(p + 1)
    while i <= n:
        update.add(i - 1)
        i += _lowbit(i)
    parity = set()
    i = p
    while i > 0:
        parity.add(i - 1)
        i -= _lowbit(i)
    flip = set()
    start = p + 1 - _lowbit(p + 1)
    i = p
    while i > start:
        flip.add(i - 1)
        i -= _lowbit(i)
    return frozenset(update), frozenset(parity), frozenset(flip)


def bk_covered_modes(j: int) -> range:
    """Occupation modes whose parity qubit ``j`` stores."""
    return range(j + 1 - _lowbit(j + 1), j + 1)


def bk_transform_mode(p: int, dagger: bool, n: int) -> PauliSum:
    """BK image: 1/2 (X_U X_p Z_P -+ i X_U Y_p Z_R) with R = P minus F."""
    update, parity, flip = bk_sets(p, n)
    xu = sum(1 << q for q in update)
    zp = sum(1 << q for q in parity)
    zr = sum(1 << q for q in parity - flip)
    bit = 1 << p
    sign = -1 if dagger else 1
    return PauliSum(n, [
        (PauliString(n, xu | bit, zp), 0.5),
        (PauliString(n, xu | bit, zr | bit), sign * 0.5j),
    ])


def ladder_image(p: int, dagger: bool, n: int, mapping: Mapping | str) -> PauliSum:
    mapping = Mapping(mapping)
    if mapping is Mapping.JW:
        return jw_ladder(p, dagger, n)
    return bk_transform_mode(p, dagger, n)


def fermion_to_pauli(f: FermionSum, mapping: Mapping | str, n: int | None = None,
                     cutoff: float = 1e-12) -> PauliSum:
    """Substitute every ladder operator by its qubit image and multiply out."""
    n = f.num_modes if n is None else n
    if f.num_modes > n:
        raise ValueError(f"operator declares {f.num_modes} modes, mapping onto {n}")
    mapping = Mapping(mapping)
    cache: dict[Ladder, PauliSum] = {}
    out = PauliSum(n)
    for coeff, term in f.terms:
        if coeff == 0:
            continue
        prod = PauliSum.identity(n, coeff)
        for lad in term.factors:
            if lad not in cache:
                cache[lad] = ladder_image(lad[0], lad[1], n, mapping)
            prod = prod * cache[lad]
        out = out + prod
    out = out.simplify(cutoff)
    if len(f) and f.is_anti_hermitian() and not out.is_anti_hermitian(1e-12):
        raise AssertionError("image of an anti-Hermitian operator has real coefficients")
    return out


def occupation_to_qubits(occupation: int, n: int, mapping: Mapping | str) -> int:
    """Encode an occupation bitmask as a computational-basis bitmask."""
    mapping = Mapping(mapping)
    if mapping is Mapping.JW:
        return occupation
    out = 0
    for j in range(n):
        par = 0
        for mode in bk_covered_modes(j):
            par ^= occupation >> mode & 1
        out |= par << j
    return out


def max_bk_weight(n: int) -> int:
    return 3 * max(1, (n - 1).bit_length()) + 1


def ladder_images(n: int, mapping: Mapping | str) -> Sequence[tuple[PauliSum, PauliSum]]:
    """(a_p, a_p^dagger) images for all modes."""
    return [(ladder_image(p, False, n, mapping), ladder_image(p, True, n, mapping))
            for p in range(n)]
