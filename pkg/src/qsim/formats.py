"""Text formats for fermionic operators, Pauli sums and cluster amplitudes."""

from __future__ import annotations

import re
from importlib import resources

from .fermion import FermionOp, FermionSum
from .pauli import PauliString, PauliSum, fmt_float


class ParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class RangeError(ParseError, IndexError):
    pass


def _lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line


def _header(it, key: str) -> int:
    try:
        lineno, line = next(it)
    except StopIteration:
        raise ParseError(0, f"missing '{key} <n>' line") from None
    toks = line.split()
    if len(toks) != 2 or toks[0] != key:
        raise ParseError(lineno, f"expected '{key} <n>', got {line!r}")
    try:
        n = int(toks[1])
    except ValueError:
        raise ParseError(lineno, f"bad count {toks[1]!r}") from None
    if n < 1:
        raise ParseError(lineno, f"{key} must be positive")
    return n


def _coeff(lineno: int, head: str) -> complex:
    toks = head.split()
    if len(toks) != 2:
        raise ParseError(lineno, "coefficient must be '<re> <im>'")
    try:
        return complex(float(toks[0]), float(toks[1]))
    except ValueError:
        raise ParseError(lineno, f"bad coefficient {head.strip()!r}") from None


_FTOK = re.compile(r"^(\d+)(\^?)$")


def parse_fermion_file(text: str) -> tuple[int, FermionSum]:
    it = _lines(text)
    n = _header(it, "modes")
    out = FermionSum(n)
    for lineno, line in it:
        if ":" not in line:
            raise ParseError(lineno, "missing ':' separator")
        head, tail = line.split(":", 1)
        c = _coeff(lineno, head)
        factors = []
        for tok in tail.split():
            m = _FTOK.match(tok)
            if not m:
                raise ParseError(lineno, f"bad ladder token {tok!r}")
            p = int(m.group(1))
            if p >= n:
                raise RangeError(lineno, f"mode {p} out of range for {n} modes")
            factors.append((p, bool(m.group(2))))
        out.append(c, FermionOp(tuple(factors)))
    return n, out


def write_fermion_file(f: FermionSum) -> str:
    lines = [f"modes {f.num_modes}"]
    for c, term in f.terms:
        lines.append(f"{fmt_float(c.real)} {fmt_float(c.imag)} : {term}".rstrip())
    return "\n".join(lines) + "\n"


_PTOK = re.compile(r"^([XYZ])(\d+)$")


def parse_pauli_file(text: str) -> tuple[int, PauliSum]:
    it = _lines(text)
    n = _header(it, "qubits")
    out = PauliSum(n)
    for lineno, line in it:
        if ":" not in line:
            raise ParseError(lineno, "missing ':' separator")
        head, tail = line.split(":", 1)
        c = _coeff(lineno, head)
        ops = []
        for tok in tail.split():
            m = _PTOK.match(tok)
            if not m:
                raise ParseError(lineno, f"bad Pauli token {tok!r}")
            q = int(m.group(2))
            if q >= n:
                raise RangeError(lineno, f"qubit {q} out of range for {n} qubits")
            ops.append((m.group(1), q))
        try:
            s = PauliString.from_ops(n, ops)
        except ValueError as exc:
            raise ParseError(lineno, str(exc)) from None
        out = out + PauliSum(n, [(s, c)])
    return n, out


def write_pauli_file(h: PauliSum) -> str:
    lines = [f"qubits {h.num_qubits}"]
    for s, c in h.items():
        body = "" if s.is_identity else " " + str(s)
        lines.append(f"{fmt_float(c.real)} {fmt_float(c.imag)} :{body}")
    return "\n".join(lines) + "\n"


def bundled_text(name: str) -> str:
    """Contents of a file shipped in ``qsim/data`` (e.g. ``toy4.ferm``)."""
    return resources.files("qsim").joinpath("data", name).read_text()
