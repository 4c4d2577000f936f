"""Gate sequences with a time-step (noise clock) structure, and the text format."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from typing import Iterable, Iterator, Sequence

import numpy as np

from . import gates
from .gates import Gate1Q


class CircuitParseError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


@dataclass(frozen=True)
class GateOp:
    """One gate application.  ``control is None`` means single-qubit."""

    name: str
    gate: Gate1Q
    target: int
    control: int | None = None
    params: tuple[float, ...] = ()
    time_step: int = 0

    def __post_init__(self):
        if self.target < 0:
            raise IndexError("negative target qubit")
        if self.control is not None and self.control == self.target:
            raise ValueError(f"{self.name}: control and target are both qubit {self.target}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) if self.control is None else (self.control, self.target)

    @property
    def is_controlled(self) -> bool:
        return self.control is not None

    def to_line(self) -> str:
        fmt = "%.17g"
        if self.name == "U":
            vals = []
            for v in self.gate.matrix.reshape(-1):
                vals += [fmt % v.real, fmt % v.imag]
            head = f"U {self.target}" if self.control is None else f"CU {self.control} {self.target}"
            return head + " " + " ".join(vals)
        qs = " ".join(str(q) for q in self.qubits)
        ps = "".join(" " + fmt % p for p in self.params)
        return f"{self.name} {qs}{ps}"


@dataclass
class Circuit:
    num_qubits: int
    ops: list[GateOp] = field(default_factory=list)
    global_phase: float = 0.0
    unitary: bool = True

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("a circuit needs at least one qubit")

    # construction -----------------------------------------------------------

    def append(self, op: GateOp, time_step: int | None = None) -> "Circuit":
        for q in op.qubits:
            if q >= self.num_qubits:
                raise IndexError(f"{op.name} on qubit {q} of a {self.num_qubits}-qubit circuit")
        if time_step is None:
            time_step = self.ops[-1].time_step + 1 if self.ops else 0
        if self.ops and time_step < self.ops[-1].time_step:
            raise ValueError("time steps must be nondecreasing")
        self.unitary = self.unitary and op.gate.unitary
        self.ops.append(replace(op, time_step=time_step))
        return self

    def extend(self, ops: Iterable[GateOp]) -> "Circuit":
        for o in ops:
            self.append(o)
        return self

    def h(self, q):
        return self.append(GateOp("H", gates.H, q))

    def x(self, q):
        return self.append(GateOp("X", gates.X, q))

    def yb(self, q):
        return self.append(GateOp("YB", gates.YB, q))

    def ybdg(self, q):
        return self.append(GateOp("YBDG", gates.YBDG, q))

    def rz(self, q, angle):
        return self.append(GateOp("RZ", gates.rz(angle), q, params=(float(angle),)))

    def rx(self, q, angle):
        return self.append(GateOp("RX", gates.rx(angle), q, params=(float(angle),)))

    def cnot(self, c, t):
        return self.append(GateOp("CNOT", gates.X, t, c))

    def crx(self, c, t, angle):
        return self.append(GateOp("CRX", gates.rx(angle), t, c, params=(float(angle),)))

    def cp(self, c, t, angle):
        return self.append(GateOp("CP", gates.phase(angle), t, c, params=(float(angle),)))

    def u(self, q, gate: Gate1Q | np.ndarray, control: int | None = None):
        g = gate if isinstance(gate, Gate1Q) else Gate1Q(gate)
        return self.append(GateOp("U", g, q, control))

    # views ------------------------------------------------------------------

    def __len__(self):
        return len(self.ops)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    @property
    def gate_count(self) -> int:
        return len(self.ops)

    @property
    def num_steps(self) -> int:
        return len({o.time_step for o in self.ops})

    def steps(self) -> list[list[GateOp]]:
        """Ops grouped by time step, in order."""
        out: list[list[GateOp]] = []
        last = None
        for o in self.ops:
            if o.time_step != last:
                out.append([])
                last = o.time_step
            out[-1].append(o)
        return out

    def serialized(self) -> "Circuit":
        c = Circuit(self.num_qubits, global_phase=self.global_phase)
        return c.extend(replace(o, time_step=0) for o in self.ops)

    def layered(self) -> "Circuit":
        """Reschedule so gates on disjoint qubits share a time step (ASAP)."""
        free_at = [0] * self.num_qubits
        placed = []
        for o in self.ops:
            step = max(free_at[q] for q in o.qubits)
            for q in o.qubits:
                free_at[q] = step + 1
            placed.append((step, len(placed), o))
        placed.sort(key=lambda t: (t[0], t[1]))
        c = Circuit(self.num_qubits, global_phase=self.global_phase)
        for step, _, o in placed:
            c.append(o, time_step=step)
        return c

    def compiled(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays (mats, targets, controls) consumed by the compiled kernels."""
        return compile_ops(self.ops)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.num_qubits != self.num_qubits:
            raise ValueError("qubit count mismatch")
        c = Circuit(self.num_qubits, global_phase=self.global_phase + other.global_phase)
        c.extend(self.ops)
        c.extend(other.ops)
        return c

    # text format ------------------------------------------------------------

    def to_text(self, header: Sequence[str] = ()) -> str:
        lines = [f"# {h}" for h in header]
        lines += [o.to_line() for o in self.ops]
        return "\n".join(lines) + "\n"


def compile_ops(ops: Sequence[GateOp]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    k = len(ops)
    mats = np.empty((k, 2, 2), dtype=np.complex128)
    targets = np.empty(k, dtype=np.int64)
    controls = np.empty(k, dtype=np.int64)
    for i, o in enumerate(ops):
        mats[i] = o.gate.matrix
        targets[i] = o.target
        controls[i] = -1 if o.control is None else o.control
    return mats, targets, controls


_ARITY = {  # name -> (qubits, float params)
    "H": (1, 0), "YB": (1, 0), "YBDG": (1, 0), "X": (1, 0),
    "RZ": (1, 1), "RX": (1, 1), "CNOT": (2, 0), "CRX": (2, 1), "CP": (2, 1),
    "U": (1, 8), "CU": (2, 8),
}


def parse_circuit(text: str, num_qubits: int | None = None) -> tuple[Circuit, dict[str, str]]:
    """Parse the circuit text format.  Returns the circuit and its ``# key value`` headers."""
    headers: dict[str, str] = {}
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line, _, comment = raw.partition("#")
        if not line.strip():
            parts = comment.strip().split(None, 1)
            if len(parts) == 2 and not rows:
                headers.setdefault(parts[0], parts[1].strip())
            continue
        rows.append((lineno, line.split()))
    if num_qubits is None:
        if "qubits" in headers:
            num_qubits = int(headers["qubits"])
        else:
            used = [int(t) for _, toks in rows for t in toks[1:1 + _ARITY.get(toks[0].upper(), (0, 0))[0]]]
            num_qubits = max(used, default=0) + 1
    circ = Circuit(num_qubits)
    for lineno, toks in rows:
        name = toks[0].upper()
        if name not in _ARITY:
            raise CircuitParseError(lineno, f"unknown gate {toks[0]!r}")
        nq, npar = _ARITY[name]
        if len(toks) != 1 + nq + npar:
            raise CircuitParseError(lineno, f"{name} expects {nq} qubits and {npar} parameters")
        try:
            qs = [int(t) for t in toks[1:1 + nq]]
            ps = [float(t) for t in toks[1 + nq:]]
        except ValueError as exc:
            raise CircuitParseError(lineno, str(exc)) from None
        try:
            if name in ("U", "CU"):
                m = np.array([complex(ps[i], ps[i + 1]) for i in range(0, 8, 2)]).reshape(2, 2)
                g = Gate1Q(m) if gates.is_unitary(m) else Gate1Q.error_gate(m)
                circ.append(GateOp("U", g, qs[-1], qs[0] if nq == 2 else None))
            else:
                getattr(circ, name.lower())(*qs, *ps)
        except (IndexError, ValueError) as exc:
            raise CircuitParseError(lineno, str(exc)) from None
    if "global_phase" in headers:
        circ.global_phase = float(headers["global_phase"])
    return circ, headers


def content_hash(data: bytes) -> str:
    """Git blob id of ``data``."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()
