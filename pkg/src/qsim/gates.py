"""Single-qubit gate matrices and the standard gate library.

Rotation conventions used throughout the package:

* ``RZ(a) = diag(exp(-i a/2), exp(+i a/2))``
* ``RX(a) = exp(-i a X / 2)``
* ``YB = RX(pi/2)`` maps the Y eigenbasis onto the Z eigenbasis
  (``YB Y YB^dagger = Z``), ``YBDG`` is its inverse.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNITARY_TOL = 1e-12

_I2 = np.eye(2, dtype=np.complex128)
_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)

PAULI_MATRICES = {"I": _I2, "X": _X, "Y": _Y, "Z": _Z}


class NonUnitaryGateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Gate1Q:
    """A 2x2 gate matrix ``[[q11, q12], [q21, q22]]``.

    Construction checks unitarity; use :meth:`error_gate` for matrices that
    are deliberately allowed to be non-unitary.
    """

    matrix: np.ndarray
    unitary: bool = field(default=True)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128).reshape(2, 2)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        if self.unitary and not is_unitary(m):
            raise NonUnitaryGateError(f"gate matrix is not unitary:\n{m}")

    @classmethod
    def error_gate(cls, matrix) -> "Gate1Q":
        return cls(matrix, unitary=False)

    @property
    def q11(self) -> complex:
        return complex(self.matrix[0, 0])

    @property
    def q12(self) -> complex:
        return complex(self.matrix[0, 1])

    @property
    def q21(self) -> complex:
        return complex(self.matrix[1, 0])

    @property
    def q22(self) -> complex:
        return complex(self.matrix[1, 1])

    def dagger(self) -> "Gate1Q":
        return Gate1Q(self.matrix.conj().T, unitary=self.unitary)

    def __matmul__(self, other: "Gate1Q") -> "Gate1Q":
        return Gate1Q(self.matrix @ other.matrix, unitary=self.unitary and other.unitary)

    def __eq__(self, other):
        if not isinstance(other, Gate1Q):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix) and self.unitary == other.unitary

    def __hash__(self):
        return hash(self.matrix.tobytes())


def is_unitary(m: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    return bool(np.max(np.abs(m.conj().T @ m - _I2)) <= tol)


def rz(angle: float) -> Gate1Q:
    return Gate1Q(np.diag([np.exp(-0.5j * angle), np.exp(0.5j * angle)]))


def rx(angle: float) -> Gate1Q:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return Gate1Q([[c, -1j * s], [-1j * s, c]])


def ry(angle: float) -> Gate1Q:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    return Gate1Q([[c, -s], [s, c]])


def rotation(axis, angle: float) -> Gate1Q:
    """exp(-i angle/2 n.sigma) for a (not necessarily normalised) axis n."""
    n = np.asarray(axis, dtype=float)
    n = n / np.linalg.norm(n)
    ns = n[0] * _X + n[1] * _Y + n[2] * _Z
    return Gate1Q(np.cos(angle / 2) * _I2 - 1j * np.sin(angle / 2) * ns)


def phase(angle: float) -> Gate1Q:
    return Gate1Q(np.diag([1.0, np.exp(1j * angle)]))


H = Gate1Q(np.array([[1, 1], [1, -1]]) / np.sqrt(2))
X = Gate1Q(_X)
Y = Gate1Q(_Y)
Z = Gate1Q(_Z)
I = Gate1Q(_I2)
YB = rx(np.pi / 2)
YBDG = rx(-np.pi / 2)


def over_rotated_h(eps: float) -> Gate1Q:
    """Hadamard as a (pi + eps) rotation about (X+Z)/sqrt(2).

    The global phase ``i`` is restored so that ``eps = 0`` gives exactly H.
    """
    return Gate1Q(1j * rotation([1, 0, 1], np.pi + eps).matrix)


def over_rotated_rx(angle: float, eps: float) -> Gate1Q:
    """RX with its rotation magnitude increased by ``eps`` (sign preserved)."""
    return rx(angle + np.copysign(eps, angle))


def cnot_rotation(angle: float) -> Gate1Q:
    """Target unitary of a controlled X-rotation standing in for CNOT.

    ``i * RX(angle)`` equals X at ``angle = pi``, so a zero over-rotation
    reproduces an ideal CNOT.
    """
    return Gate1Q(1j * rx(angle).matrix)
